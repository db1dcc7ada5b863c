//! Method of characteristics on a common time step `Δt = min Δl/c`.
//!
//! Along `dl/dt = ±c` the characteristic variables
//! `w¹ = (Sπ + cm)/(2c)` and `w² = (−Sπ + cm)/(2c)` obey
//! `dw/dt = −λc²m|m|/(4DSπ)`, integrated with the trapezoidal rule. Pipes
//! whose own Courant number is below one take the foot of each
//! characteristic by linear interpolation on the old level.

use serde_json::json;

use crate::baselines::newton::NewtonConfig;
use crate::baselines::stepper::{march, MarchSetup, PipeConsts, PipeScheme};
use crate::discretization::{make_grids, Layout};
use crate::equations::{RowBuilder, FLOW_SCALE};
use crate::error::{Error, Result};
use crate::scenario::Scenario;
use crate::system::IegsSystem;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MocConfig {
    pub dx_m: f64,
    pub sample_dt: f64,
    pub newton: NewtonConfig,
}

impl Default for MocConfig {
    fn default() -> Self {
        Self {
            dx_m: 1000.0,
            sample_dt: 60.0,
            newton: NewtonConfig::default(),
        }
    }
}

/// `(w¹, w²)` from `(π, m)`.
pub fn to_characteristic(pi: f64, m: f64, area: f64, c: f64) -> (f64, f64) {
    ((area * pi + c * m) / (2.0 * c), (-area * pi + c * m) / (2.0 * c))
}

/// `(π, m)` from `(w¹, w²)`.
pub fn from_characteristic(w1: f64, w2: f64, area: f64, c: f64) -> (f64, f64) {
    (c * (w1 - w2) / area, w1 + w2)
}

struct Moc {
    pipes: Vec<PipeConsts>,
    layout: Layout,
}

/// Indices and weights of the two old-level points that interpolate the
/// foot of a characteristic.
struct Foot {
    near: usize,
    far: usize,
    /// Weight of the far point, the Courant number of the pipe.
    w: f64,
}

impl Moc {
    fn rows(&self, j: usize, dt: f64) -> Vec<(bool, usize, Foot)> {
        let p = &self.pipes[j];
        let courant = (p.sound_speed * dt / p.dl).min(1.0);
        let mut rows = Vec::with_capacity(2 * p.n_seg);
        for n in 1..=p.n_seg {
            rows.push((
                true,
                n,
                Foot {
                    near: n,
                    far: n - 1,
                    w: courant,
                },
            ));
        }
        for n in 0..p.n_seg {
            rows.push((
                false,
                n,
                Foot {
                    near: n,
                    far: n + 1,
                    w: courant,
                },
            ));
        }
        rows
    }

    fn foot_state(&self, j: usize, f: &Foot, xo: &[f64]) -> (f64, f64) {
        let l = &self.layout;
        let pi = (1.0 - f.w) * xo[l.pi(j, f.near)] + f.w * xo[l.pi(j, f.far)];
        let m = (1.0 - f.w) * xo[l.m(j, f.near)] + f.w * xo[l.m(j, f.far)];
        (pi, m)
    }
}

fn positive(pi: f64, at: &str) -> Result<()> {
    if pi > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("nonpositive pressure {pi} at {at}")))
    }
}

impl PipeScheme for Moc {
    fn residual(&self, xn: &[f64], xo: &[f64], dt: f64, out: &mut Vec<f64>) -> Result<()> {
        let l = &self.layout;
        for (j, p) in self.pipes.iter().enumerate() {
            let c = p.sound_speed;
            for (plus, n, foot) in self.rows(j, dt) {
                let (pf, mf) = self.foot_state(j, &foot, xo);
                let (pn, mn) = (xn[l.pi(j, n)], xn[l.m(j, n)]);
                positive(pf, "a characteristic foot")?;
                positive(pn, "a characteristic head")?;
                let (zf, _, _) = p.friction_term(mf, pf);
                let (zn, _, _) = p.friction_term(mn, pn);
                let (a1, a2) = to_characteristic(pn, mn, p.area, c);
                let (f1, f2) = to_characteristic(pf, mf, p.area, c);
                let (wn, wf) = if plus { (a1, f1) } else { (a2, f2) };
                out.push((wn - wf + dt * (zf + zn) / 4.0) / FLOW_SCALE);
            }
        }
        Ok(())
    }

    fn jacobian(&self, xn: &[f64], xo: &[f64], dt: f64, wrt_old: bool, out: &mut RowBuilder) {
        let l = &self.layout;
        let mut r = 0;
        for (j, p) in self.pipes.iter().enumerate() {
            let c = p.sound_speed;
            for (plus, n, foot) in self.rows(j, dt) {
                let sign = if plus { 1.0 } else { -1.0 };
                // ∂w/∂π = ±S/(2c), ∂w/∂m = 1/2
                let (dw_pi, dw_m) = (sign * p.area / (2.0 * c), 0.5);
                if wrt_old {
                    let (pf, mf) = self.foot_state(j, &foot, xo);
                    let (_, dz_m, dz_pi) = p.friction_term(mf, pf);
                    for (pt, w) in [(foot.near, 1.0 - foot.w), (foot.far, foot.w)] {
                        if w != 0.0 {
                            out.push(r, l.pi(j, pt), w * (-dw_pi + dt * dz_pi / 4.0) / FLOW_SCALE);
                            out.push(r, l.m(j, pt), w * (-dw_m + dt * dz_m / 4.0) / FLOW_SCALE);
                        }
                    }
                } else {
                    let (_, dz_m, dz_pi) = p.friction_term(xn[l.m(j, n)], xn[l.pi(j, n)]);
                    out.push(r, l.pi(j, n), (dw_pi + dt * dz_pi / 4.0) / FLOW_SCALE);
                    out.push(r, l.m(j, n), (dw_m + dt * dz_m / 4.0) / FLOW_SCALE);
                }
                r += 1;
            }
        }
    }
}

/// Common characteristic step for the given grid spacing.
pub fn moc_time_step(system: &IegsSystem, dx_m: f64) -> f64 {
    make_grids(system, dx_m)
        .iter()
        .map(|g| g.dl_m)
        .fold(f64::INFINITY, f64::min)
        / system.gas.sound_speed_mps
}

/// Characteristic-line reference solution.
pub fn moc_solve(system: &IegsSystem, scenario: &Scenario, cfg: &MocConfig) -> Result<Trajectory> {
    if !(cfg.dx_m > 0.0) {
        return Err(Error::Range(format!("spatial step must be positive, got {}", cfg.dx_m)));
    }
    let grids = make_grids(system, cfg.dx_m);
    let dt = moc_time_step(system, cfg.dx_m);
    march(
        MarchSetup {
            system,
            scenario,
            grids,
            dt,
            sample_dt: cfg.sample_dt,
            newton: cfg.newton,
            method: "moc",
            parameters: json!({ "dx_m": cfg.dx_m, "dt_s": dt, "sample_dt_s": cfg.sample_dt, "newton": cfg.newton }),
        },
        |layout| Moc {
            pipes: PipeConsts::for_layout(system, layout),
            layout: layout.clone(),
        },
    )
}
