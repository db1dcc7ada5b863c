//! Implicit finite difference baselines on each pipeline cell `[n, n+1]`:
//! the implicit Euler stencil (space and friction at the new level, point
//! `n+1`) and the implicit central box stencil (four-point averages).

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::baselines::newton::NewtonConfig;
use crate::baselines::stepper::{march, MarchSetup, PipeConsts, PipeScheme};
use crate::discretization::{make_grids, Layout};
use crate::equations::{RowBuilder, FLOW_SCALE, PRESSURE_SCALE};
use crate::error::{Error, Result};
use crate::scenario::Scenario;
use crate::system::IegsSystem;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FdmScheme {
    ImplicitEuler,
    ImplicitCentral,
}

impl FdmScheme {
    pub fn name(self) -> &'static str {
        match self {
            FdmScheme::ImplicitEuler => "ieuler",
            FdmScheme::ImplicitCentral => "icentral",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdmConfig {
    pub scheme: FdmScheme,
    pub dx_m: f64,
    pub dt_s: f64,
    pub sample_dt: f64,
    pub newton: NewtonConfig,
}

impl FdmConfig {
    pub fn new(scheme: FdmScheme, dx_m: f64, dt_s: f64) -> Self {
        Self {
            scheme,
            dx_m,
            dt_s,
            sample_dt: 60.0,
            newton: NewtonConfig::default(),
        }
    }
}

/// Stencil weights of one cell: `(new n, new n+1, old n, old n+1)`.
struct Weights {
    time: [f64; 4],
    space: [f64; 4],
    value: [f64; 4],
}

impl FdmScheme {
    fn weights(self) -> Weights {
        match self {
            FdmScheme::ImplicitEuler => Weights {
                time: [0.0, 1.0, 0.0, -1.0],
                space: [-1.0, 1.0, 0.0, 0.0],
                value: [0.0, 1.0, 0.0, 0.0],
            },
            FdmScheme::ImplicitCentral => Weights {
                time: [0.5, 0.5, -0.5, -0.5],
                space: [-0.5, 0.5, -0.5, 0.5],
                value: [0.25; 4],
            },
        }
    }
}

struct Fdm {
    pipes: Vec<PipeConsts>,
    layout: Layout,
    w: Weights,
}

impl Fdm {
    /// Variable indices of the four stencil points for cell `n` of pipe `j`
    /// and whether each lives on the new level.
    fn corners(&self, j: usize, n: usize) -> [(usize, usize, bool); 4] {
        let l = &self.layout;
        [
            (l.pi(j, n), l.m(j, n), true),
            (l.pi(j, n + 1), l.m(j, n + 1), true),
            (l.pi(j, n), l.m(j, n), false),
            (l.pi(j, n + 1), l.m(j, n + 1), false),
        ]
    }
}

impl PipeScheme for Fdm {
    // rows are multiplied by dt so they carry state units
    fn residual(&self, xn: &[f64], xo: &[f64], dt: f64, out: &mut Vec<f64>) -> Result<()> {
        for (j, p) in self.pipes.iter().enumerate() {
            let c2s = p.sound_speed * p.sound_speed / p.area;
            for n in 0..p.n_seg {
                let (mut dpi_t, mut dm_t, mut dpi_l, mut dm_l, mut pi, mut m) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
                for (q, (ip, im, new)) in self.corners(j, n).into_iter().enumerate() {
                    let x = if new { xn } else { xo };
                    dpi_t += self.w.time[q] * x[ip];
                    dm_t += self.w.time[q] * x[im];
                    dpi_l += self.w.space[q] * x[ip];
                    dm_l += self.w.space[q] * x[im];
                    pi += self.w.value[q] * x[ip];
                    m += self.w.value[q] * x[im];
                }
                if !(pi > 0.0) {
                    return Err(Error::Domain(format!(
                        "nonpositive pressure {pi} in pipeline {j} cell {n}"
                    )));
                }
                let (fr, _, _) = p.friction_term(m, pi);
                out.push((dpi_t + dt * c2s * dm_l / p.dl) / PRESSURE_SCALE);
                out.push((dm_t + dt * p.area * dpi_l / p.dl + dt * fr) / FLOW_SCALE);
            }
        }
        Ok(())
    }

    fn jacobian(&self, xn: &[f64], xo: &[f64], dt: f64, wrt_old: bool, out: &mut RowBuilder) {
        let mut r = 0;
        for (j, p) in self.pipes.iter().enumerate() {
            let c2s = p.sound_speed * p.sound_speed / p.area;
            for n in 0..p.n_seg {
                let corners = self.corners(j, n);
                let (mut pi, mut m) = (0.0, 0.0);
                for (q, (ip, im, new)) in corners.into_iter().enumerate() {
                    let x = if new { xn } else { xo };
                    pi += self.w.value[q] * x[ip];
                    m += self.w.value[q] * x[im];
                }
                let (_, dfr_m, dfr_pi) = p.friction_term(m, pi);
                for (q, (ip, im, new)) in corners.into_iter().enumerate() {
                    if new == wrt_old {
                        continue;
                    }
                    let (wt, ws, wv) = (self.w.time[q], self.w.space[q], self.w.value[q]);
                    out.push(r, ip, wt / PRESSURE_SCALE);
                    out.push(r, im, dt * c2s * ws / p.dl / PRESSURE_SCALE);
                    out.push(r + 1, ip, (dt * p.area * ws / p.dl + dt * dfr_pi * wv) / FLOW_SCALE);
                    out.push(r + 1, im, (wt + dt * dfr_m * wv) / FLOW_SCALE);
                }
                r += 2;
            }
        }
    }
}

/// Fixed-step implicit finite difference solution.
pub fn fdm_solve(system: &IegsSystem, scenario: &Scenario, cfg: &FdmConfig) -> Result<Trajectory> {
    if !(cfg.dx_m > 0.0) {
        return Err(Error::Range(format!("spatial step must be positive, got {}", cfg.dx_m)));
    }
    let grids = make_grids(system, cfg.dx_m);
    march(
        MarchSetup {
            system,
            scenario,
            grids,
            dt: cfg.dt_s,
            sample_dt: cfg.sample_dt,
            newton: cfg.newton,
            method: cfg.scheme.name(),
            parameters: json!({
                "scheme": cfg.scheme,
                "dx_m": cfg.dx_m,
                "dt_s": cfg.dt_s,
                "sample_dt_s": cfg.sample_dt,
                "newton": cfg.newton,
            }),
        },
        |layout| Fdm {
            pipes: PipeConsts::for_layout(system, layout),
            layout: layout.clone(),
            w: cfg.scheme.weights(),
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::moc::{moc_solve, MocConfig};
    use crate::fixtures;

    fn max_rel_drift(t: &Trajectory) -> f64 {
        t.values
            .iter()
            .flat_map(|r| {
                r.iter()
                    .zip(&t.values[0])
                    .map(|(a, b)| (a - b).abs() / b.abs().max(1.0))
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn steady_state_is_preserved_for_any_step() {
        let sys = fixtures::single_pipe_system();
        let sc = fixtures::single_pipe_constant_scenario(3600.0);
        for scheme in [FdmScheme::ImplicitEuler, FdmScheme::ImplicitCentral] {
            for dt in [10.0, 600.0] {
                let t = fdm_solve(&sys, &sc, &FdmConfig::new(scheme, 2000.0, dt)).unwrap();
                assert!(max_rel_drift(&t) < 1e-9, "{scheme:?} dt {dt}");
            }
        }
    }

    #[test]
    fn step_count_is_horizon_over_step() {
        let sys = fixtures::single_pipe_system();
        let sc = fixtures::single_pipe_scenario();
        let t = fdm_solve(&sys, &sc, &FdmConfig::new(FdmScheme::ImplicitEuler, 5000.0, 180.0)).unwrap();
        assert_eq!(t.provenance.steps, 60);
        assert_eq!(t.times.len(), 181);
    }

    #[test]
    fn euler_error_shrinks_with_the_step() {
        let sys = fixtures::single_pipe_system();
        let mut sc = fixtures::single_pipe_scenario();
        sc.horizon_s = 3600.0;
        let reference = moc_solve(
            &sys,
            &sc,
            &MocConfig {
                dx_m: 2000.0,
                ..Default::default()
            },
        )
        .unwrap();
        let r = reference.column("pipe.pipe.m.0").unwrap();
        let rmse = |dt: f64| {
            let t = fdm_solve(&sys, &sc, &FdmConfig::new(FdmScheme::ImplicitEuler, 2000.0, dt)).unwrap();
            let c = t.column("pipe.pipe.m.0").unwrap();
            (c.iter().zip(&r).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / c.len() as f64).sqrt()
        };
        let coarse = rmse(180.0);
        let fine = rmse(9.0);
        assert!(fine * 5.0 < coarse, "{fine} vs {coarse}");
    }

    #[test]
    fn central_scheme_oscillates_after_the_step() {
        let sys = fixtures::single_pipe_system();
        let mut sc = fixtures::single_pipe_scenario();
        sc.horizon_s = 3600.0;
        let mut cfg = FdmConfig::new(FdmScheme::ImplicitCentral, 1000.0, 60.0);
        cfg.sample_dt = 60.0;
        let t = fdm_solve(&sys, &sc, &cfg).unwrap();
        // the point next to the stepped outlet
        let m = t.column("pipe.pipe.m.49").unwrap();
        let k0 = t.times.iter().position(|&s| s == 1800.0).unwrap();
        let d: Vec<f64> = (k0 + 1..k0 + 9).map(|k| m[k + 1] - m[k]).collect();
        let flips = d.windows(2).filter(|w| w[0] * w[1] < 0.0).count();
        assert!(flips >= 6, "differences {d:?}");
        assert!(m.iter().all(|v| v.abs() < 10.0));
    }
}
