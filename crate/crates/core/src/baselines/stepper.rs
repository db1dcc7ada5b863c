//! Fixed-step time marching shared by the characteristic and finite
//! difference baselines. Each level solves the scheme's pipeline rows
//! together with the network rows by Newton, warm-started from the previous
//! level.

use std::time::Instant;

use crate::baselines::newton::{newton, NewtonConfig};
use crate::discretization::{Layout, PipelineGrid};
use crate::equations::{NetworkRows, RowBuilder};
use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;
use crate::scenario::{steady_state_init, BoundSignals, InitMode, Scenario};
use crate::system::IegsSystem;
use crate::trajectory::{sample_times, Provenance, Trajectory, TrajectoryBuilder};

/// Physical constants of one pipeline on its grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipeConsts {
    pub area: f64,
    pub sound_speed: f64,
    /// `λc²/(2DS)`.
    pub friction: f64,
    pub dl: f64,
    pub n_seg: usize,
}

impl PipeConsts {
    pub fn for_layout(system: &IegsSystem, layout: &Layout) -> Vec<Self> {
        let c = system.gas.sound_speed_mps;
        layout
            .grids
            .iter()
            .map(|g| {
                let p = &system.gas.pipelines[g.pipe];
                Self {
                    area: p.cross_section_m2,
                    sound_speed: c,
                    friction: p.friction_factor(c),
                    dl: g.dl_m,
                    n_seg: g.n_seg,
                }
            })
            .collect()
    }

    /// `λc²m|m|/(2DSπ)` and its partial derivatives in `m` and `π`.
    pub fn friction_term(&self, m: f64, pi: f64) -> (f64, f64, f64) {
        let v = self.friction * m * m.abs() / pi;
        (v, 2.0 * self.friction * m.abs() / pi, -v / pi)
    }
}

/// Pipeline rows of a two-level scheme. Row count per pipeline is `2·n_seg`.
pub trait PipeScheme {
    /// Scaled residuals of every pipeline row for new level `xn`, old level
    /// `xo` and step `dt`.
    fn residual(&self, xn: &[f64], xo: &[f64], dt: f64, out: &mut Vec<f64>) -> Result<()>;

    /// Jacobian entries of the scaled rows with respect to the new level
    /// (`wrt_old = false`) or the old level.
    fn jacobian(&self, xn: &[f64], xo: &[f64], dt: f64, wrt_old: bool, out: &mut RowBuilder);
}

pub struct Marcher<'a, S: PipeScheme> {
    pub layout: &'a Layout,
    pub net: &'a NetworkRows,
    pub scheme: &'a S,
    pub pipe_rows: usize,
}

impl<'a, S: PipeScheme> Marcher<'a, S> {
    pub fn new(layout: &'a Layout, net: &'a NetworkRows, scheme: &'a S) -> Result<Self> {
        let pipe_rows: usize = layout.grids.iter().map(|g| 2 * g.n_seg).sum();
        if pipe_rows + net.len() != layout.len() {
            return Err(Error::Structural(format!(
                "{} scheme rows and {} network rows for {} unknowns",
                pipe_rows,
                net.len(),
                layout.len()
            )));
        }
        Ok(Self {
            layout,
            net,
            scheme,
            pipe_rows,
        })
    }

    fn residual(&self, xn: &[f64], xo: &[f64], dt: f64, sig: &[f64]) -> Result<Vec<f64>> {
        let mut r = Vec::with_capacity(self.layout.len());
        self.scheme.residual(xn, xo, dt, &mut r)?;
        for row in &self.net.rows {
            r.push((self.net.lhs(row, xn) - NetworkRows::rhs(row, sig)) / row.scale);
        }
        Ok(r)
    }

    fn jacobian(&self, xn: &[f64], xo: &[f64], dt: f64, steady: bool) -> SparseMatrix {
        let mut t = RowBuilder::new();
        self.scheme.jacobian(xn, xo, dt, false, &mut t);
        if steady {
            self.scheme.jacobian(xn, xo, dt, true, &mut t);
        }
        for (r, row) in self.net.rows.iter().enumerate() {
            self.net
                .row_jacobian(row, xn, |c, v| t.push(self.pipe_rows + r, c, v / row.scale));
        }
        let n = self.layout.len();
        SparseMatrix::from_triplets(n, n, &t.into_triplets())
    }

    /// Fixed point of the step map under constant boundary values.
    pub fn settle(&self, x0: Vec<f64>, dt: f64, sig: &[f64], cfg: &NewtonConfig) -> Result<Vec<f64>> {
        newton(
            |x| self.residual(x, x, dt, sig),
            |x| Ok(self.jacobian(x, x, dt, true)),
            x0,
            cfg,
        )
        .map(|s| s.x)
        .map_err(|e| e.with_context("while settling the discrete steady state"))
    }

    /// One level: solves for the state at `t + dt` given `xo` at `t`.
    pub fn step(&self, xo: &[f64], dt: f64, sig: &[f64], cfg: &NewtonConfig) -> Result<(Vec<f64>, usize)> {
        newton(
            |x| self.residual(x, xo, dt, sig),
            |x| Ok(self.jacobian(x, xo, dt, false)),
            xo.to_vec(),
            cfg,
        )
        .map(|s| (s.x, s.iterations))
    }
}

/// Common driver settings.
pub struct MarchSetup<'a> {
    pub system: &'a IegsSystem,
    pub scenario: &'a Scenario,
    pub grids: Vec<PipelineGrid>,
    pub dt: f64,
    pub sample_dt: f64,
    pub newton: NewtonConfig,
    pub method: &'a str,
    pub parameters: serde_json::Value,
}

/// Marches from the scheme's own steady state (or the explicit initial
/// state) to the horizon with steps of `dt`, the last one shortened to land
/// on the horizon. Samples are linear interpolations between levels.
pub fn march<S: PipeScheme>(setup: MarchSetup, make_scheme: impl FnOnce(&Layout) -> S) -> Result<Trajectory> {
    let clock = Instant::now();
    let MarchSetup {
        system,
        scenario,
        grids,
        dt,
        sample_dt,
        newton: ncfg,
        method,
        parameters,
    } = setup;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Range(format!("time step must be positive, got {dt}")));
    }
    ncfg.validate()?;
    let signals = BoundSignals::bind(system, &scenario.boundaries, scenario.horizon_s)?;
    let layout = Layout::new(system, grids.clone());
    let net = NetworkRows::build(system, &layout, &signals);
    let scheme = make_scheme(&layout);
    let marcher = Marcher::new(&layout, &net, &scheme)?;
    let horizon = scenario.horizon_s;
    let sig0 = signals.values(0.0)?;
    let mut x = match &scenario.init {
        InitMode::Steady => {
            let init = steady_state_init(system, &signals, &grids, &ncfg)?;
            marcher.settle(init.to_vector(&layout)?, dt, &sig0, &ncfg)?
        }
        InitMode::Explicit(state) => state.to_vector(&layout)?,
    };
    let times = sample_times(horizon, sample_dt)?;
    let mut out = TrajectoryBuilder::new(system, &layout);
    let mut prov = Provenance::new(method, parameters, system, &layout);
    let mut next = 0;
    while next < times.len() && times[next] <= 0.0 {
        out.push(times[next], &x);
        next += 1;
    }
    let mut t = 0.0;
    let mut steps = 0;
    let mut iterations = 0;
    while t < horizon {
        let h = if t + dt > horizon - 1e-9 * horizon {
            horizon - t
        } else {
            dt
        };
        let t_new = if h == dt { t + dt } else { horizon };
        let sig = signals.values(t_new)?;
        let (xn, its) = marcher.step(&x, h, &sig, &ncfg).map_err(|e| match e {
            Error::Divergence {
                iterations,
                residual,
                context,
            } => Error::Divergence {
                iterations,
                residual,
                context: format!("{context} at t = {t_new:.3} s"),
            },
            other => other,
        })?;
        iterations += its;
        while next < times.len() && times[next] <= t_new {
            let w = (times[next] - t) / (t_new - t);
            let row: Vec<f64> = x.iter().zip(&xn).map(|(a, b)| a + w * (b - a)).collect();
            out.push(times[next], &row);
            next += 1;
        }
        x = xn;
        t = t_new;
        steps += 1;
    }
    prov.steps = steps;
    if let serde_json::Value::Object(map) = &mut prov.parameters {
        map.insert("newton_iterations".into(), iterations.into());
    }
    prov.wall_clock_s = clock.elapsed().as_secs_f64();
    Ok(out.finish(prov))
}
