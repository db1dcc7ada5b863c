//! Adaptive-window time stepping with the differential transformation.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::baselines::newton::NewtonConfig;
use crate::discretization::make_grids;
use crate::error::{Error, Result};
use crate::scenario::{steady_state_init, BoundSignals, InitMode, Scenario};
use crate::solver::blocks::BlockSystem;
use crate::solver::controller::{adapt_window, window_error, WindowControlConfig};
use crate::solver::semidiscrete::SemiDiscrete;
use crate::system::IegsSystem;
use crate::taylor::eval_slice;
use crate::trajectory::{sample_times, ControllerUpdate, Provenance, Trajectory, TrajectoryBuilder, WindowRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DtConfig {
    pub order: usize,
    pub dx_m: f64,
    pub sample_dt: f64,
    /// Upper bound on `dt·c/Δl` for every pipeline. The truncated Taylor
    /// polynomial is only stable for moderate multiples of the wave transit
    /// time of one segment, and the truncation estimate cannot see a growing
    /// mode until it reaches the tolerance.
    pub courant_max: f64,
    pub control: WindowControlConfig,
    pub newton: NewtonConfig,
}

impl Default for DtConfig {
    fn default() -> Self {
        Self {
            order: 5,
            dx_m: 1000.0,
            sample_dt: 60.0,
            courant_max: 2.0,
            control: WindowControlConfig::default(),
            newton: NewtonConfig {
                tol: 1e-10,
                ..Default::default()
            },
        }
    }
}

/// Series of one accepted window, handed to observers.
pub struct WindowView<'a> {
    pub t0: f64,
    pub dt: f64,
    /// `coef[k][var]`.
    pub coef: &'a [Vec<f64>],
    /// Signal Taylor coefficients `taylor[sig][k]` about `t0`.
    pub taylor: &'a [Vec<f64>],
    pub signs: &'a [f64],
    pub sd: &'a SemiDiscrete,
    pub blocks: &'a BlockSystem,
}

/// Flow magnitude below which a sign change inside a window is ignored.
const CROSSING_FLOOR: f64 = 1e-6;
const CROSSING_SAMPLES: usize = 32;

/// Earliest offset in `(0, dt]` where an interior flow series changes sign
/// against its frozen sign, located by bisection.
fn first_crossing(sd: &SemiDiscrete, coef: &[Vec<f64>], signs: &[f64], dt: f64) -> Option<f64> {
    let mut earliest: Option<f64> = None;
    let mut series = vec![0.0; coef.len()];
    for (i, p) in sd.interior.iter().enumerate() {
        for (k, s) in series.iter_mut().enumerate() {
            *s = coef[k][p.m];
        }
        let sign = signs[i];
        let limit = earliest.unwrap_or(dt);
        let mut prev = 0.0;
        for q in 1..=CROSSING_SAMPLES {
            let s = limit * q as f64 / CROSSING_SAMPLES as f64;
            let v = eval_slice(&series, s);
            if sign * v < -CROSSING_FLOOR {
                let (mut lo, mut hi) = (prev, s);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if sign * eval_slice(&series, mid) < 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                if hi > 0.0 {
                    earliest = Some(hi);
                }
                break;
            }
            prev = s;
        }
    }
    earliest
}

/// Runs the semi-analytical solver over the scenario horizon.
pub fn simulate(system: &IegsSystem, scenario: &Scenario, cfg: &DtConfig) -> Result<Trajectory> {
    simulate_observed(system, scenario, cfg, &mut |_| Ok(()))
}

/// [`simulate`] with a callback invoked on every accepted window.
pub fn simulate_observed(
    system: &IegsSystem,
    scenario: &Scenario,
    cfg: &DtConfig,
    observer: &mut dyn FnMut(&WindowView) -> Result<()>,
) -> Result<Trajectory> {
    let clock = Instant::now();
    cfg.control.validate()?;
    if cfg.order == 0 {
        return Err(Error::Range("series order must be at least 1".into()));
    }
    if !(cfg.dx_m > 0.0) {
        return Err(Error::Range(format!("spatial step must be positive, got {}", cfg.dx_m)));
    }
    if !(cfg.courant_max > 0.0) {
        return Err(Error::Range(format!(
            "Courant bound must be positive, got {}",
            cfg.courant_max
        )));
    }
    let signals = BoundSignals::bind(system, &scenario.boundaries, scenario.horizon_s)?;
    let grids = make_grids(system, cfg.dx_m);
    let sd = SemiDiscrete::new(system, grids.clone(), &signals)?;
    let mut blocks = BlockSystem::assemble(system, &sd, cfg.order)?;
    let sig0 = signals.values(0.0)?;
    let mut x = match &scenario.init {
        InitMode::Steady => {
            let init = steady_state_init(system, &signals, &grids, &cfg.newton)?;
            sd.settle(init.to_vector(&sd.layout)?, &sig0, &cfg.newton)?.x
        }
        InitMode::Explicit(state) => state.to_vector(&sd.layout)?,
    };

    let stability_cap = sd
        .params
        .iter()
        .map(|p| cfg.courant_max * p.dl / p.sound_speed)
        .fold(f64::INFINITY, f64::min);
    let ctl = &WindowControlConfig {
        dt_max: cfg.control.dt_max.min(stability_cap).max(cfg.control.dt_min),
        dt_init: cfg.control.dt_init.min(stability_cap),
        ..cfg.control
    };
    let horizon = scenario.horizon_s;
    let times = sample_times(horizon, cfg.sample_dt)?;
    let mut out = TrajectoryBuilder::new(system, &sd.layout);
    let mut prov = Provenance::new(
        "dt",
        json!({
            "order": cfg.order,
            "dx_m": cfg.dx_m,
            "sample_dt_s": cfg.sample_dt,
            "controller": cfg.control,
            "courant_max": cfg.courant_max,
            "dt_stability_cap_s": stability_cap,
            "init": match scenario.init { InitMode::Steady => "steady", InitMode::Explicit(_) => "explicit" },
        }),
        system,
        &sd.layout,
    );
    let mut stops = signals.breakpoints();
    stops.push(horizon);
    let order = cfg.order;
    let n = sd.layout.len();
    let mut coef = vec![vec![0.0; n]; order + 1];
    let mut next_sample = 0;
    let mut t = 0.0;
    let mut dt_prop = ctl.dt_init.min(ctl.dt_max);
    let mut end = vec![0.0; n];

    while t < horizon {
        let stop = *stops.iter().find(|&&s| s > t).unwrap_or(&horizon);
        let sig = signals.values(t)?;
        blocks.project_start(&sd, &mut x, &sig)?;
        let taylor = signals.taylor(t, order)?;
        coef[0].copy_from_slice(&x);
        for c in coef.iter_mut().skip(1) {
            c.iter_mut().for_each(|v| *v = 0.0);
        }
        blocks.compute_orders(&sd, &mut coef, &taylor)?;
        let signs = blocks.frozen_signs();

        let mut dt = dt_prop;
        let mut clamped = false;
        if t + dt >= stop - 1e-9 * stop.max(1.0) {
            dt = stop - t;
            clamped = true;
        }
        let mut rejects = 0;
        let err = loop {
            if let Some(tc) = first_crossing(&sd, &coef, &signs, dt) {
                if tc < dt {
                    dt = tc;
                    clamped = true;
                }
            }
            for (v, e) in end.iter_mut().enumerate() {
                *e = (0..=order).rev().fold(0.0, |acc, k| acc * dt + coef[k][v]);
            }
            let err = window_error(&coef[order], &coef[0], &end, &blocks.classes, dt, order, ctl);
            if err <= 1.0 {
                break err;
            }
            let shrunk = adapt_window(err, dt, order, ctl);
            prov.updates.push(ControllerUpdate {
                dt_in: dt,
                dt_out: shrunk,
                err,
            });
            rejects += 1;
            if shrunk >= dt || dt <= ctl.dt_min {
                return Err(Error::StepTooSmall { time: t, dt: shrunk });
            }
            dt = shrunk;
            clamped = false;
        };

        observer(&WindowView {
            t0: t,
            dt,
            coef: &coef,
            taylor: &taylor,
            signs: &signs,
            sd: &sd,
            blocks: &blocks,
        })?;

        let t_end = if clamped && (stop - (t + dt)).abs() <= 1e-9 * stop.max(1.0) {
            stop
        } else {
            t + dt
        };
        while next_sample < times.len() && times[next_sample] < t_end {
            let s = times[next_sample] - t;
            let row: Vec<f64> = (0..n)
                .map(|v| (0..=order).rev().fold(0.0, |acc, k| acc * s + coef[k][v]))
                .collect();
            out.push(times[next_sample], &row);
            next_sample += 1;
        }

        let mut dt_next = adapt_window(err, dt, order, ctl);
        prov.updates.push(ControllerUpdate {
            dt_in: dt,
            dt_out: dt_next,
            err,
        });
        if clamped {
            dt_next = dt_next.max(dt_prop).min(ctl.dt_max);
        }
        prov.windows.push(WindowRecord {
            t0: t,
            dt,
            err,
            rejects,
            clamped,
            dt_next,
        });
        prov.rejected += rejects;
        x.copy_from_slice(&end);
        t = t_end;
        dt_prop = dt_next;
    }
    while next_sample < times.len() {
        out.push(times[next_sample], &x);
        next_sample += 1;
    }
    prov.steps = prov.windows.len();
    prov.wall_clock_s = clock.elapsed().as_secs_f64();
    Ok(out.finish(prov))
}
