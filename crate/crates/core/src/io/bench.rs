//! Method specifications and the timing table.
//!
//! A specification reads `method:key=value,...`, for example
//! `dt:order=5,dx=1000`, `moc:dx=500` or `ieuler:dx=1000,dt=180`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::baselines::{fdm_solve, moc_solve, FdmConfig, FdmScheme, MocConfig};
use crate::error::{Error, Result};
use crate::io::compare::{compare, CompareOptions};
use crate::scenario::Scenario;
use crate::solver::{simulate, DtConfig};
use crate::system::IegsSystem;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, PartialEq)]
pub enum MethodSpec {
    Dt(DtConfig),
    Moc(MocConfig),
    Fdm(FdmConfig),
}

impl MethodSpec {
    pub fn method(&self) -> &'static str {
        match self {
            MethodSpec::Dt(_) => "dt",
            MethodSpec::Moc(_) => "moc",
            MethodSpec::Fdm(c) => c.scheme.name(),
        }
    }

    /// Sets the sample spacing of the output trajectory.
    pub fn set_sample_dt(&mut self, sample_dt: f64) {
        match self {
            MethodSpec::Dt(c) => c.sample_dt = sample_dt,
            MethodSpec::Moc(c) => c.sample_dt = sample_dt,
            MethodSpec::Fdm(c) => c.sample_dt = sample_dt,
        }
    }
}

fn bad(spec: &str, msg: impl fmt::Display) -> Error {
    Error::Range(format!("method specification '{spec}': {msg}"))
}

impl FromStr for MethodSpec {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        let (method, rest) = spec.split_once(':').unwrap_or((spec, ""));
        let mut kv = BTreeMap::new();
        for item in rest.split(',').filter(|s| !s.trim().is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| bad(spec, format!("'{item}' is not key=value")))?;
            let v: f64 = v.trim().parse().map_err(|e| bad(spec, format!("{k}: {e}")))?;
            if kv.insert(k.trim().to_string(), v).is_some() {
                return Err(bad(spec, format!("'{k}' given twice")));
            }
        }
        let mut take = |k: &str| kv.remove(k);
        let out = match method.trim() {
            "dt" => {
                let mut c = DtConfig::default();
                if let Some(v) = take("order") {
                    if v.fract() != 0.0 || v < 1.0 {
                        return Err(bad(spec, "order must be a positive integer"));
                    }
                    c.order = v as usize;
                }
                let ctl = &mut c.control;
                for (key, slot) in [
                    ("dx", &mut c.dx_m),
                    ("sample_dt", &mut c.sample_dt),
                    ("courant_max", &mut c.courant_max),
                    ("atol_pressure", &mut ctl.atol_pressure),
                    ("atol_flow", &mut ctl.atol_flow),
                    ("atol_voltage", &mut ctl.atol_voltage),
                    ("rtol", &mut ctl.rtol),
                    ("fac", &mut ctl.fac),
                    ("fac_min", &mut ctl.fac_min),
                    ("fac_max", &mut ctl.fac_max),
                    ("dt_init", &mut ctl.dt_init),
                    ("dt_max", &mut ctl.dt_max),
                    ("dt_min", &mut ctl.dt_min),
                ] {
                    if let Some(v) = take(key) {
                        *slot = v;
                    }
                }
                MethodSpec::Dt(c)
            }
            "moc" => {
                let mut c = MocConfig::default();
                for (key, slot) in [("dx", &mut c.dx_m), ("sample_dt", &mut c.sample_dt)] {
                    if let Some(v) = take(key) {
                        *slot = v;
                    }
                }
                MethodSpec::Moc(c)
            }
            m @ ("ieuler" | "icentral") => {
                let scheme = if m == "ieuler" {
                    FdmScheme::ImplicitEuler
                } else {
                    FdmScheme::ImplicitCentral
                };
                let dt = take("dt").ok_or_else(|| bad(spec, "fixed-step methods need dt=SECONDS"))?;
                let mut c = FdmConfig::new(scheme, 1000.0, dt);
                for (key, slot) in [("dx", &mut c.dx_m), ("sample_dt", &mut c.sample_dt)] {
                    if let Some(v) = take(key) {
                        *slot = v;
                    }
                }
                MethodSpec::Fdm(c)
            }
            other => {
                return Err(bad(
                    spec,
                    format!("unknown method '{other}' (expected dt, moc, ieuler or icentral)"),
                ))
            }
        };
        if let Some(k) = kv.keys().next() {
            return Err(bad(spec, format!("unknown key '{k}' for method {}", out.method())));
        }
        Ok(out)
    }
}

pub fn run_method(system: &IegsSystem, scenario: &Scenario, spec: &MethodSpec) -> Result<Trajectory> {
    match spec {
        MethodSpec::Dt(c) => simulate(system, scenario, c),
        MethodSpec::Moc(c) => moc_solve(system, scenario, c),
        MethodSpec::Fdm(c) => fdm_solve(system, scenario, c),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub label: String,
    pub method: String,
    pub repeats: usize,
    /// Mean over the repeats.
    pub wall_clock_s: f64,
    pub steps: usize,
    /// Overall RMSE of the selected variables against the reference.
    pub rmse: Option<f64>,
}

/// Runs every specification `repeat` times. Step counts must agree across
/// repeats; a disagreement is reported as an error.
pub fn run_bench(
    system: &IegsSystem,
    scenario: &Scenario,
    specs: &[(String, MethodSpec)],
    repeat: usize,
    reference: Option<(&Trajectory, &CompareOptions)>,
) -> Result<Vec<BenchRow>> {
    if repeat == 0 {
        return Err(Error::Range("repeat count must be at least 1".into()));
    }
    let mut rows = Vec::new();
    for (label, spec) in specs {
        let mut total = 0.0;
        let mut steps = None;
        let mut last = None;
        for _ in 0..repeat {
            let t = run_method(system, scenario, spec)?;
            total += t.provenance.wall_clock_s;
            match steps {
                None => steps = Some(t.provenance.steps),
                Some(s) if s != t.provenance.steps => {
                    return Err(Error::Structural(format!(
                        "{label}: step count changed between repeats ({s} vs {})",
                        t.provenance.steps
                    )))
                }
                _ => {}
            }
            last = Some(t);
        }
        let traj = last.expect("at least one repeat");
        let rmse = reference
            .map(|(r, opts)| {
                let opts = CompareOptions {
                    resample: true,
                    ..opts.clone()
                };
                compare(r, &traj, &opts).map(|rep| {
                    let n = rep.variables.len() as f64;
                    (rep.variables.iter().map(|v| v.rmse * v.rmse).sum::<f64>() / n).sqrt()
                })
            })
            .transpose()?;
        rows.push(BenchRow {
            label: label.clone(),
            method: spec.method().to_string(),
            repeats: repeat,
            wall_clock_s: total / repeat as f64,
            steps: steps.unwrap_or(0),
            rmse,
        });
    }
    Ok(rows)
}

/// Comma-separated table with the columns `Method`, `Configuration`,
/// `Time Cost(s)`, `Step Number` and `RMSE`.
pub fn bench_table(rows: &[BenchRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["Method", "Configuration", "Time Cost(s)", "Step Number", "RMSE"])
        .expect("in-memory write");
    for r in rows {
        w.write_record([
            r.method.clone(),
            r.label.clone(),
            format!("{:.6}", r.wall_clock_s),
            r.steps.to_string(),
            r.rmse.map(|v| format!("{v:.6e}")).unwrap_or_default(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}
