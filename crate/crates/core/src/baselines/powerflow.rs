//! Standalone Newton power flow in rectangular coordinates.

use crate::baselines::newton::{newton, NewtonConfig};
use crate::equations::{admittance_rows, AdmittanceRow};
use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;
use crate::system::IegsSystem;

/// Specified quantities of one bus, per unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BusSpec {
    Slack { e: f64, f: f64 },
    Pv { p: f64, u: f64 },
    Pq { p: f64, q: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerFlowSolution {
    pub e: Vec<f64>,
    pub f: Vec<f64>,
    /// Injected active and reactive power at every bus.
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub iterations: usize,
}

/// Active and reactive injections at every bus.
pub fn injections(adm: &[AdmittanceRow], e: &[f64], f: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut p = vec![0.0; e.len()];
    let mut q = vec![0.0; e.len()];
    for (b, row) in adm.iter().enumerate() {
        let (mut a, mut c) = (0.0, 0.0);
        for &(k, g, bb) in &row.entries {
            a += g * e[k] - bb * f[k];
            c += bb * e[k] + g * f[k];
        }
        p[b] = e[b] * a + f[b] * c;
        q[b] = f[b] * a - e[b] * c;
    }
    (p, q)
}

/// Solves the power flow for the given bus specifications. `start` defaults
/// to a flat start at the slack voltage.
pub fn powerflow_rect(
    system: &IegsSystem,
    specs: &[BusSpec],
    start: Option<(&[f64], &[f64])>,
    cfg: &NewtonConfig,
) -> Result<PowerFlowSolution> {
    let n = system.bus_count();
    if specs.len() != n {
        return Err(Error::Structural(format!(
            "{} bus specifications for {n} buses",
            specs.len()
        )));
    }
    let slacks = specs.iter().filter(|s| matches!(s, BusSpec::Slack { .. })).count();
    if slacks != 1 {
        return Err(Error::Structural(format!(
            "power flow needs exactly one slack bus, got {slacks}"
        )));
    }
    let adm = admittance_rows(system);
    let x0 = match start {
        Some((e, f)) => e.iter().zip(f).flat_map(|(a, b)| [*a, *b]).collect(),
        None => {
            let (e, f) = specs
                .iter()
                .find_map(|s| match s {
                    BusSpec::Slack { e, f } => Some((*e, *f)),
                    _ => None,
                })
                .unwrap();
            (0..n).flat_map(|_| [e, f]).collect()
        }
    };
    let split = |x: &[f64]| -> (Vec<f64>, Vec<f64>) {
        (
            x.iter().step_by(2).copied().collect(),
            x.iter().skip(1).step_by(2).copied().collect(),
        )
    };
    let residual = |x: &[f64]| -> Result<Vec<f64>> {
        let (e, f) = split(x);
        let (p, q) = injections(&adm, &e, &f);
        let mut r = Vec::with_capacity(2 * n);
        for (b, s) in specs.iter().enumerate() {
            match *s {
                BusSpec::Slack { e: es, f: fs } => r.extend([e[b] - es, f[b] - fs]),
                BusSpec::Pv { p: ps, u } => r.extend([p[b] - ps, e[b] * e[b] + f[b] * f[b] - u * u]),
                BusSpec::Pq { p: ps, q: qs } => r.extend([p[b] - ps, q[b] - qs]),
            }
        }
        Ok(r)
    };
    let jacobian = |x: &[f64]| -> Result<SparseMatrix> {
        let (e, f) = split(x);
        let mut t = Vec::new();
        for (b, s) in specs.iter().enumerate() {
            let (rp, rq) = (2 * b, 2 * b + 1);
            if let BusSpec::Slack { .. } = s {
                t.push((rp, 2 * b, 1.0));
                t.push((rq, 2 * b + 1, 1.0));
                continue;
            }
            let (mut a, mut c) = (0.0, 0.0);
            for &(k, g, bb) in &adm[b].entries {
                a += g * e[k] - bb * f[k];
                c += bb * e[k] + g * f[k];
            }
            for &(k, g, bb) in &adm[b].entries {
                t.push((rp, 2 * k, e[b] * g + f[b] * bb));
                t.push((rp, 2 * k + 1, -e[b] * bb + f[b] * g));
                if matches!(s, BusSpec::Pq { .. }) {
                    t.push((rq, 2 * k, f[b] * g - e[b] * bb));
                    t.push((rq, 2 * k + 1, -f[b] * bb - e[b] * g));
                }
            }
            t.push((rp, 2 * b, a));
            t.push((rp, 2 * b + 1, c));
            match s {
                BusSpec::Pq { .. } => {
                    t.push((rq, 2 * b, -c));
                    t.push((rq, 2 * b + 1, a));
                }
                _ => {
                    t.push((rq, 2 * b, 2.0 * e[b]));
                    t.push((rq, 2 * b + 1, 2.0 * f[b]));
                }
            }
        }
        Ok(SparseMatrix::from_triplets(2 * n, 2 * n, &t))
    };
    let sol = newton(residual, jacobian, x0, cfg).map_err(|err| match err {
        Error::Divergence {
            iterations, residual, ..
        } => Error::Divergence {
            iterations,
            residual,
            context: " in power flow".into(),
        },
        other => other,
    })?;
    let (e, f) = split(&sol.x);
    let (p, q) = injections(&adm, &e, &f);
    Ok(PowerFlowSolution {
        e,
        f,
        p,
        q,
        iterations: sol.iterations,
    })
}
