//! Monolithic reference for the order-k coefficients: the whole order-k
//! system is built by probing an independently written residual column by
//! column and solved with one dense LU. Used to check the block solve.

use crate::equations::{NetworkRows, RowKind};
use crate::error::{Error, Result};
use crate::linalg::{lu_factor, DenseMatrix};
use crate::solver::semidiscrete::SemiDiscrete;
use crate::system::IegsSystem;
use crate::taylor::{friction_coeff, Series};

/// Order-`k` residual of every equation when the order-`k` unknowns are `y`
/// and orders `0..k` are taken from `coef`.
fn order_residual(
    system: &IegsSystem,
    sd: &SemiDiscrete,
    coef: &[Vec<f64>],
    taylor: &[Vec<f64>],
    signs: &[f64],
    k: usize,
    y: &[f64],
) -> Result<Vec<f64>> {
    let series = |v: usize| -> Series {
        let mut c: Vec<f64> = (0..k).map(|o| coef[o][v]).collect();
        c.push(y[v]);
        Series::from_coeffs(c)
    };
    let lower = |v: usize| -> Series { Series::from_coeffs((0..k).map(|o| coef[o][v]).collect()) };
    let mut r = Vec::with_capacity(sd.layout.len());
    for (i, p) in sd.interior.iter().enumerate() {
        let pp = &sd.params[p.pipe];
        let h = 2.0 * pp.dl;
        let c2s = pp.sound_speed * pp.sound_speed / pp.area;
        let fr = friction_coeff(&lower(p.m), &lower(p.pi), signs[i], k - 1)?;
        r.push(k as f64 * y[p.pi] + c2s * (coef[k - 1][p.m_right] - coef[k - 1][p.m_left]) / h);
        r.push(k as f64 * y[p.m] + pp.area * (coef[k - 1][p.pi_right] - coef[k - 1][p.pi_left]) / h + pp.friction * fr);
    }
    let lay = &sd.layout;
    let adm = &system.admittance;
    let nb = system.bus_count();
    let e: Vec<Series> = (0..nb).map(|b| series(lay.e(b))).collect();
    let f: Vec<Series> = (0..nb).map(|b| series(lay.f(b))).collect();
    for row in &sd.alg {
        let lin: f64 = row.linear.iter().map(|&(v, c)| c * y[v]).sum();
        let nl = match row.kind {
            RowKind::Linear => 0.0,
            RowKind::Active(b) => (0..nb)
                .map(|j| {
                    let (g, bb) = (adm.g[(b, j)], adm.b[(b, j)]);
                    g * (e[b].mul(&e[j])[k] + f[b].mul(&f[j])[k]) + bb * (f[b].mul(&e[j])[k] - e[b].mul(&f[j])[k])
                })
                .sum(),
            RowKind::Reactive(b) => (0..nb)
                .map(|j| {
                    let (g, bb) = (adm.g[(b, j)], adm.b[(b, j)]);
                    g * (f[b].mul(&e[j])[k] - e[b].mul(&f[j])[k]) - bb * (f[b].mul(&f[j])[k] + e[b].mul(&e[j])[k])
                })
                .sum(),
            RowKind::Magnitude(b) => e[b].mul(&e[b])[k] + f[b].mul(&f[b])[k],
        };
        r.push(lin + nl - NetworkRows::rhs_order(row, taylor, k));
    }
    Ok(r)
}

/// Order-`k` coefficients of every unknown from one dense solve.
pub fn monolithic_order(
    system: &IegsSystem,
    sd: &SemiDiscrete,
    coef: &[Vec<f64>],
    taylor: &[Vec<f64>],
    signs: &[f64],
    k: usize,
) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::Range("the order-0 system is nonlinear".into()));
    }
    let n = sd.layout.len();
    let mut y = vec![0.0; n];
    let base = order_residual(system, sd, coef, taylor, signs, k, &y)?;
    let mut a = DenseMatrix::zeros(n, n);
    for c in 0..n {
        y[c] = 1.0;
        let col = order_residual(system, sd, coef, taylor, signs, k, &y)?;
        y[c] = 0.0;
        for r in 0..n {
            a[(r, c)] = col[r] - base[r];
        }
    }
    let f = lu_factor(&a);
    if let Some(pivot) = f.singular_at() {
        return Err(Error::Singular { pivot });
    }
    let rhs: Vec<f64> = base.iter().map(|v| -v).collect();
    f.solve(&rhs)
}
