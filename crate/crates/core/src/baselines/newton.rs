//! Damped Newton iteration with sparse Jacobians and a sparse LU.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm_inf, SparseLu, SparseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonConfig {
    /// Threshold on the infinity norm of the (scaled) residual.
    pub tol: f64,
    pub max_iter: usize,
    /// Initial step scale; halved on a failed line search down to 1/64 of it.
    pub damping: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 50,
            damping: 1.0,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter == 0 || !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Range(format!("invalid Newton configuration {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

const MAX_HALVINGS: usize = 6;

/// Solves `residual(x) = 0`. A residual evaluation error during the line
/// search (for example a pressure leaving the physical domain) counts as a
/// failed trial and shortens the step.
pub fn newton<R, J>(mut residual: R, mut jacobian: J, x0: Vec<f64>, cfg: &NewtonConfig) -> Result<NewtonSolution>
where
    R: FnMut(&[f64]) -> Result<Vec<f64>>,
    J: FnMut(&[f64]) -> Result<SparseMatrix>,
{
    cfg.validate()?;
    let mut x = x0;
    let mut r = residual(&x)?;
    if r.len() != x.len() {
        return Err(Error::Structural(format!(
            "residual has {} entries for {} unknowns",
            r.len(),
            x.len()
        )));
    }
    let mut norm = norm_inf(&r);
    for it in 0..cfg.max_iter {
        if norm <= cfg.tol {
            return Ok(NewtonSolution {
                x,
                iterations: it,
                residual: norm,
            });
        }
        let jac = jacobian(&x)?;
        let step = SparseLu::factor(&jac)?.solve(&r)?;
        let mut alpha = cfg.damping;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<f64> = x.iter().zip(&step).map(|(xi, si)| xi - alpha * si).collect();
            if let Ok(rt) = residual(&trial) {
                let nt = norm_inf(&rt);
                if nt.is_finite() && nt < norm {
                    x = trial;
                    r = rt;
                    norm = nt;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            // take the shortest step anyway; stagnation is caught by max_iter
            let trial: Vec<f64> = x.iter().zip(&step).map(|(xi, si)| xi - alpha * 2.0 * si).collect();
            r = residual(&trial)?;
            x = trial;
            norm = norm_inf(&r);
        }
    }
    if norm <= cfg.tol {
        return Ok(NewtonSolution {
            x,
            iterations: cfg.max_iter,
            residual: norm,
        });
    }
    Err(Error::Divergence {
        iterations: cfg.max_iter,
        residual: norm,
        context: String::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_converges_in_one_iteration() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (0, 1, 1.0), (1, 1, 3.0)]);
        let b = [1.0, 6.0];
        let sol = newton(
            |x| Ok(a.mul_vec(x).iter().zip(&b).map(|(ax, bi)| ax - bi).collect()),
            |_| Ok(a.clone()),
            vec![0.0, 0.0],
            &NewtonConfig {
                tol: 1e-12,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(sol.iterations, 1);
        assert!((sol.x[0] + 0.5).abs() < 1e-14 && (sol.x[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn square_root_of_four() {
        let sol = newton(
            |x| Ok(vec![x[0] * x[0] - 4.0]),
            |x| Ok(SparseMatrix::from_triplets(1, 1, &[(0, 0, 2.0 * x[0])])),
            vec![3.0],
            &NewtonConfig {
                tol: 1e-12,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(sol.iterations <= 5);
        assert!((sol.x[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn singular_jacobian_is_an_error() {
        let r = newton(
            |x| Ok(vec![x[0] * x[0] + 1.0]),
            |x| Ok(SparseMatrix::from_triplets(1, 1, &[(0, 0, 2.0 * x[0])])),
            vec![0.0],
            &NewtonConfig::default(),
        );
        assert!(matches!(r, Err(Error::Singular { .. })));
    }

    #[test]
    fn divergence_reports_norm() {
        let r = newton(
            |x| Ok(vec![x[0] * x[0] + 1.0]),
            |x| Ok(SparseMatrix::from_triplets(1, 1, &[(0, 0, 2.0 * x[0])])),
            vec![10.0],
            &NewtonConfig {
                max_iter: 3,
                ..Default::default()
            },
        );
        match r {
            Err(Error::Divergence {
                iterations, residual, ..
            }) => {
                assert_eq!(iterations, 3);
                assert!(residual >= 1.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
