//! The algebraic part of the order-k system as one dense matrix, for
//! checking that a spatial stencil leaves it nonsingular.
//!
//! At order `k ≥ 1` the interior states are already known from the ODE
//! recursion, so the unknowns are the remaining (algebraic) states and the
//! matrix is the Jacobian of the algebraic rows restricted to them.

use crate::linalg::{lu_factor, DenseMatrix, LuFactor};
use crate::solver::semidiscrete::SemiDiscrete;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stencil {
    /// Central differences at points `1..N−1` closed by the two numerical
    /// boundary rows; pipe ends are algebraic.
    CentralWithClosures,
    /// Backward differences at points `1..N`; only the head point is
    /// algebraic and no closure rows exist.
    OneSided,
}

/// Dense order-k matrix of the algebraic rows at state `x` (rows scaled)
/// together with the indices of its columns in the full layout.
pub fn algebraic_order_matrix(sd: &SemiDiscrete, x: &[f64], stencil: Stencil) -> (DenseMatrix, Vec<usize>) {
    let l = &sd.layout;
    let differential: Vec<bool> = {
        let mut d = vec![false; l.len()];
        for j in 0..l.pipe_count() {
            let n = l.n_seg(j);
            let points = match stencil {
                Stencil::CentralWithClosures => 1..n,
                Stencil::OneSided => 1..n + 1,
            };
            for p in points {
                d[l.pi(j, p)] = true;
                d[l.m(j, p)] = true;
            }
        }
        d
    };
    let cols: Vec<usize> = (0..l.len()).filter(|&v| !differential[v]).collect();
    let mut col_of = vec![usize::MAX; l.len()];
    for (c, &v) in cols.iter().enumerate() {
        col_of[v] = c;
    }
    let rows = match stencil {
        Stencil::CentralWithClosures => &sd.alg[..],
        Stencil::OneSided => &sd.net.rows[..],
    };
    let mut a = DenseMatrix::zeros(rows.len(), cols.len());
    for (r, row) in rows.iter().enumerate() {
        sd.net.row_jacobian(row, x, |v, val| {
            if col_of[v] != usize::MAX {
                a[(r, col_of[v])] += val / row.scale;
            }
        });
    }
    (a, cols)
}

/// Factorizes the algebraic order-k matrix; `None` when it is not square.
pub fn factor_order_matrix(sd: &SemiDiscrete, x: &[f64], stencil: Stencil) -> Option<LuFactor> {
    let (a, _) = algebraic_order_matrix(sd, x, stencil);
    (a.rows() == a.cols()).then(|| lu_factor(&a))
}
