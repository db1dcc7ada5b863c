//! Block partition of the order-k coefficient equations and the three-step
//! solve per order.
//!
//! * `x1`: interior pipeline states, obtained by pure recursion.
//! * `x2`: pipeline end states and nodal states away from the gas-turbine
//!   slack node. The coefficient matrix is constant and splits into one
//!   independent block per node.
//! * `x3`: everything tied to the power system: ends and state of the slack
//!   turbine node, bus voltages and unknown coupled-bus powers. Its matrix
//!   depends on the order-0 voltages and is refactored every window.

use crate::equations::{NetworkRows, RowKind, RowTag};
use crate::error::{Error, Result};
use crate::linalg::{lu_factor, DenseMatrix, LuFactor};
use crate::solver::controller::VarClass;
use crate::solver::semidiscrete::SemiDiscrete;
use crate::system::IegsSystem;
use crate::taylor::recip_next;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    X1,
    X2(usize),
    X3,
}

#[derive(Debug, Clone)]
pub struct NodeBlock {
    pub node: usize,
    pub vars: Vec<usize>,
    pub rows: Vec<usize>,
    pub factor: LuFactor,
}

/// Flows below this magnitude (kg/s) count as zero when freezing the sign
/// of `m|m|`.
pub const ZERO_FLOW: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct BlockSystem {
    pub order: usize,
    pub var_block: Vec<Block>,
    pub classes: Vec<VarClass>,
    pub node_blocks: Vec<NodeBlock>,
    pub x3_vars: Vec<usize>,
    pub x3_rows: Vec<usize>,
    w33: Option<LuFactor>,
    /// Per interior point: running coefficients of `m²` and `1/π`.
    mm: Vec<Vec<f64>>,
    rr: Vec<Vec<f64>>,
    /// Frozen sign of the flow per interior point (0 while undetermined).
    pub signs: Vec<f64>,
}

impl BlockSystem {
    /// Partitions unknowns and rows and factorizes every node block.
    pub fn assemble(system: &IegsSystem, sd: &SemiDiscrete, order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::Range("series order must be at least 1".into()));
        }
        let lay = &sd.layout;
        let n = lay.len();
        let slack = sd.slack_node;
        let node_block = |i: usize| if Some(i) == slack { Block::X3 } else { Block::X2(i) };

        let mut var_block = vec![Block::X3; n];
        let mut classes = vec![VarClass::Voltage; n];
        for j in 0..lay.pipe_count() {
            let ns = lay.n_seg(j);
            let (head, tail) = system.pipe_ends(j);
            for k in 0..=ns {
                var_block[lay.pi(j, k)] = match k {
                    0 => node_block(head),
                    _ if k == ns => node_block(tail),
                    _ => Block::X1,
                };
                var_block[lay.m(j, k)] = var_block[lay.pi(j, k)];
                classes[lay.pi(j, k)] = VarClass::Pressure;
                classes[lay.m(j, k)] = VarClass::Flow;
            }
        }
        for i in 0..lay.node_count() {
            var_block[lay.node_pi(i)] = node_block(i);
            var_block[lay.node_m(i)] = node_block(i);
            classes[lay.node_pi(i)] = VarClass::Pressure;
            classes[lay.node_m(i)] = VarClass::Flow;
        }

        let mut node_vars: Vec<Vec<usize>> = vec![Vec::new(); lay.node_count()];
        let mut x3_vars = Vec::new();
        for (v, b) in var_block.iter().enumerate() {
            match b {
                Block::X1 => {}
                Block::X2(i) => node_vars[*i].push(v),
                Block::X3 => x3_vars.push(v),
            }
        }
        let mut node_rows: Vec<Vec<usize>> = vec![Vec::new(); lay.node_count()];
        let mut x3_rows = Vec::new();
        for (r, row) in sd.alg.iter().enumerate() {
            match row.tag {
                RowTag::Node(i) if Some(i) != slack => node_rows[i].push(r),
                _ => x3_rows.push(r),
            }
        }

        let mut node_blocks = Vec::new();
        for i in 0..lay.node_count() {
            if Some(i) == slack {
                continue;
            }
            let (vars, rows) = (std::mem::take(&mut node_vars[i]), std::mem::take(&mut node_rows[i]));
            if vars.len() != rows.len() {
                return Err(Error::Structural(format!(
                    "node block {} has {} rows for {} unknowns",
                    system.gas.nodes[i].id,
                    rows.len(),
                    vars.len()
                )));
            }
            let mut a = DenseMatrix::zeros(vars.len(), vars.len());
            for (ri, &r) in rows.iter().enumerate() {
                let row = &sd.alg[r];
                debug_assert_eq!(row.kind, RowKind::Linear);
                for &(v, c) in &row.linear {
                    if let Some(ci) = vars.iter().position(|&x| x == v) {
                        a[(ri, ci)] += c;
                    }
                }
            }
            let factor = lu_factor(&a);
            if let Some(p) = factor.singular_at() {
                return Err(Error::Structural(format!(
                    "coefficient block of node '{}' is singular (pivot {p})",
                    system.gas.nodes[i].id
                )));
            }
            node_blocks.push(NodeBlock {
                node: i,
                vars,
                rows,
                factor,
            });
        }
        if x3_vars.len() != x3_rows.len() {
            return Err(Error::Structural(format!(
                "power-system block has {} rows for {} unknowns",
                x3_rows.len(),
                x3_vars.len()
            )));
        }
        let np = sd.interior.len();
        Ok(Self {
            order,
            var_block,
            classes,
            node_blocks,
            x3_vars,
            x3_rows,
            w33: None,
            mm: vec![vec![0.0; order + 1]; np],
            rr: vec![vec![0.0; order + 1]; np],
            signs: vec![0.0; np],
        })
    }

    /// Dense coefficient matrix of the `x3` block at state `x`.
    pub fn w33_matrix(&self, sd: &SemiDiscrete, x: &[f64]) -> DenseMatrix {
        let n = self.x3_vars.len();
        let mut pos = vec![usize::MAX; sd.layout.len()];
        for (i, &v) in self.x3_vars.iter().enumerate() {
            pos[v] = i;
        }
        let mut a = DenseMatrix::zeros(n, n);
        for (ri, &r) in self.x3_rows.iter().enumerate() {
            sd.net.row_jacobian(&sd.alg[r], x, |c, v| {
                if pos[c] != usize::MAX {
                    a[(ri, pos[c])] += v;
                }
            });
        }
        a
    }

    fn factor_w33(&mut self, sd: &SemiDiscrete, x: &[f64]) -> Result<()> {
        if self.x3_vars.is_empty() {
            self.w33 = None;
            return Ok(());
        }
        let f = lu_factor(&self.w33_matrix(sd, x));
        if let Some(pivot) = f.singular_at() {
            return Err(Error::Singular { pivot });
        }
        self.w33 = Some(f);
        Ok(())
    }

    /// Makes the window-start state consistent with the algebraic rows at
    /// boundary values `sig`: node blocks are re-solved exactly, the power
    /// system block by Newton. Leaves `W33` factorized at the result.
    pub fn project_start(&mut self, sd: &SemiDiscrete, x: &mut [f64], sig: &[f64]) -> Result<()> {
        for nb in &self.node_blocks {
            for &v in &nb.vars {
                x[v] = 0.0;
            }
            let b: Vec<f64> = nb
                .rows
                .iter()
                .map(|&r| NetworkRows::rhs(&sd.alg[r], sig) - sd.net.lhs(&sd.alg[r], x))
                .collect();
            let sol = nb.factor.solve(&b)?;
            for (&v, s) in nb.vars.iter().zip(sol) {
                x[v] = s;
            }
        }
        const MAX_ITER: usize = 20;
        for it in 0..=MAX_ITER {
            self.factor_w33(sd, x)?;
            let Some(w33) = &self.w33 else { return Ok(()) };
            let r: Vec<f64> = self
                .x3_rows
                .iter()
                .map(|&r| sd.net.lhs(&sd.alg[r], x) - NetworkRows::rhs(&sd.alg[r], sig))
                .collect();
            let worst = r
                .iter()
                .zip(&self.x3_rows)
                .map(|(v, &row)| (v / sd.alg[row].scale).abs())
                .fold(0.0, f64::max);
            if worst <= 1e-13 {
                return Ok(());
            }
            if it == MAX_ITER {
                return Err(Error::Divergence {
                    iterations: MAX_ITER,
                    residual: worst,
                    context: " projecting the power-system block at a window start".into(),
                });
            }
            let dx = w33.solve(&r)?;
            for (&v, d) in self.x3_vars.iter().zip(dx) {
                x[v] -= d;
            }
        }
        Ok(())
    }

    /// Resets per-window recursion state for a new start `coef[0]`.
    pub fn begin_window(&mut self, sd: &SemiDiscrete, coef: &[Vec<f64>]) {
        for (i, p) in sd.interior.iter().enumerate() {
            let m0 = coef[0][p.m];
            self.signs[i] = if m0.abs() > ZERO_FLOW { m0.signum() } else { 0.0 };
            self.mm[i].iter_mut().for_each(|v| *v = 0.0);
            self.rr[i].iter_mut().for_each(|v| *v = 0.0);
        }
    }

    /// Order-`k` interior coefficients from orders `0..k`.
    pub fn step1(&mut self, sd: &SemiDiscrete, coef: &mut [Vec<f64>], k: usize) -> Result<()> {
        let km1 = k - 1;
        let (lower, upper) = coef.split_at_mut(k);
        let cur = &mut upper[0];
        for (i, p) in sd.interior.iter().enumerate() {
            let pp = &sd.params[p.pipe];
            if km1 == 0 && !(lower[0][p.pi] > 0.0) {
                return Err(Error::Domain(format!(
                    "nonpositive pressure {} at interior state {}",
                    lower[0][p.pi], p.pi
                )));
            }
            if self.signs[i] == 0.0 {
                if let Some(c) = (1..k).map(|o| lower[o][p.m]).find(|c| c.abs() > 0.0) {
                    self.signs[i] = c.signum();
                }
            }
            let mm = &mut self.mm[i];
            mm[km1] = (0..=km1).map(|o| lower[o][p.m] * lower[km1 - o][p.m]).sum();
            let pi_series: Vec<f64> = (0..=km1).map(|o| lower[o][p.pi]).collect();
            let rr = &mut self.rr[i];
            rr[km1] = recip_next(&pi_series, rr, km1);
            let z: f64 = (0..=km1).map(|o| mm[o] * rr[km1 - o]).sum();
            let sign = if self.signs[i] == 0.0 { 1.0 } else { self.signs[i] };
            let h = 2.0 * pp.dl;
            let c2s = pp.sound_speed * pp.sound_speed / pp.area;
            let kf = k as f64;
            cur[p.pi] = -c2s * (lower[km1][p.m_right] - lower[km1][p.m_left]) / h / kf;
            cur[p.m] = (-pp.area * (lower[km1][p.pi_right] - lower[km1][p.pi_left]) / h - pp.friction * sign * z) / kf;
        }
        Ok(())
    }

    /// Order-`k` node-block coefficients given `x1[k]`.
    pub fn step2(&self, sd: &SemiDiscrete, coef: &mut [Vec<f64>], taylor: &[Vec<f64>], k: usize) -> Result<()> {
        for nb in &self.node_blocks {
            let b: Vec<f64> = nb
                .rows
                .iter()
                .map(|&r| NetworkRows::rhs_order(&sd.alg[r], taylor, k) - sd.net.lhs_order(&sd.alg[r], coef, k))
                .collect();
            let sol = nb.factor.solve(&b)?;
            for (&v, s) in nb.vars.iter().zip(sol) {
                coef[k][v] = s;
            }
        }
        Ok(())
    }

    /// Order-`k` power-system block coefficients given `x1[k]`, `x2[k]`.
    pub fn step3(&self, sd: &SemiDiscrete, coef: &mut [Vec<f64>], taylor: &[Vec<f64>], k: usize) -> Result<()> {
        let Some(w33) = &self.w33 else { return Ok(()) };
        let b: Vec<f64> = self
            .x3_rows
            .iter()
            .map(|&r| NetworkRows::rhs_order(&sd.alg[r], taylor, k) - sd.net.lhs_order(&sd.alg[r], coef, k))
            .collect();
        let sol = w33.solve(&b)?;
        for (&v, s) in self.x3_vars.iter().zip(sol) {
            coef[k][v] = s;
        }
        Ok(())
    }

    /// Fills orders `1..=K` of `coef` from `coef[0]`. Orders above 0 must be
    /// zero on entry.
    pub fn compute_orders(&mut self, sd: &SemiDiscrete, coef: &mut [Vec<f64>], taylor: &[Vec<f64>]) -> Result<()> {
        self.begin_window(sd, coef);
        for k in 1..=self.order {
            self.step1(sd, coef, k)?;
            self.step2(sd, coef, taylor, k)?;
            self.step3(sd, coef, taylor, k)?;
        }
        Ok(())
    }

    /// Effective frozen sign per interior point after a window.
    pub fn frozen_signs(&self) -> Vec<f64> {
        self.signs.iter().map(|s| if *s == 0.0 { 1.0 } else { *s }).collect()
    }
}
