//! The complete semi-discrete system: interior pipeline ODEs, end closures
//! and the shared network rows, with its steady-state residual.

use crate::baselines::newton::{newton, NewtonConfig, NewtonSolution};
use crate::discretization::{check_square, gt_slack_node, Layout, PipelineGrid, SquareReport};
use crate::equations::{AlgRow, NetworkRows, Rhs, RowBuilder, RowTag, FLOW_SCALE, PRESSURE_SCALE};
use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;
use crate::scenario::BoundSignals;
use crate::system::IegsSystem;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipeParams {
    pub area: f64,
    /// `λc²/(2DS)`.
    pub friction: f64,
    pub sound_speed: f64,
    pub dl: f64,
}

/// Interior grid point with the indices of its own and neighbouring states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteriorPoint {
    pub pipe: usize,
    pub pi: usize,
    pub m: usize,
    pub pi_left: usize,
    pub pi_right: usize,
    pub m_left: usize,
    pub m_right: usize,
}

#[derive(Debug, Clone)]
pub struct SemiDiscrete {
    pub layout: Layout,
    pub net: NetworkRows,
    /// Network rows followed by the two end closures of every pipeline.
    pub alg: Vec<AlgRow>,
    pub params: Vec<PipeParams>,
    pub interior: Vec<InteriorPoint>,
    pub slack_node: Option<usize>,
    pub report: SquareReport,
}

impl SemiDiscrete {
    pub fn new(system: &IegsSystem, grids: Vec<PipelineGrid>, signals: &BoundSignals) -> Result<Self> {
        let layout = Layout::new(system, grids);
        let report = check_square(system, &layout)?;
        let net = NetworkRows::build(system, &layout, signals);
        let mut alg = net.rows.clone();
        let c = system.gas.sound_speed_mps;
        let mut params = Vec::new();
        let mut interior = Vec::new();
        for (j, g) in layout.grids.iter().enumerate() {
            let p = &system.gas.pipelines[j];
            params.push(PipeParams {
                area: p.cross_section_m2,
                friction: p.friction_factor(c),
                sound_speed: c,
                dl: g.dl_m,
            });
            let r = c / p.cross_section_m2;
            let n = g.n_seg;
            let (head, tail) = system.pipe_ends(j);
            let mut tail_terms = Vec::new();
            for (pt, w) in [(n, 1.0), (n - 2, 1.0), (n - 1, -2.0)] {
                tail_terms.push((layout.pi(j, pt), w));
                tail_terms.push((layout.m(j, pt), w * r));
            }
            let mut head_terms = Vec::new();
            for (pt, w) in [(0, 1.0), (2, 1.0), (1, -2.0)] {
                head_terms.push((layout.pi(j, pt), w));
                head_terms.push((layout.m(j, pt), -w * r));
            }
            alg.push(AlgRow::linear(
                head_terms,
                Rhs::Zero,
                PRESSURE_SCALE,
                RowTag::Node(head),
            ));
            alg.push(AlgRow::linear(
                tail_terms,
                Rhs::Zero,
                PRESSURE_SCALE,
                RowTag::Node(tail),
            ));
            for k in 1..n {
                interior.push(InteriorPoint {
                    pipe: j,
                    pi: layout.pi(j, k),
                    m: layout.m(j, k),
                    pi_left: layout.pi(j, k - 1),
                    pi_right: layout.pi(j, k + 1),
                    m_left: layout.m(j, k - 1),
                    m_right: layout.m(j, k + 1),
                });
            }
        }
        Ok(Self {
            layout,
            net,
            alg,
            params,
            interior,
            slack_node: gt_slack_node(system),
            report,
        })
    }

    /// Residual scale of the two ODE rows of an interior point.
    pub fn ode_scales(&self, p: &InteriorPoint) -> (f64, f64) {
        let pp = &self.params[p.pipe];
        let c2s = pp.sound_speed * pp.sound_speed / pp.area;
        (
            c2s / (2.0 * pp.dl) * FLOW_SCALE,
            pp.area / (2.0 * pp.dl) * PRESSURE_SCALE,
        )
    }

    /// `(dπ/dt, dm/dt)` at every interior point.
    pub fn time_derivatives(&self, x: &[f64]) -> Result<Vec<(f64, f64)>> {
        self.interior
            .iter()
            .map(|p| {
                let pp = &self.params[p.pipe];
                let h = 2.0 * pp.dl;
                let pi = x[p.pi];
                if !(pi > 0.0) {
                    return Err(Error::Domain(format!(
                        "nonpositive pressure {pi} at interior state {}",
                        p.pi
                    )));
                }
                let m = x[p.m];
                let dpi = -(pp.sound_speed * pp.sound_speed / pp.area) * (x[p.m_right] - x[p.m_left]) / h;
                let dm = -pp.area * (x[p.pi_right] - x[p.pi_left]) / h - pp.friction * m * m.abs() / pi;
                Ok((dpi, dm))
            })
            .collect()
    }

    /// Unscaled algebraic residuals.
    pub fn algebraic_residual(&self, x: &[f64], sig: &[f64]) -> Vec<f64> {
        self.alg
            .iter()
            .map(|r| self.net.lhs(r, x) - NetworkRows::rhs(r, sig))
            .collect()
    }

    /// Scaled steady-state residual: interior derivatives then algebraic rows.
    pub fn steady_residual(&self, x: &[f64], sig: &[f64]) -> Result<Vec<f64>> {
        let mut r = Vec::with_capacity(self.layout.len());
        for (p, (dpi, dm)) in self.interior.iter().zip(self.time_derivatives(x)?) {
            let (sp, sm) = self.ode_scales(p);
            r.push(dpi / sp);
            r.push(dm / sm);
        }
        for (row, v) in self.alg.iter().zip(self.algebraic_residual(x, sig)) {
            r.push(v / row.scale);
        }
        Ok(r)
    }

    pub fn steady_jacobian(&self, x: &[f64]) -> SparseMatrix {
        let mut t = RowBuilder::new();
        for (i, p) in self.interior.iter().enumerate() {
            let pp = &self.params[p.pipe];
            let (sp, sm) = self.ode_scales(p);
            let h = 2.0 * pp.dl;
            let c2s = pp.sound_speed * pp.sound_speed / pp.area;
            let (rp, rm) = (2 * i, 2 * i + 1);
            t.push(rp, p.m_right, -c2s / h / sp);
            t.push(rp, p.m_left, c2s / h / sp);
            t.push(rm, p.pi_right, -pp.area / h / sm);
            t.push(rm, p.pi_left, pp.area / h / sm);
            let (pi, m) = (x[p.pi], x[p.m]);
            t.push(rm, p.m, -pp.friction * 2.0 * m.abs() / pi / sm);
            t.push(rm, p.pi, pp.friction * m * m.abs() / (pi * pi) / sm);
        }
        let off = 2 * self.interior.len();
        for (r, row) in self.alg.iter().enumerate() {
            self.net.row_jacobian(row, x, |c, v| t.push(off + r, c, v / row.scale));
        }
        SparseMatrix::from_triplets(self.layout.len(), self.layout.len(), &t.into_triplets())
    }

    /// Newton solve for the discrete steady state under boundary values `sig`.
    pub fn settle(&self, x0: Vec<f64>, sig: &[f64], cfg: &NewtonConfig) -> Result<NewtonSolution> {
        newton(
            |x| self.steady_residual(x, sig),
            |x| Ok(self.steady_jacobian(x)),
            x0,
            cfg,
        )
        .map_err(|e| e.with_context("while settling the semi-discrete steady state"))
    }
}
