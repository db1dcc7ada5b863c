//! Spatial grids, global variable layout and the semi-discrete pipeline
//! equations (central stencil plus characteristic extrapolation at the ends).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::system::{CouplingKind, IegsSystem, NodeKind, Pipeline};

/// Uniform grid over one pipeline, points `0..=n_seg`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineGrid {
    pub pipe: usize,
    pub n_seg: usize,
    pub dl_m: f64,
}

impl PipelineGrid {
    pub fn points(&self) -> usize {
        self.n_seg + 1
    }
}

/// Smallest grid for which both end closures reference distinct points.
pub const MIN_SEGMENTS: usize = 3;

pub fn make_grid(pipe_index: usize, pipe: &Pipeline, target_dl_m: f64) -> PipelineGrid {
    assert!(target_dl_m > 0.0, "spatial step must be positive");
    let n = ((pipe.length_m / target_dl_m).round() as usize).max(MIN_SEGMENTS);
    PipelineGrid {
        pipe: pipe_index,
        n_seg: n,
        dl_m: pipe.length_m / n as f64,
    }
}

pub fn make_grids(system: &IegsSystem, target_dl_m: f64) -> Vec<PipelineGrid> {
    system
        .gas
        .pipelines
        .iter()
        .enumerate()
        .map(|(j, p)| make_grid(j, p, target_dl_m))
        .collect()
}

/// Global index map for every unknown: pipeline grid states, nodal
/// pressure/injection, bus voltage components and coupled-bus powers.
///
/// Grid states are interleaved `(π_n, m_n)` per pipeline so the Newton
/// baselines see a near-banded matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub grids: Vec<PipelineGrid>,
    pipe_offset: Vec<usize>,
    node_offset: usize,
    node_count: usize,
    bus_offset: usize,
    bus_count: usize,
    pcp_offset: usize,
    pcp_buses: Vec<usize>,
    pcp_of_bus: Vec<Option<usize>>,
    len: usize,
}

impl Layout {
    pub fn new(system: &IegsSystem, grids: Vec<PipelineGrid>) -> Self {
        assert_eq!(grids.len(), system.pipe_count());
        let mut pipe_offset = Vec::with_capacity(grids.len());
        let mut off = 0;
        for g in &grids {
            pipe_offset.push(off);
            off += 2 * g.points();
        }
        let node_offset = off;
        off += 2 * system.node_count();
        let bus_offset = off;
        off += 2 * system.bus_count();
        let pcp_offset = off;
        let mut pcp_buses = Vec::new();
        let mut pcp_of_bus = vec![None; system.bus_count()];
        for (b, slot) in pcp_of_bus.iter_mut().enumerate() {
            if let Some(dev) = system.bus_coupling(b) {
                if matches!(dev.kind, CouplingKind::GtSlack | CouplingKind::ElectricCompressor) {
                    *slot = Some(pcp_buses.len());
                    pcp_buses.push(b);
                }
            }
        }
        off += pcp_buses.len();
        Self {
            grids,
            pipe_offset,
            node_offset,
            node_count: system.node_count(),
            bus_offset,
            bus_count: system.bus_count(),
            pcp_offset,
            pcp_buses,
            pcp_of_bus,
            len: off,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn pipe_count(&self) -> usize {
        self.grids.len()
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn bus_count(&self) -> usize {
        self.bus_count
    }

    pub fn n_seg(&self, j: usize) -> usize {
        self.grids[j].n_seg
    }

    #[inline]
    pub fn pi(&self, j: usize, n: usize) -> usize {
        self.pipe_offset[j] + 2 * n
    }

    #[inline]
    pub fn m(&self, j: usize, n: usize) -> usize {
        self.pipe_offset[j] + 2 * n + 1
    }

    pub fn node_pi(&self, i: usize) -> usize {
        self.node_offset + 2 * i
    }

    pub fn node_m(&self, i: usize) -> usize {
        self.node_offset + 2 * i + 1
    }

    pub fn e(&self, b: usize) -> usize {
        self.bus_offset + 2 * b
    }

    pub fn f(&self, b: usize) -> usize {
        self.bus_offset + 2 * b + 1
    }

    pub fn pcp(&self, k: usize) -> usize {
        self.pcp_offset + k
    }

    /// Buses carrying an unknown injected power (gas-turbine slack and
    /// electric compressors), in layout order.
    pub fn pcp_buses(&self) -> &[usize] {
        &self.pcp_buses
    }

    pub fn pcp_of_bus(&self, b: usize) -> Option<usize> {
        self.pcp_of_bus[b]
    }

    /// Range of pipeline `j`'s grid states in the global vector.
    pub fn pipe_range(&self, j: usize) -> std::ops::Range<usize> {
        self.pipe_offset[j]..self.pipe_offset[j] + 2 * self.grids[j].points()
    }

    pub fn gas_len(&self) -> usize {
        self.bus_offset
    }

    /// Human-readable variable names following the result-file convention.
    pub fn variable_names(&self, system: &IegsSystem) -> Vec<String> {
        let mut names = vec![String::new(); self.len];
        for (j, g) in self.grids.iter().enumerate() {
            let id = &system.gas.pipelines[j].id;
            for n in 0..g.points() {
                names[self.pi(j, n)] = format!("pipe.{id}.pi.{n}");
                names[self.m(j, n)] = format!("pipe.{id}.m.{n}");
            }
        }
        for (i, node) in system.gas.nodes.iter().enumerate() {
            names[self.node_pi(i)] = format!("node.{}.pi", node.id);
            names[self.node_m(i)] = format!("node.{}.m", node.id);
        }
        for (b, bus) in system.eps.buses.iter().enumerate() {
            names[self.e(b)] = format!("bus.{}.e", bus.id);
            names[self.f(b)] = format!("bus.{}.f", bus.id);
        }
        for (k, &b) in self.pcp_buses.iter().enumerate() {
            names[self.pcp(k)] = format!("bus.{}.pcp", system.eps.buses[b].id);
        }
        names
    }
}

/// Right-hand side of the semi-discrete pipeline ODEs at interior points
/// `1..n_seg`, returned as `(dπ/dt, dm/dt)` of length `n_seg − 1`.
pub fn interior_rhs(
    grid: &PipelineGrid,
    pi: &[f64],
    m: &[f64],
    pipe: &Pipeline,
    c: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = grid.n_seg;
    assert_eq!(pi.len(), n + 1);
    assert_eq!(m.len(), n + 1);
    let s = pipe.cross_section_m2;
    let fr = pipe.friction_factor(c);
    let h = 2.0 * grid.dl_m;
    let mut dpi = Vec::with_capacity(n - 1);
    let mut dm = Vec::with_capacity(n - 1);
    for k in 1..n {
        if !(pi[k] > 0.0) {
            return Err(Error::Domain(format!(
                "nonpositive pressure {} at point {k} of pipeline '{}'",
                pi[k], pipe.id
            )));
        }
        dpi.push(-(c * c / s) * (m[k + 1] - m[k - 1]) / h);
        dm.push(-s * (pi[k + 1] - pi[k - 1]) / h - fr * m[k] * m[k].abs() / pi[k]);
    }
    Ok((dpi, dm))
}

/// Tail closure: second difference of `π + (c/S)·m` over the last three
/// points.
pub fn tail_boundary_residual(grid: &PipelineGrid, pi: &[f64], m: &[f64], pipe: &Pipeline, c: f64) -> f64 {
    let n = grid.n_seg;
    let r = c / pipe.cross_section_m2;
    let w = |k: usize| pi[k] + r * m[k];
    w(n) + w(n - 2) - 2.0 * w(n - 1)
}

/// Head closure: second difference of `π − (c/S)·m` over points 0, 1, 2.
pub fn head_boundary_residual(_grid: &PipelineGrid, pi: &[f64], m: &[f64], pipe: &Pipeline, c: f64) -> f64 {
    let r = c / pipe.cross_section_m2;
    let w = |k: usize| pi[k] - r * m[k];
    w(0) + w(2) - 2.0 * w(1)
}

/// Per-family equation counts of the semi-discrete system.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SquareReport {
    pub unknowns: usize,
    /// Interior pipeline ODEs.
    pub f1: usize,
    /// End closures away from / at a gas-turbine slack node.
    pub f2: (usize, usize),
    /// Nodal pressure consistency, mass balance and boundary rows.
    pub f3: (usize, usize),
    /// Power-flow rows.
    pub f4: usize,
    /// Coupling-device rows (known-power devices, unknown-power devices).
    pub f5: (usize, usize),
}

impl SquareReport {
    pub fn equations(&self) -> usize {
        self.f1 + self.f2.0 + self.f2.1 + self.f3.0 + self.f3.1 + self.f4 + self.f5.0 + self.f5.1
    }
}

/// Node hosting the gas-turbine slack device, if any.
pub fn gt_slack_node(system: &IegsSystem) -> Option<usize> {
    system
        .couplings
        .iter()
        .find(|d| d.kind == CouplingKind::GtSlack)
        .and_then(|d| system.node_idx(&d.gas_node))
}

/// Counts equations per family and checks the system is square.
pub fn check_square(system: &IegsSystem, layout: &Layout) -> Result<SquareReport> {
    let slack_node = gt_slack_node(system);
    let mut f1 = 0;
    let mut f2 = (0, 0);
    let mut f3 = (0, 0);
    for (j, g) in layout.grids.iter().enumerate() {
        if g.n_seg < MIN_SEGMENTS {
            return Err(Error::Structural(format!(
                "pipeline '{}' has {} segments, at least {MIN_SEGMENTS} required",
                system.gas.pipelines[j].id, g.n_seg
            )));
        }
        f1 += 2 * (g.n_seg - 1);
        let (head, tail) = system.pipe_ends(j);
        for node in [head, tail] {
            // one closure and one pressure-consistency row per end
            if Some(node) == slack_node {
                f2.1 += 1;
                f3.1 += 1;
            } else {
                f2.0 += 1;
                f3.0 += 1;
            }
        }
    }
    let mut f5 = (0, 0);
    for i in 0..system.node_count() {
        let block = if Some(i) == slack_node { &mut f3.1 } else { &mut f3.0 };
        // mass balance
        *block += 1;
        match system.node_coupling(i).map(|d| d.kind) {
            Some(CouplingKind::GtPv) | Some(CouplingKind::P2g) => f5.0 += 1,
            Some(CouplingKind::GtSlack) => f5.1 += 1,
            _ => {
                // source pressure, load withdrawal or junction zero injection
                debug_assert!(matches!(
                    system.gas.nodes[i].kind,
                    NodeKind::Source | NodeKind::Load | NodeKind::Junction
                ));
                *block += 1;
            }
        }
    }
    let mut f4 = 2 * system.bus_count();
    for d in &system.couplings {
        match d.kind {
            CouplingKind::GtSlack => f4 += 1,
            CouplingKind::ElectricCompressor => f5.1 += 1,
            _ => {}
        }
    }
    let report = SquareReport {
        unknowns: layout.len(),
        f1,
        f2,
        f3,
        f4,
        f5,
    };
    if report.equations() != report.unknowns {
        return Err(Error::Structural(format!(
            "system is not square: {} unknowns vs {} equations ({report:?})",
            report.unknowns,
            report.equations()
        )));
    }
    Ok(report)
}
