//! Algebraic equations shared by every solver: nodal pressure consistency,
//! mass balance, node boundary rows, coupling devices and rectangular power
//! flow. Each row is `lhs(x) = rhs(signals)` where `lhs` is a sparse linear
//! part plus an optional power-flow term.

use crate::discretization::Layout;
use crate::scenario::BoundSignals;
use crate::system::{BusKind, CouplingKind, IegsSystem, NodeKind};
use crate::taylor::conv_slices;

/// Reference magnitudes used to make residuals dimensionless.
pub const PRESSURE_SCALE: f64 = 1e5;
pub const FLOW_SCALE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Linear,
    /// `P_b(e, f)` plus the linear part.
    Active(usize),
    /// `Q_b(e, f)` plus the linear part.
    Reactive(usize),
    /// `e_b² + f_b²`.
    Magnitude(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rhs {
    Zero,
    Signal { sig: usize, scale: f64 },
    SignalSquared { sig: usize },
}

/// Owner of a row for block partitioning: a gas node, or the power system
/// side (power flow and unknown-power coupling rows).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowTag {
    Node(usize),
    Eps,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgRow {
    pub kind: RowKind,
    pub linear: Vec<(usize, f64)>,
    pub rhs: Rhs,
    pub scale: f64,
    pub tag: RowTag,
}

impl AlgRow {
    pub fn linear(terms: Vec<(usize, f64)>, rhs: Rhs, scale: f64, tag: RowTag) -> Self {
        Self {
            kind: RowKind::Linear,
            linear: terms,
            rhs,
            scale,
            tag,
        }
    }
}

/// Sparse row of the bus admittance matrix.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AdmittanceRow {
    pub entries: Vec<(usize, f64, f64)>,
}

pub fn admittance_rows(system: &IegsSystem) -> Vec<AdmittanceRow> {
    let y = &system.admittance;
    (0..system.bus_count())
        .map(|b| AdmittanceRow {
            entries: (0..system.bus_count())
                .filter(|&k| y.g[(b, k)] != 0.0 || y.b[(b, k)] != 0.0)
                .map(|k| (k, y.g[(b, k)], y.b[(b, k)]))
                .collect(),
        })
        .collect()
}

/// Triplet accumulator for sparse Jacobians.
#[derive(Debug, Default)]
pub struct RowBuilder {
    triplets: Vec<(usize, usize, f64)>,
}

impl RowBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, v: f64) {
        self.triplets.push((row, col, v));
    }

    pub fn into_triplets(self) -> Vec<(usize, usize, f64)> {
        self.triplets
    }
}

#[derive(Debug, Clone)]
pub struct NetworkRows {
    pub rows: Vec<AlgRow>,
    scales: Vec<f64>,
    adm: Vec<AdmittanceRow>,
    e_idx: Vec<usize>,
    f_idx: Vec<usize>,
}

impl NetworkRows {
    pub fn build(system: &IegsSystem, layout: &Layout, signals: &BoundSignals) -> Self {
        let mut rows = Vec::new();
        let base = system.power_base_w();

        for j in 0..system.pipe_count() {
            let (head, tail) = system.pipe_ends(j);
            let n = layout.n_seg(j);
            let ratio = system.gas.nodes[head].compressor_ratio;
            rows.push(AlgRow::linear(
                vec![(layout.pi(j, 0), 1.0), (layout.node_pi(head), -ratio)],
                Rhs::Zero,
                PRESSURE_SCALE,
                RowTag::Node(head),
            ));
            rows.push(AlgRow::linear(
                vec![(layout.pi(j, n), 1.0), (layout.node_pi(tail), -1.0)],
                Rhs::Zero,
                PRESSURE_SCALE,
                RowTag::Node(tail),
            ));
        }

        for i in 0..system.node_count() {
            let mut terms = vec![(layout.node_m(i), 1.0)];
            terms.extend(system.pipes_out(i).iter().map(|&j| (layout.m(j, 0), -1.0)));
            terms.extend(system.pipes_in(i).iter().map(|&j| (layout.m(j, layout.n_seg(j)), 1.0)));
            rows.push(AlgRow::linear(terms, Rhs::Zero, FLOW_SCALE, RowTag::Node(i)));

            let dev = system.node_coupling(i);
            let row = match dev.map(|d| (d.kind, d)) {
                Some((CouplingKind::GtPv, d)) => {
                    let b = system.bus_idx(&d.eps_bus).expect("validated bus");
                    AlgRow::linear(
                        vec![(layout.node_m(i), 1.0)],
                        Rhs::Signal {
                            sig: signals.bus_p[b].expect("bound p signal"),
                            scale: -base / d.efficiency,
                        },
                        FLOW_SCALE,
                        RowTag::Node(i),
                    )
                }
                Some((CouplingKind::P2g, d)) => {
                    let b = system.bus_idx(&d.eps_bus).expect("validated bus");
                    AlgRow::linear(
                        vec![(layout.node_m(i), 1.0)],
                        Rhs::Signal {
                            sig: signals.bus_p[b].expect("bound p signal"),
                            scale: -d.efficiency * base,
                        },
                        FLOW_SCALE,
                        RowTag::Node(i),
                    )
                }
                Some((CouplingKind::GtSlack, d)) => {
                    let b = system.bus_idx(&d.eps_bus).expect("validated bus");
                    let k = layout.pcp_of_bus(b).expect("slack turbine power");
                    AlgRow::linear(
                        vec![(layout.node_m(i), 1.0), (layout.pcp(k), base / d.efficiency)],
                        Rhs::Zero,
                        FLOW_SCALE,
                        RowTag::Node(i),
                    )
                }
                _ => match system.gas.nodes[i].kind {
                    NodeKind::Source => AlgRow::linear(
                        vec![(layout.node_pi(i), 1.0)],
                        Rhs::Signal {
                            sig: signals.node_pressure[i].expect("bound pressure signal"),
                            scale: 1.0,
                        },
                        PRESSURE_SCALE,
                        RowTag::Node(i),
                    ),
                    NodeKind::Load => AlgRow::linear(
                        vec![(layout.node_m(i), 1.0)],
                        Rhs::Signal {
                            sig: signals.node_load[i].expect("bound load signal"),
                            scale: -1.0,
                        },
                        FLOW_SCALE,
                        RowTag::Node(i),
                    ),
                    NodeKind::Junction => {
                        AlgRow::linear(vec![(layout.node_m(i), 1.0)], Rhs::Zero, FLOW_SCALE, RowTag::Node(i))
                    }
                },
            };
            rows.push(row);
        }

        for (b, bus) in system.eps.buses.iter().enumerate() {
            let dev = system.bus_coupling(b);
            let pcp = layout.pcp_of_bus(b);
            let sig = |s: Option<usize>, scale: f64| Rhs::Signal {
                sig: s.expect("bound bus signal"),
                scale,
            };
            match bus.kind {
                BusKind::Slack => {
                    let (se, sf) = signals.slack.expect("bound slack signals");
                    rows.push(AlgRow::linear(
                        vec![(layout.e(b), 1.0)],
                        Rhs::Signal { sig: se, scale: 1.0 },
                        1.0,
                        RowTag::Eps,
                    ));
                    rows.push(AlgRow::linear(
                        vec![(layout.f(b), 1.0)],
                        Rhs::Signal { sig: sf, scale: 1.0 },
                        1.0,
                        RowTag::Eps,
                    ));
                    if let Some(k) = pcp {
                        rows.push(AlgRow {
                            kind: RowKind::Active(b),
                            linear: vec![(layout.pcp(k), -1.0)],
                            rhs: Rhs::Zero,
                            scale: 1.0,
                            tag: RowTag::Eps,
                        });
                    }
                }
                BusKind::Pv => {
                    rows.push(AlgRow {
                        kind: RowKind::Active(b),
                        linear: vec![],
                        rhs: sig(signals.bus_p[b], 1.0),
                        scale: 1.0,
                        tag: RowTag::Eps,
                    });
                    rows.push(AlgRow {
                        kind: RowKind::Magnitude(b),
                        linear: vec![],
                        rhs: Rhs::SignalSquared {
                            sig: signals.bus_u[b].expect("bound magnitude signal"),
                        },
                        scale: 1.0,
                        tag: RowTag::Eps,
                    });
                }
                BusKind::Pq => match (dev.map(|d| d.kind), pcp) {
                    (Some(CouplingKind::ElectricCompressor), Some(k)) => {
                        let d = dev.unwrap();
                        rows.push(AlgRow {
                            kind: RowKind::Active(b),
                            linear: vec![(layout.pcp(k), -1.0)],
                            rhs: Rhs::Zero,
                            scale: 1.0,
                            tag: RowTag::Eps,
                        });
                        rows.push(AlgRow {
                            kind: RowKind::Reactive(b),
                            linear: vec![(layout.pcp(k), -d.tan_phi)],
                            rhs: Rhs::Zero,
                            scale: 1.0,
                            tag: RowTag::Eps,
                        });
                        // consumed power is proportional to the flow leaving the node through pipeline heads
                        let i = system.node_idx(&d.gas_node).expect("validated node");
                        let mut terms = vec![(layout.pcp(k), base)];
                        terms.extend(system.pipes_out(i).iter().map(|&j| (layout.m(j, 0), d.efficiency)));
                        rows.push(AlgRow::linear(terms, Rhs::Zero, base, RowTag::Eps));
                    }
                    (Some(CouplingKind::P2g), _) => {
                        let d = dev.unwrap();
                        rows.push(AlgRow {
                            kind: RowKind::Active(b),
                            linear: vec![],
                            rhs: sig(signals.bus_p[b], 1.0),
                            scale: 1.0,
                            tag: RowTag::Eps,
                        });
                        rows.push(AlgRow {
                            kind: RowKind::Reactive(b),
                            linear: vec![],
                            rhs: sig(signals.bus_p[b], d.tan_phi),
                            scale: 1.0,
                            tag: RowTag::Eps,
                        });
                    }
                    _ => {
                        rows.push(AlgRow {
                            kind: RowKind::Active(b),
                            linear: vec![],
                            rhs: sig(signals.bus_p[b], 1.0),
                            scale: 1.0,
                            tag: RowTag::Eps,
                        });
                        rows.push(AlgRow {
                            kind: RowKind::Reactive(b),
                            linear: vec![],
                            rhs: sig(signals.bus_q[b], 1.0),
                            scale: 1.0,
                            tag: RowTag::Eps,
                        });
                    }
                },
            }
        }

        let scales = rows.iter().map(|r| r.scale).collect();
        Self {
            rows,
            scales,
            adm: admittance_rows(system),
            e_idx: (0..system.bus_count()).map(|b| layout.e(b)).collect(),
            f_idx: (0..system.bus_count()).map(|b| layout.f(b)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    /// `(a_b, c_b) = (Σ G e − B f, Σ B e + G f)` at bus `b`.
    fn currents(&self, b: usize, x: &[f64]) -> (f64, f64) {
        let mut a = 0.0;
        let mut c = 0.0;
        for &(k, g, bb) in &self.adm[b].entries {
            let (e, f) = (x[self.e_idx[k]], x[self.f_idx[k]]);
            a += g * e - bb * f;
            c += bb * e + g * f;
        }
        (a, c)
    }

    fn nonlinear(&self, kind: RowKind, x: &[f64]) -> f64 {
        match kind {
            RowKind::Linear => 0.0,
            RowKind::Active(b) => {
                let (a, c) = self.currents(b, x);
                x[self.e_idx[b]] * a + x[self.f_idx[b]] * c
            }
            RowKind::Reactive(b) => {
                let (a, c) = self.currents(b, x);
                x[self.f_idx[b]] * a - x[self.e_idx[b]] * c
            }
            RowKind::Magnitude(b) => x[self.e_idx[b]].powi(2) + x[self.f_idx[b]].powi(2),
        }
    }

    pub fn lhs(&self, row: &AlgRow, x: &[f64]) -> f64 {
        self.nonlinear(row.kind, x) + row.linear.iter().map(|&(i, c)| c * x[i]).sum::<f64>()
    }

    pub fn rhs(row: &AlgRow, sig: &[f64]) -> f64 {
        match row.rhs {
            Rhs::Zero => 0.0,
            Rhs::Signal { sig: s, scale } => scale * sig[s],
            Rhs::SignalSquared { sig: s } => sig[s] * sig[s],
        }
    }

    /// Unscaled residuals `lhs(x) − rhs(signals)`.
    pub fn residual(&self, x: &[f64], sig: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| self.lhs(r, x) - Self::rhs(r, sig)).collect()
    }

    /// Unscaled Jacobian entries of row `r` at `x`, passed to `emit(col, value)`.
    pub fn row_jacobian(&self, row: &AlgRow, x: &[f64], mut emit: impl FnMut(usize, f64)) {
        for &(i, c) in &row.linear {
            emit(i, c);
        }
        match row.kind {
            RowKind::Linear => {}
            RowKind::Active(b) | RowKind::Reactive(b) => {
                let active = matches!(row.kind, RowKind::Active(_));
                let (a, c) = self.currents(b, x);
                let (eb, fb) = (x[self.e_idx[b]], x[self.f_idx[b]]);
                for &(k, g, bb) in &self.adm[b].entries {
                    let (mut de, mut df) = if active {
                        (eb * g + fb * bb, -eb * bb + fb * g)
                    } else {
                        (fb * g - eb * bb, -fb * bb - eb * g)
                    };
                    if k == b {
                        if active {
                            de += a;
                            df += c;
                        } else {
                            de -= c;
                            df += a;
                        }
                    }
                    emit(self.e_idx[k], de);
                    emit(self.f_idx[k], df);
                }
                if !self.adm[b].entries.iter().any(|e| e.0 == b) {
                    // isolated bus: only the self terms survive
                    if active {
                        emit(self.e_idx[b], a);
                        emit(self.f_idx[b], c);
                    } else {
                        emit(self.e_idx[b], -c);
                        emit(self.f_idx[b], a);
                    }
                }
            }
            RowKind::Magnitude(b) => {
                emit(self.e_idx[b], 2.0 * x[self.e_idx[b]]);
                emit(self.f_idx[b], 2.0 * x[self.f_idx[b]]);
            }
        }
    }

    /// Unscaled Jacobian of every row, row indices starting at 0.
    pub fn jacobian_triplets(&self, x: &[f64], out: &mut RowBuilder) {
        self.jacobian_triplets_at(x, 0, out);
    }

    pub fn jacobian_triplets_at(&self, x: &[f64], row_offset: usize, out: &mut RowBuilder) {
        for (r, row) in self.rows.iter().enumerate() {
            self.row_jacobian(row, x, |c, v| out.push(row_offset + r, c, v));
        }
    }

    /// Order-`k` coefficient of a row's left-hand side given coefficient
    /// vectors `coef[order][var]` for orders `0..=k`. With the order-`k`
    /// entries zeroed this yields the cross terms of the order-`k` equation.
    pub fn lhs_order(&self, row: &AlgRow, coef: &[Vec<f64>], k: usize) -> f64 {
        let lin: f64 = row.linear.iter().map(|&(i, c)| c * coef[k][i]).sum();
        let series = |idx: usize| -> Vec<f64> { (0..=k).map(|o| coef[o][idx]).collect() };
        let nl = match row.kind {
            RowKind::Linear => 0.0,
            RowKind::Active(b) | RowKind::Reactive(b) => {
                let mut a = vec![0.0; k + 1];
                let mut c = vec![0.0; k + 1];
                for &(j, g, bb) in &self.adm[b].entries {
                    for o in 0..=k {
                        let (e, f) = (coef[o][self.e_idx[j]], coef[o][self.f_idx[j]]);
                        a[o] += g * e - bb * f;
                        c[o] += bb * e + g * f;
                    }
                }
                let eb = series(self.e_idx[b]);
                let fb = series(self.f_idx[b]);
                if matches!(row.kind, RowKind::Active(_)) {
                    conv_slices(&eb, &a, k) + conv_slices(&fb, &c, k)
                } else {
                    conv_slices(&fb, &a, k) - conv_slices(&eb, &c, k)
                }
            }
            RowKind::Magnitude(b) => {
                let eb = series(self.e_idx[b]);
                let fb = series(self.f_idx[b]);
                conv_slices(&eb, &eb, k) + conv_slices(&fb, &fb, k)
            }
        };
        lin + nl
    }

    /// Order-`k` coefficient of a row's right-hand side from signal Taylor
    /// coefficients `taylor[sig][order]`.
    pub fn rhs_order(row: &AlgRow, taylor: &[Vec<f64>], k: usize) -> f64 {
        match row.rhs {
            Rhs::Zero => 0.0,
            Rhs::Signal { sig, scale } => scale * taylor[sig][k],
            Rhs::SignalSquared { sig } => conv_slices(&taylor[sig], &taylor[sig], k),
        }
    }
}

/// Voltage magnitude and angle (rad) from rectangular components.
pub fn polar(e: f64, f: f64) -> (f64, f64) {
    (e.hypot(f), f.atan2(e))
}
