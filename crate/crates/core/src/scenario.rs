//! Boundary signals, bound boundary sets, initial states and the steady-state
//! initializer.

use std::collections::BTreeMap;

use crate::baselines::newton::{newton, NewtonConfig};
use crate::discretization::{Layout, PipelineGrid};
use crate::equations::{NetworkRows, RowBuilder};
use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;
use crate::system::{BusKind, CouplingKind, IegsSystem, NodeKind};
use crate::taylor::{eval_slice, Series};

/// Piecewise polynomial in local time. Segment `i` starts at
/// `breakpoints[i]` and is valid until the next breakpoint; the last segment
/// is open-ended.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePolySignal {
    breakpoints: Vec<f64>,
    segments: Vec<Vec<f64>>,
}

impl PiecewisePolySignal {
    pub fn new(breakpoints: Vec<f64>, segments: Vec<Vec<f64>>) -> Result<Self> {
        if breakpoints.is_empty() || breakpoints.len() != segments.len() {
            return Err(Error::Range(format!(
                "signal needs one breakpoint per segment ({} breakpoints, {} segments)",
                breakpoints.len(),
                segments.len()
            )));
        }
        if breakpoints[0] != 0.0 {
            return Err(Error::Range(format!(
                "first breakpoint must be 0, got {}",
                breakpoints[0]
            )));
        }
        if breakpoints.iter().any(|t| !t.is_finite()) || breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Range(
                "breakpoints must be finite and strictly increasing".into(),
            ));
        }
        for seg in &segments {
            if seg.is_empty() || seg.iter().any(|c| !c.is_finite()) {
                return Err(Error::Range("segment coefficients must be nonempty and finite".into()));
            }
        }
        Ok(Self { breakpoints, segments })
    }

    pub fn constant(value: f64) -> Self {
        Self {
            breakpoints: vec![0.0],
            segments: vec![vec![value]],
        }
    }

    /// Piecewise-constant signal from `(start, value)` pairs.
    pub fn steps(steps: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            steps.iter().map(|s| s.0).collect(),
            steps.iter().map(|s| vec![s.1]).collect(),
        )
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn segments(&self) -> &[Vec<f64>] {
        &self.segments
    }

    fn segment_at(&self, t: f64) -> Result<usize> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::Range(format!("signal evaluated at t = {t}")));
        }
        Ok(self.breakpoints.partition_point(|&b| b <= t) - 1)
    }
}

/// Value of the segment containing `t` (right-continuous at breakpoints).
pub fn eval_signal(sig: &PiecewisePolySignal, t: f64) -> Result<f64> {
    let i = sig.segment_at(t)?;
    Ok(eval_slice(&sig.segments[i], t - sig.breakpoints[i]))
}

/// Taylor coefficients of `sig` about `t0` using the segment that contains
/// `[t0, t0 + ε)`.
pub fn signal_taylor(sig: &PiecewisePolySignal, t0: f64, order: usize) -> Result<Series> {
    let i = sig.segment_at(t0)?;
    let a = &sig.segments[i];
    let tau = t0 - sig.breakpoints[i];
    let mut c = vec![0.0; order + 1];
    for (k, ck) in c.iter_mut().enumerate() {
        if k >= a.len() {
            break;
        }
        // c_k = Σ_{j≥k} a_j·C(j,k)·τ^(j−k), evaluated by Horner in τ
        let mut acc = 0.0;
        for j in (k..a.len()).rev() {
            acc = acc * tau + a[j] * binomial(j, k);
        }
        *ck = acc;
    }
    Ok(Series::from_coeffs(c))
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PvSignals {
    pub p: PiecewisePolySignal,
    pub u: PiecewisePolySignal,
}

/// `q` is omitted on buses whose reactive power follows from a coupling
/// device's power factor.
#[derive(Debug, Clone, PartialEq)]
pub struct PqSignals {
    pub p: PiecewisePolySignal,
    pub q: Option<PiecewisePolySignal>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlackSignals {
    pub e: PiecewisePolySignal,
    pub f: PiecewisePolySignal,
}

/// Boundary signals keyed by node or bus identifier. Source pressures in Pa,
/// load withdrawals in kg/s (positive = gas leaving the network), bus
/// quantities in per unit.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundarySet {
    pub gas_pressure: BTreeMap<String, PiecewisePolySignal>,
    pub gas_load: BTreeMap<String, PiecewisePolySignal>,
    pub eps_pv: BTreeMap<String, PvSignals>,
    pub eps_pq: BTreeMap<String, PqSignals>,
    pub eps_slack: Option<SlackSignals>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipeProfile {
    pub pi: Vec<f64>,
    pub m: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialState {
    pub pipes: Vec<PipeProfile>,
    pub node_pi: Vec<f64>,
    pub node_m: Vec<f64>,
    pub bus_e: Vec<f64>,
    pub bus_f: Vec<f64>,
    /// Injected power of gas-turbine slack and compressor buses, in layout
    /// order.
    pub pcp: Vec<f64>,
}

impl InitialState {
    pub fn to_vector(&self, layout: &Layout) -> Result<Vec<f64>> {
        if self.pipes.len() != layout.pipe_count()
            || self.node_pi.len() != layout.node_count()
            || self.node_m.len() != layout.node_count()
            || self.bus_e.len() != layout.bus_count()
            || self.bus_f.len() != layout.bus_count()
            || self.pcp.len() != layout.pcp_buses().len()
        {
            return Err(Error::Structural(
                "initial state does not match the system dimensions".into(),
            ));
        }
        let mut x = vec![0.0; layout.len()];
        for (j, p) in self.pipes.iter().enumerate() {
            let n = layout.n_seg(j) + 1;
            if p.pi.len() != n || p.m.len() != n {
                return Err(Error::Structural(format!(
                    "initial profile of pipeline {j} has {} points, grid has {n}",
                    p.pi.len()
                )));
            }
            for k in 0..n {
                x[layout.pi(j, k)] = p.pi[k];
                x[layout.m(j, k)] = p.m[k];
            }
        }
        for i in 0..layout.node_count() {
            x[layout.node_pi(i)] = self.node_pi[i];
            x[layout.node_m(i)] = self.node_m[i];
        }
        for b in 0..layout.bus_count() {
            x[layout.e(b)] = self.bus_e[b];
            x[layout.f(b)] = self.bus_f[b];
        }
        for (k, v) in self.pcp.iter().enumerate() {
            x[layout.pcp(k)] = *v;
        }
        Ok(x)
    }

    pub fn from_vector(layout: &Layout, x: &[f64]) -> Self {
        let pipes = (0..layout.pipe_count())
            .map(|j| {
                let n = layout.n_seg(j) + 1;
                PipeProfile {
                    pi: (0..n).map(|k| x[layout.pi(j, k)]).collect(),
                    m: (0..n).map(|k| x[layout.m(j, k)]).collect(),
                }
            })
            .collect();
        Self {
            pipes,
            node_pi: (0..layout.node_count()).map(|i| x[layout.node_pi(i)]).collect(),
            node_m: (0..layout.node_count()).map(|i| x[layout.node_m(i)]).collect(),
            bus_e: (0..layout.bus_count()).map(|b| x[layout.e(b)]).collect(),
            bus_f: (0..layout.bus_count()).map(|b| x[layout.f(b)]).collect(),
            pcp: (0..layout.pcp_buses().len()).map(|k| x[layout.pcp(k)]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitMode {
    Steady,
    Explicit(InitialState),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub horizon_s: f64,
    pub boundaries: BoundarySet,
    pub init: InitMode,
}

/// Boundary signals resolved against a system: a flat signal table plus
/// per-node and per-bus references into it.
#[derive(Debug, Clone)]
pub struct BoundSignals {
    pub signals: Vec<PiecewisePolySignal>,
    pub horizon_s: f64,
    pub node_pressure: Vec<Option<usize>>,
    pub node_load: Vec<Option<usize>>,
    pub bus_p: Vec<Option<usize>>,
    pub bus_q: Vec<Option<usize>>,
    pub bus_u: Vec<Option<usize>>,
    pub slack: Option<(usize, usize)>,
}

impl BoundSignals {
    /// Binds a boundary set, checking that the key sets exactly match the
    /// system's declarations.
    pub fn bind(system: &IegsSystem, boundaries: &BoundarySet, horizon_s: f64) -> Result<Self> {
        if !(horizon_s > 0.0) || !horizon_s.is_finite() {
            return Err(Error::Range(format!("horizon must be positive, got {horizon_s}")));
        }
        let mut problems = Vec::new();
        let mut out = Self {
            signals: Vec::new(),
            horizon_s,
            node_pressure: vec![None; system.node_count()],
            node_load: vec![None; system.node_count()],
            bus_p: vec![None; system.bus_count()],
            bus_q: vec![None; system.bus_count()],
            bus_u: vec![None; system.bus_count()],
            slack: None,
        };
        let push = |s: &PiecewisePolySignal, table: &mut Vec<PiecewisePolySignal>| {
            table.push(s.clone());
            table.len() - 1
        };

        let mut want_pressure = Vec::new();
        let mut want_load = Vec::new();
        for (i, node) in system.gas.nodes.iter().enumerate() {
            let coupled = matches!(
                system.node_coupling(i).map(|d| d.kind),
                Some(CouplingKind::GtSlack | CouplingKind::GtPv | CouplingKind::P2g)
            );
            match node.kind {
                NodeKind::Source if !coupled => want_pressure.push(i),
                NodeKind::Load if !coupled => want_load.push(i),
                _ => {}
            }
        }
        check_keys(
            system,
            "gas_pressure",
            &want_pressure,
            boundaries.gas_pressure.keys(),
            true,
            &mut problems,
        );
        check_keys(
            system,
            "gas_load",
            &want_load,
            boundaries.gas_load.keys(),
            true,
            &mut problems,
        );
        for &i in &want_pressure {
            if let Some(s) = boundaries.gas_pressure.get(&system.gas.nodes[i].id) {
                out.node_pressure[i] = Some(push(s, &mut out.signals));
            }
        }
        for &i in &want_load {
            if let Some(s) = boundaries.gas_load.get(&system.gas.nodes[i].id) {
                out.node_load[i] = Some(push(s, &mut out.signals));
            }
        }

        let mut want_pv = Vec::new();
        let mut want_pq = Vec::new();
        for (b, bus) in system.eps.buses.iter().enumerate() {
            let dev = system.bus_coupling(b).map(|d| d.kind);
            match bus.kind {
                BusKind::Pv => want_pv.push(b),
                BusKind::Pq if dev != Some(CouplingKind::ElectricCompressor) => want_pq.push(b),
                _ => {}
            }
        }
        check_keys(
            system,
            "eps_pv",
            &want_pv,
            boundaries.eps_pv.keys(),
            false,
            &mut problems,
        );
        check_keys(
            system,
            "eps_pq",
            &want_pq,
            boundaries.eps_pq.keys(),
            false,
            &mut problems,
        );
        for &b in &want_pv {
            if let Some(s) = boundaries.eps_pv.get(&system.eps.buses[b].id) {
                out.bus_p[b] = Some(push(&s.p, &mut out.signals));
                out.bus_u[b] = Some(push(&s.u, &mut out.signals));
            }
        }
        for &b in &want_pq {
            let id = &system.eps.buses[b].id;
            if let Some(s) = boundaries.eps_pq.get(id) {
                out.bus_p[b] = Some(push(&s.p, &mut out.signals));
                let derived_q = system.bus_coupling(b).map(|d| d.kind) == Some(CouplingKind::P2g);
                match (&s.q, derived_q) {
                    (Some(q), false) => out.bus_q[b] = Some(push(q, &mut out.signals)),
                    (None, false) => problems.push(format!("eps_pq.{id}: missing q signal")),
                    (Some(_), true) => problems.push(format!(
                        "eps_pq.{id}: q is set by the power-to-gas power factor and must be omitted"
                    )),
                    (None, true) => {}
                }
            }
        }
        match (system.slack_bus(), &boundaries.eps_slack) {
            (Some(_), Some(s)) => {
                let e = push(&s.e, &mut out.signals);
                let f = push(&s.f, &mut out.signals);
                out.slack = Some((e, f));
            }
            (Some(b), None) => problems.push(format!(
                "eps_slack: missing signals for slack bus '{}'",
                system.eps.buses[b].id
            )),
            (None, Some(_)) => problems.push("eps_slack: system has no slack bus".into()),
            (None, None) => {}
        }
        if problems.is_empty() {
            Ok(out)
        } else {
            Err(Error::Structural(format!(
                "scenario does not bind: {}",
                problems.join("; ")
            )))
        }
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(t >= 0.0) || t > self.horizon_s * (1.0 + 1e-12) {
            return Err(Error::Range(format!("t = {t} outside [0, {}]", self.horizon_s)));
        }
        Ok(())
    }

    /// Values of every signal at `t`.
    pub fn values(&self, t: f64) -> Result<Vec<f64>> {
        self.check_time(t)?;
        self.signals.iter().map(|s| eval_signal(s, t)).collect()
    }

    /// Taylor coefficients of every signal about `t0`, signal-major.
    pub fn taylor(&self, t0: f64, order: usize) -> Result<Vec<Vec<f64>>> {
        self.check_time(t0)?;
        self.signals
            .iter()
            .map(|s| signal_taylor(s, t0, order).map(|c| c.coeffs().to_vec()))
            .collect()
    }

    /// Interior breakpoints of all signals within `(0, T)`, sorted and unique.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self
            .signals
            .iter()
            .flat_map(|s| s.breakpoints().iter().copied())
            .filter(|&t| t > 0.0 && t < self.horizon_s)
            .collect();
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    /// Same references with every signal frozen at its value at `t`.
    pub fn frozen_at(&self, t: f64) -> Result<Self> {
        let values = self.values(t)?;
        let mut out = self.clone();
        out.signals = values.into_iter().map(PiecewisePolySignal::constant).collect();
        Ok(out)
    }
}

fn check_keys<'a>(
    system: &IegsSystem,
    section: &str,
    wanted: &[usize],
    given: impl Iterator<Item = &'a String>,
    gas: bool,
    problems: &mut Vec<String>,
) {
    let name = |i: usize| -> &str {
        if gas {
            &system.gas.nodes[i].id
        } else {
            &system.eps.buses[i].id
        }
    };
    let wanted_ids: Vec<&str> = wanted.iter().map(|&i| name(i)).collect();
    let given: Vec<&String> = given.collect();
    for id in &wanted_ids {
        if !given.iter().any(|g| g.as_str() == *id) {
            problems.push(format!("{section}: missing entry for '{id}'"));
        }
    }
    for g in given {
        if !wanted_ids.contains(&g.as_str()) {
            problems.push(format!("{section}: unexpected entry '{g}'"));
        }
    }
}

/// Steady pipeline resistance: `π(0)² − π(L)² = R·m|m|`.
pub fn steady_resistance(system: &IegsSystem, j: usize) -> f64 {
    let p = &system.gas.pipelines[j];
    let c = system.gas.sound_speed_mps;
    p.friction * c * c * p.length_m / (p.diameter_m * p.cross_section_m2 * p.cross_section_m2)
}

/// Regularization floor for `|m|` in steady-state Jacobians (kg/s).
const FLOW_FLOOR: f64 = 1e-6;

/// Time-invariant solution with the closed-form isothermal pipeline profile
/// sampled on `grids`. Network unknowns are found by damped Newton on a
/// one-segment-per-pipeline layout carrying the nodal, coupling and power
/// flow equations.
pub fn steady_state_init(
    system: &IegsSystem,
    signals: &BoundSignals,
    grids: &[PipelineGrid],
    cfg: &NewtonConfig,
) -> Result<InitialState> {
    let coarse_grids: Vec<PipelineGrid> = (0..system.pipe_count())
        .map(|j| PipelineGrid {
            pipe: j,
            n_seg: 1,
            dl_m: system.gas.pipelines[j].length_m,
        })
        .collect();
    let layout = Layout::new(system, coarse_grids);
    let rows = NetworkRows::build(system, &layout, signals);
    let sig = signals.values(0.0)?;
    let resistances: Vec<f64> = (0..system.pipe_count()).map(|j| steady_resistance(system, j)).collect();

    let p_ref = signals
        .node_pressure
        .iter()
        .flatten()
        .map(|&k| sig[k])
        .fold(0.0_f64, f64::max);
    let p_ref = if p_ref > 0.0 { p_ref } else { 1e5 };

    let mut x0 = vec![0.0; layout.len()];
    for j in 0..system.pipe_count() {
        x0[layout.pi(j, 0)] = p_ref;
        x0[layout.pi(j, 1)] = p_ref;
    }
    for i in 0..system.node_count() {
        x0[layout.node_pi(i)] = p_ref;
    }
    let (e_slk, f_slk) = signals.slack.map(|(e, f)| (sig[e], sig[f])).unwrap_or((1.0, 0.0));
    for b in 0..system.bus_count() {
        x0[layout.e(b)] = e_slk;
        x0[layout.f(b)] = f_slk;
    }

    let n_rows = rows.len();
    let n_pipe_rows = 2 * system.pipe_count();
    let mut scales = rows.scales().to_vec();
    for _ in 0..system.pipe_count() {
        scales.push(1.0);
        scales.push(p_ref * p_ref);
    }
    let residual = |x: &[f64]| -> Result<Vec<f64>> {
        let mut r = rows.residual(x, &sig);
        for (j, rj) in resistances.iter().enumerate() {
            let m0 = x[layout.m(j, 0)];
            r.push(m0 - x[layout.m(j, 1)]);
            r.push(x[layout.pi(j, 0)].powi(2) - x[layout.pi(j, 1)].powi(2) - rj * m0 * m0.abs());
        }
        Ok(r.iter().zip(&scales).map(|(v, s)| v / s).collect())
    };
    let jacobian = |x: &[f64]| -> Result<SparseMatrix> {
        let mut t = RowBuilder::new();
        rows.jacobian_triplets(x, &mut t);
        for (j, rj) in resistances.iter().enumerate() {
            let r0 = n_rows + 2 * j;
            t.push(r0, layout.m(j, 0), 1.0);
            t.push(r0, layout.m(j, 1), -1.0);
            let m0 = x[layout.m(j, 0)];
            t.push(r0 + 1, layout.pi(j, 0), 2.0 * x[layout.pi(j, 0)]);
            t.push(r0 + 1, layout.pi(j, 1), -2.0 * x[layout.pi(j, 1)]);
            t.push(r0 + 1, layout.m(j, 0), -2.0 * rj * m0.abs().max(FLOW_FLOOR));
        }
        let mut trip = t.into_triplets();
        for e in &mut trip {
            e.2 /= scales[e.0];
        }
        Ok(SparseMatrix::from_triplets(n_rows + n_pipe_rows, layout.len(), &trip))
    };
    let sol = newton(residual, jacobian, x0, cfg).map_err(|e| e.with_context("in steady-state initialization"))?;
    let x = sol.x;

    let mut pipes = Vec::with_capacity(grids.len());
    for (j, g) in grids.iter().enumerate() {
        let p0 = x[layout.pi(j, 0)];
        let m = x[layout.m(j, 0)];
        let rj = resistances[j];
        let mut pi = Vec::with_capacity(g.points());
        for n in 0..g.points() {
            let frac = n as f64 / g.n_seg as f64;
            let sq = p0 * p0 - rj * m * m.abs() * frac;
            if sq <= 0.0 {
                return Err(Error::Domain(format!(
                    "steady profile of pipeline '{}' reaches vacuum",
                    system.gas.pipelines[j].id
                )));
            }
            pi.push(sq.sqrt());
        }
        // the tail value comes from the network solve so nodal rows hold exactly
        *pi.last_mut().unwrap() = x[layout.pi(j, 1)];
        pipes.push(PipeProfile {
            pi,
            m: vec![m; g.points()],
        });
    }
    Ok(InitialState {
        pipes,
        node_pi: (0..system.node_count()).map(|i| x[layout.node_pi(i)]).collect(),
        node_m: (0..system.node_count()).map(|i| x[layout.node_m(i)]).collect(),
        bus_e: (0..system.bus_count()).map(|b| x[layout.e(b)]).collect(),
        bus_f: (0..system.bus_count()).map(|b| x[layout.f(b)]).collect(),
        pcp: (0..layout.pcp_buses().len()).map(|k| x[layout.pcp(k)]).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn eval_examples() {
        assert_eq!(
            eval_signal(&PiecewisePolySignal::constant(300e3), 1234.0).unwrap(),
            300e3
        );
        let s = PiecewisePolySignal::steps(&[(0.0, 1.2), (1800.0, 0.8)]).unwrap();
        assert_eq!(eval_signal(&s, 1800.0).unwrap(), 0.8);
        assert_eq!(eval_signal(&s, 1799.999).unwrap(), 1.2);
        let lin = PiecewisePolySignal::new(vec![0.0], vec![vec![1.0, 2.0]]).unwrap();
        assert_eq!(eval_signal(&lin, 0.5).unwrap(), 2.0);
        assert!(matches!(eval_signal(&lin, -1.0), Err(Error::Range(_))));
    }

    #[test]
    fn taylor_examples() {
        let c = signal_taylor(&PiecewisePolySignal::constant(300e3), 0.0, 5).unwrap();
        assert_eq!(c.coeffs(), &[300e3, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let lin = PiecewisePolySignal::new(vec![0.0, 10.0], vec![vec![0.0], vec![1.0, 2.0]]).unwrap();
        assert_eq!(signal_taylor(&lin, 10.0, 2).unwrap().coeffs(), &[1.0, 2.0, 0.0]);
        let q = PiecewisePolySignal::new(vec![0.0], vec![vec![0.0, 0.0, 3.0]]).unwrap();
        assert_eq!(signal_taylor(&q, 1.0, 3).unwrap().coeffs(), &[3.0, 6.0, 3.0, 0.0]);
    }

    #[test]
    fn taylor_reproduces_segment() {
        let s = PiecewisePolySignal::new(vec![0.0, 5.0], vec![vec![1.0], vec![2.0, -0.5, 0.25, 0.01]]).unwrap();
        let t0 = 7.5;
        let c = signal_taylor(&s, t0, 5).unwrap();
        for d in [0.0, 0.3, 1.0, 4.0] {
            assert_relative_eq!(c.eval(d), eval_signal(&s, t0 + d).unwrap(), max_relative = 1e-13);
        }
    }

    #[test]
    fn invalid_signals() {
        assert!(PiecewisePolySignal::new(vec![1.0], vec![vec![1.0]]).is_err());
        assert!(PiecewisePolySignal::new(vec![0.0, 0.0], vec![vec![1.0], vec![2.0]]).is_err());
        assert!(PiecewisePolySignal::new(vec![0.0], vec![vec![]]).is_err());
    }
}
