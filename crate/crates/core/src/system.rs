//! Static description of an integrated gas/electric system and the derived
//! incidence and admittance structures every solver consumes.
//!
//! Gas quantities are SI (Pa, kg/s, m); the electric side is per-unit on
//! `PowerGrid::power_base_mva`.

use std::collections::{HashMap, HashSet, VecDeque};
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Source,
    Load,
    Junction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GasNode {
    pub id: String,
    pub kind: NodeKind,
    /// Pressure ratio applied to every pipeline leaving this node; 1 when
    /// the node has no compressor.
    pub compressor_ratio: f64,
}

impl GasNode {
    pub fn new(id: impl Into<String>, kind: NodeKind) -> Self {
        Self {
            id: id.into(),
            kind,
            compressor_ratio: 1.0,
        }
    }

    pub fn with_compressor(mut self, ratio: f64) -> Self {
        self.compressor_ratio = ratio;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pipeline {
    pub id: String,
    /// Node at the pipeline head (`l = 0`).
    pub from_node: String,
    /// Node at the pipeline tail (`l = L`).
    pub to_node: String,
    pub length_m: f64,
    pub diameter_m: f64,
    /// Darcy friction factor.
    pub friction: f64,
    pub cross_section_m2: f64,
}

impl Pipeline {
    pub fn new(
        id: impl Into<String>,
        from_node: impl Into<String>,
        to_node: impl Into<String>,
        length_m: f64,
        diameter_m: f64,
        friction: f64,
    ) -> Self {
        Self {
            id: id.into(),
            from_node: from_node.into(),
            to_node: to_node.into(),
            length_m,
            diameter_m,
            friction,
            cross_section_m2: PI * diameter_m * diameter_m / 4.0,
        }
    }

    /// Coefficient `λc²/(2DS)` of `m|m|/π` in the momentum equation.
    pub fn friction_factor(&self, sound_speed: f64) -> f64 {
        self.friction * sound_speed * sound_speed / (2.0 * self.diameter_m * self.cross_section_m2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GasNetwork {
    pub nodes: Vec<GasNode>,
    pub pipelines: Vec<Pipeline>,
    pub sound_speed_mps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BusKind {
    #[serde(rename = "slack")]
    Slack,
    #[serde(rename = "pv", alias = "PV")]
    Pv,
    #[serde(rename = "pq", alias = "PQ")]
    Pq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsBus {
    pub id: String,
    pub kind: BusKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsBranch {
    pub from_bus: String,
    pub to_bus: String,
    pub series_resistance_pu: f64,
    pub series_reactance_pu: f64,
    /// Total line charging susceptance; half is placed at each end.
    pub shunt_susceptance_pu: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerGrid {
    pub buses: Vec<EpsBus>,
    pub branches: Vec<EpsBranch>,
    pub power_base_mva: f64,
}

impl Default for PowerGrid {
    fn default() -> Self {
        Self {
            buses: Vec::new(),
            branches: Vec::new(),
            power_base_mva: 100.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingKind {
    ElectricCompressor,
    GtSlack,
    GtPv,
    P2g,
}

/// A gas/electric conversion device.
///
/// `efficiency` enters the coupling equations literally:
/// - compressor: `p_b = −K·(mass flow leaving the node)`, `K` in W/(kg/s)
/// - gas turbine: `p_b = −K·m_i`, `K` in W/(kg/s)
/// - power-to-gas: `m_i = −K·p_b`, `K` in (kg/s)/W
///
/// with `p_b` in watts and `m_i` the node injection.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingDevice {
    pub kind: CouplingKind,
    pub gas_node: String,
    pub eps_bus: String,
    pub efficiency: f64,
    pub tan_phi: f64,
}

/// Node/pipeline connection matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceSet {
    /// `k_in[(i, j)] = 1` when pipeline `j` delivers into node `i` at its tail.
    pub k_in: DenseMatrix,
    /// `k_out[(i, j)] = 1` when pipeline `j` draws from node `i` at its head.
    pub k_out: DenseMatrix,
    pub k_cmp: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmittanceSet {
    pub g: DenseMatrix,
    pub b: DenseMatrix,
}

/// One validation finding. `code` is stable and machine-readable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub code: &'static str,
    pub location: String,
    pub message: String,
}

impl Diagnostic {
    pub fn new(code: &'static str, location: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            code,
            location: location.into(),
            message: message.into(),
        }
    }
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}] {}: {}", self.code, self.location, self.message)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IegsSystem {
    pub gas: GasNetwork,
    pub eps: PowerGrid,
    pub couplings: Vec<CouplingDevice>,
    pub incidence: IncidenceSet,
    pub admittance: AdmittanceSet,
    node_index: HashMap<String, usize>,
    bus_index: HashMap<String, usize>,
    /// Pipeline indices leaving / entering each node.
    node_out: Vec<Vec<usize>>,
    node_in: Vec<Vec<usize>>,
    pipe_ends: Vec<(usize, usize)>,
    branch_ends: Vec<(usize, usize)>,
    node_coupling: Vec<Option<usize>>,
    bus_coupling: Vec<Option<usize>>,
}

impl IegsSystem {
    /// Resolves cross references and builds the derived structures.
    ///
    /// Fails only when something cannot be built at all (unknown or
    /// duplicate identifiers, zero impedance). Everything else is reported
    /// by [`validate`].
    pub fn new(gas: GasNetwork, eps: PowerGrid, couplings: Vec<CouplingDevice>) -> Result<Self> {
        let mut diags = Vec::new();
        let node_index = index_ids(gas.nodes.iter().map(|n| n.id.as_str()), "gas.nodes", &mut diags);
        let bus_index = index_ids(eps.buses.iter().map(|b| b.id.as_str()), "eps.buses", &mut diags);
        let mut seen_pipes = HashSet::new();

        let mut pipe_ends = Vec::with_capacity(gas.pipelines.len());
        for (j, p) in gas.pipelines.iter().enumerate() {
            if !seen_pipes.insert(p.id.as_str()) {
                diags.push(Diagnostic::new(
                    "duplicate-id",
                    format!("gas.pipelines[{j}].id"),
                    format!("pipeline id '{}' declared twice", p.id),
                ));
            }
            let from = node_index.get(&p.from_node).copied();
            let to = node_index.get(&p.to_node).copied();
            for (name, r) in [("from", from.is_none()), ("to", to.is_none())] {
                if r {
                    let id = if name == "from" { &p.from_node } else { &p.to_node };
                    diags.push(Diagnostic::new(
                        "dangling-node",
                        format!("gas.pipelines[{j}].{name}"),
                        format!("pipeline '{}' references unknown node '{id}'", p.id),
                    ));
                }
            }
            pipe_ends.push((from.unwrap_or(0), to.unwrap_or(0)));
        }

        let mut branch_ends = Vec::with_capacity(eps.branches.len());
        for (k, br) in eps.branches.iter().enumerate() {
            let f = bus_index.get(&br.from_bus).copied();
            let t = bus_index.get(&br.to_bus).copied();
            if f.is_none() || t.is_none() {
                diags.push(Diagnostic::new(
                    "dangling-bus",
                    format!("eps.branches[{k}]"),
                    format!("branch {} -> {} references an unknown bus", br.from_bus, br.to_bus),
                ));
            }
            if br.series_resistance_pu.hypot(br.series_reactance_pu) == 0.0 {
                diags.push(Diagnostic::new(
                    "zero-impedance",
                    format!("eps.branches[{k}]"),
                    "series impedance is zero",
                ));
            }
            branch_ends.push((f.unwrap_or(0), t.unwrap_or(0)));
        }

        let mut node_coupling = vec![None; gas.nodes.len()];
        let mut bus_coupling = vec![None; eps.buses.len()];
        for (c, dev) in couplings.iter().enumerate() {
            match node_index.get(&dev.gas_node) {
                Some(&i) => {
                    if node_coupling[i].replace(c).is_some() {
                        diags.push(Diagnostic::new(
                            "duplicate-coupling",
                            format!("couplings[{c}].gas_node"),
                            format!("node '{}' already hosts a coupling device", dev.gas_node),
                        ));
                    }
                }
                None => diags.push(Diagnostic::new(
                    "dangling-node",
                    format!("couplings[{c}].gas_node"),
                    format!("unknown gas node '{}'", dev.gas_node),
                )),
            }
            match bus_index.get(&dev.eps_bus) {
                Some(&b) => {
                    if bus_coupling[b].replace(c).is_some() {
                        diags.push(Diagnostic::new(
                            "duplicate-coupling",
                            format!("couplings[{c}].eps_bus"),
                            format!("bus '{}' already hosts a coupling device", dev.eps_bus),
                        ));
                    }
                }
                None => diags.push(Diagnostic::new(
                    "dangling-bus",
                    format!("couplings[{c}].eps_bus"),
                    format!("unknown bus '{}'", dev.eps_bus),
                )),
            }
        }
        if !diags.is_empty() {
            return Err(Error::Validation(diags));
        }

        let incidence = incidence_from_ends(&gas, &pipe_ends);
        let admittance = admittance_from_ends(eps.buses.len(), &eps.branches, &branch_ends);
        let mut node_out = vec![Vec::new(); gas.nodes.len()];
        let mut node_in = vec![Vec::new(); gas.nodes.len()];
        for (j, &(f, t)) in pipe_ends.iter().enumerate() {
            node_out[f].push(j);
            node_in[t].push(j);
        }
        Ok(Self {
            gas,
            eps,
            couplings,
            incidence,
            admittance,
            node_index,
            bus_index,
            node_out,
            node_in,
            pipe_ends,
            branch_ends,
            node_coupling,
            bus_coupling,
        })
    }

    pub fn node_count(&self) -> usize {
        self.gas.nodes.len()
    }

    pub fn pipe_count(&self) -> usize {
        self.gas.pipelines.len()
    }

    pub fn bus_count(&self) -> usize {
        self.eps.buses.len()
    }

    pub fn node_idx(&self, id: &str) -> Option<usize> {
        self.node_index.get(id).copied()
    }

    pub fn bus_idx(&self, id: &str) -> Option<usize> {
        self.bus_index.get(id).copied()
    }

    /// `(head node, tail node)` of pipeline `j`.
    pub fn pipe_ends(&self, j: usize) -> (usize, usize) {
        self.pipe_ends[j]
    }

    pub fn branch_ends(&self, k: usize) -> (usize, usize) {
        self.branch_ends[k]
    }

    pub fn pipes_out(&self, i: usize) -> &[usize] {
        &self.node_out[i]
    }

    pub fn pipes_in(&self, i: usize) -> &[usize] {
        &self.node_in[i]
    }

    pub fn node_coupling(&self, i: usize) -> Option<&CouplingDevice> {
        self.node_coupling[i].map(|c| &self.couplings[c])
    }

    pub fn bus_coupling(&self, b: usize) -> Option<&CouplingDevice> {
        self.bus_coupling[b].map(|c| &self.couplings[c])
    }

    pub fn slack_bus(&self) -> Option<usize> {
        self.eps.buses.iter().position(|b| b.kind == BusKind::Slack)
    }

    /// Watts per per-unit of power.
    pub fn power_base_w(&self) -> f64 {
        self.eps.power_base_mva * 1e6
    }
}

fn index_ids<'a>(
    ids: impl Iterator<Item = &'a str>,
    section: &str,
    diags: &mut Vec<Diagnostic>,
) -> HashMap<String, usize> {
    let mut map = HashMap::new();
    for (i, id) in ids.enumerate() {
        if map.insert(id.to_string(), i).is_some() {
            diags.push(Diagnostic::new(
                "duplicate-id",
                format!("{section}[{i}].id"),
                format!("id '{id}' declared twice"),
            ));
        }
    }
    map
}

fn incidence_from_ends(gas: &GasNetwork, ends: &[(usize, usize)]) -> IncidenceSet {
    let (ni, nj) = (gas.nodes.len(), gas.pipelines.len());
    let mut k_in = DenseMatrix::zeros(ni, nj);
    let mut k_out = DenseMatrix::zeros(ni, nj);
    for (j, &(f, t)) in ends.iter().enumerate() {
        k_out[(f, j)] = 1.0;
        k_in[(t, j)] = 1.0;
    }
    IncidenceSet {
        k_in,
        k_out,
        k_cmp: gas.nodes.iter().map(|n| n.compressor_ratio).collect(),
    }
}

/// Builds `K^in`, `K^out` and `K^cmp` for a gas network.
pub fn build_incidence(gas: &GasNetwork) -> Result<IncidenceSet> {
    let index: HashMap<&str, usize> = gas.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
    let mut ends = Vec::with_capacity(gas.pipelines.len());
    for p in &gas.pipelines {
        let lookup = |id: &str| {
            index
                .get(id)
                .copied()
                .ok_or_else(|| Error::Structural(format!("pipeline '{}' references unknown node '{id}'", p.id)))
        };
        ends.push((lookup(&p.from_node)?, lookup(&p.to_node)?));
    }
    Ok(incidence_from_ends(gas, &ends))
}

fn admittance_from_ends(n: usize, branches: &[EpsBranch], ends: &[(usize, usize)]) -> AdmittanceSet {
    let mut g = DenseMatrix::zeros(n, n);
    let mut b = DenseMatrix::zeros(n, n);
    for (br, &(f, t)) in branches.iter().zip(ends) {
        let (r, x) = (br.series_resistance_pu, br.series_reactance_pu);
        let den = r * r + x * x;
        let (gy, by) = (r / den, -x / den);
        let half = br.shunt_susceptance_pu / 2.0;
        g[(f, f)] += gy;
        g[(t, t)] += gy;
        g[(f, t)] -= gy;
        g[(t, f)] -= gy;
        b[(f, f)] += by + half;
        b[(t, t)] += by + half;
        b[(f, t)] -= by;
        b[(t, f)] -= by;
    }
    AdmittanceSet { g, b }
}

/// Standard nodal admittance assembly, split into `G + jB`.
pub fn build_admittance(buses: &[EpsBus], branches: &[EpsBranch]) -> Result<AdmittanceSet> {
    let index: HashMap<&str, usize> = buses.iter().enumerate().map(|(i, b)| (b.id.as_str(), i)).collect();
    let mut ends = Vec::with_capacity(branches.len());
    for br in branches {
        if br.series_resistance_pu.hypot(br.series_reactance_pu) == 0.0 {
            return Err(Error::Structural(format!(
                "branch {} -> {} has zero series impedance",
                br.from_bus, br.to_bus
            )));
        }
        let lookup = |id: &str| {
            index
                .get(id)
                .copied()
                .ok_or_else(|| Error::Structural(format!("branch references unknown bus '{id}'")))
        };
        ends.push((lookup(&br.from_bus)?, lookup(&br.to_bus)?));
    }
    Ok(admittance_from_ends(buses.len(), branches, &ends))
}

/// Checks every type invariant and coupling placement rule.
/// Returns an empty list for a well-formed system.
pub fn validate(system: &IegsSystem) -> Vec<Diagnostic> {
    let mut d = Vec::new();
    let gas = &system.gas;
    if !(gas.sound_speed_mps > 0.0) {
        d.push(Diagnostic::new(
            "nonpositive-sound-speed",
            "gas.sound_speed_mps",
            format!("sound speed must be positive, got {}", gas.sound_speed_mps),
        ));
    }
    for (j, p) in gas.pipelines.iter().enumerate() {
        let loc = |f: &str| format!("gas.pipelines[{j}].{f}");
        if !(p.length_m > 0.0) {
            d.push(Diagnostic::new(
                "nonpositive-length",
                loc("length_m"),
                format!("pipeline '{}' length {}", p.id, p.length_m),
            ));
        }
        if !(p.diameter_m > 0.0) {
            d.push(Diagnostic::new(
                "nonpositive-diameter",
                loc("diameter_m"),
                format!("pipeline '{}' diameter {}", p.id, p.diameter_m),
            ));
        }
        if !(p.friction > 0.0) {
            d.push(Diagnostic::new(
                "nonpositive-friction",
                loc("friction"),
                format!("pipeline '{}' friction {}", p.id, p.friction),
            ));
        }
        let s = PI * p.diameter_m * p.diameter_m / 4.0;
        if (p.cross_section_m2 - s).abs() > 1e-12 * s.abs() {
            d.push(Diagnostic::new(
                "cross-section-mismatch",
                loc("cross_section_m2"),
                "cross section differs from pi*D^2/4",
            ));
        }
        if p.from_node == p.to_node {
            d.push(Diagnostic::new(
                "self-loop",
                loc("to"),
                format!("pipeline '{}' starts and ends at '{}'", p.id, p.from_node),
            ));
        }
    }
    for (i, n) in gas.nodes.iter().enumerate() {
        if !(n.compressor_ratio >= 1.0) {
            d.push(Diagnostic::new(
                "compressor-ratio",
                format!("gas.nodes[{i}].compressor_ratio"),
                format!("node '{}' ratio {} is below 1", n.id, n.compressor_ratio),
            ));
        }
    }
    if !gas.nodes.is_empty()
        && !connected(
            gas.nodes.len(),
            gas.pipelines.iter().enumerate().map(|(j, _)| system.pipe_ends(j)),
        )
    {
        d.push(Diagnostic::new(
            "disconnected",
            "gas",
            "the pipeline/node graph is not connected",
        ));
    }
    if gas.nodes.iter().any(|n| n.kind == NodeKind::Source) || gas.nodes.is_empty() {
        // fine
    } else {
        d.push(Diagnostic::new(
            "missing-source",
            "gas.nodes",
            "no pressure-specified source node",
        ));
    }

    let eps = &system.eps;
    if !eps.buses.is_empty() {
        let slacks = eps.buses.iter().filter(|b| b.kind == BusKind::Slack).count();
        if slacks == 0 {
            d.push(Diagnostic::new("missing-slack", "eps.buses", "no slack bus declared"));
        } else if slacks > 1 {
            d.push(Diagnostic::new(
                "multiple-slack",
                "eps.buses",
                format!("{slacks} slack buses declared"),
            ));
        }
        if !(eps.power_base_mva > 0.0) {
            d.push(Diagnostic::new(
                "nonpositive-power-base",
                "eps.power_base_mva",
                "power base must be positive",
            ));
        }
        if !connected(eps.buses.len(), (0..eps.branches.len()).map(|k| system.branch_ends(k))) {
            d.push(Diagnostic::new(
                "eps-disconnected",
                "eps",
                "the bus/branch graph is not connected",
            ));
        }
    }

    for (c, dev) in system.couplings.iter().enumerate() {
        let loc = |f: &str| format!("couplings[{c}].{f}");
        if !(dev.efficiency > 0.0) {
            d.push(Diagnostic::new(
                "nonpositive-efficiency",
                loc("efficiency"),
                format!("efficiency {}", dev.efficiency),
            ));
        }
        let (Some(i), Some(b)) = (system.node_idx(&dev.gas_node), system.bus_idx(&dev.eps_bus)) else {
            continue;
        };
        let bus_kind = eps.buses[b].kind;
        let want = match dev.kind {
            CouplingKind::GtSlack => BusKind::Slack,
            CouplingKind::GtPv => BusKind::Pv,
            CouplingKind::ElectricCompressor | CouplingKind::P2g => BusKind::Pq,
        };
        if bus_kind != want {
            d.push(Diagnostic::new(
                "coupling-bus-kind",
                loc("eps_bus"),
                format!(
                    "{:?} device needs a {:?} bus, '{}' is {:?}",
                    dev.kind, want, dev.eps_bus, bus_kind
                ),
            ));
        }
        let node = &gas.nodes[i];
        match dev.kind {
            CouplingKind::ElectricCompressor => {
                if !(node.compressor_ratio > 1.0) {
                    d.push(Diagnostic::new(
                        "compressor-without-ratio",
                        loc("gas_node"),
                        format!(
                            "node '{}' hosts an electric compressor but has ratio {}",
                            node.id, node.compressor_ratio
                        ),
                    ));
                }
            }
            CouplingKind::GtSlack | CouplingKind::GtPv | CouplingKind::P2g => {
                if node.kind != NodeKind::Load {
                    d.push(Diagnostic::new(
                        "coupling-node-kind",
                        loc("gas_node"),
                        format!(
                            "{:?} device must sit on a load node, '{}' is {:?}",
                            dev.kind, node.id, node.kind
                        ),
                    ));
                }
            }
        }
    }
    d
}

fn connected(n: usize, edges: impl Iterator<Item = (usize, usize)>) -> bool {
    if n == 0 {
        return true;
    }
    let mut adj = vec![Vec::new(); n];
    for (a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn two_node() -> GasNetwork {
        GasNetwork {
            nodes: vec![GasNode::new("A", NodeKind::Source), GasNode::new("B", NodeKind::Load)],
            pipelines: vec![Pipeline::new("1", "A", "B", 50e3, 0.5, 0.01)],
            sound_speed_mps: 340.0,
        }
    }

    fn triangle() -> GasNetwork {
        GasNetwork {
            nodes: vec![
                GasNode::new("A", NodeKind::Source),
                GasNode::new("B", NodeKind::Junction).with_compressor(1.2),
                GasNode::new("C", NodeKind::Load),
            ],
            pipelines: vec![
                Pipeline::new("1", "A", "B", 10e3, 0.5, 0.01),
                Pipeline::new("2", "B", "C", 10e3, 0.5, 0.01),
                Pipeline::new("3", "C", "A", 10e3, 0.5, 0.01),
            ],
            sound_speed_mps: 340.0,
        }
    }

    fn bus(id: &str, kind: BusKind) -> EpsBus {
        EpsBus { id: id.into(), kind }
    }

    fn branch(f: &str, t: &str, r: f64, x: f64, b: f64) -> EpsBranch {
        EpsBranch {
            from_bus: f.into(),
            to_bus: t.into(),
            series_resistance_pu: r,
            series_reactance_pu: x,
            shunt_susceptance_pu: b,
        }
    }

    #[test]
    fn incidence_single_edge() {
        let inc = build_incidence(&two_node()).unwrap();
        assert_eq!(inc.k_out[(0, 0)], 1.0);
        assert_eq!(inc.k_in[(1, 0)], 1.0);
        assert_eq!(inc.k_out[(1, 0)], 0.0);
        assert_eq!(inc.k_in[(0, 0)], 0.0);
        assert_eq!(inc.k_cmp, vec![1.0, 1.0]);
    }

    #[test]
    fn incidence_triangle() {
        let inc = build_incidence(&triangle()).unwrap();
        for i in 0..3 {
            assert_eq!(inc.k_in.row(i).iter().sum::<f64>(), 1.0);
            assert_eq!(inc.k_out.row(i).iter().sum::<f64>(), 1.0);
        }
        for j in 0..3 {
            let cin: f64 = (0..3).map(|i| inc.k_in[(i, j)]).sum();
            let cout: f64 = (0..3).map(|i| inc.k_out[(i, j)]).sum();
            assert_eq!((cin, cout), (1.0, 1.0));
            let signed: f64 = (0..3).map(|i| inc.k_out[(i, j)] - inc.k_in[(i, j)]).sum();
            assert_eq!(signed, 0.0);
        }
        assert_eq!(inc.k_cmp, vec![1.0, 1.2, 1.0]);
    }

    #[test]
    fn incidence_dangling_reference() {
        let mut g = two_node();
        g.pipelines[0].to_node = "Z".into();
        let err = build_incidence(&g).unwrap_err().to_string();
        assert!(err.contains("'1'") && err.contains("'Z'"), "{err}");
    }

    #[test]
    fn admittance_pure_reactance() {
        let a = build_admittance(
            &[bus("1", BusKind::Slack), bus("2", BusKind::Pq)],
            &[branch("1", "2", 0.0, 1.0, 0.0)],
        )
        .unwrap();
        assert_eq!(a.b, DenseMatrix::from_rows(&[vec![-1.0, 1.0], vec![1.0, -1.0]]));
        assert_eq!(a.g.max_abs(), 0.0);
    }

    #[test]
    fn admittance_pure_resistance() {
        let a = build_admittance(
            &[bus("1", BusKind::Slack), bus("2", BusKind::Pq)],
            &[branch("1", "2", 1.0, 0.0, 0.0)],
        )
        .unwrap();
        assert_eq!(a.g, DenseMatrix::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]));
        assert_eq!(a.b.max_abs(), 0.0);
    }

    #[test]
    fn admittance_with_shunt() {
        let a = build_admittance(
            &[bus("1", BusKind::Slack), bus("2", BusKind::Pq)],
            &[branch("1", "2", 0.1, 0.2, 0.02)],
        )
        .unwrap();
        assert_relative_eq!(a.g[(0, 0)], 2.0, max_relative = 1e-14);
        assert_relative_eq!(a.g[(0, 1)], -2.0, max_relative = 1e-14);
        assert_relative_eq!(a.b[(0, 0)], -4.0 + 0.01, max_relative = 1e-14);
        assert_relative_eq!(a.b[(1, 1)], -4.0 + 0.01, max_relative = 1e-14);
        assert_relative_eq!(a.b[(0, 1)], 4.0, max_relative = 1e-14);
    }

    #[test]
    fn admittance_zero_impedance_is_structural() {
        let e = build_admittance(
            &[bus("1", BusKind::Slack), bus("2", BusKind::Pq)],
            &[branch("1", "2", 0.0, 0.0, 0.0)],
        );
        assert!(matches!(e, Err(Error::Structural(_))));
    }

    fn two_bus() -> PowerGrid {
        PowerGrid {
            buses: vec![bus("1", BusKind::Slack), bus("2", BusKind::Pq)],
            branches: vec![branch("1", "2", 0.01, 0.1, 0.0)],
            power_base_mva: 100.0,
        }
    }

    #[test]
    fn validate_clean_system() {
        let s = IegsSystem::new(two_node(), two_bus(), vec![]).unwrap();
        assert!(validate(&s).is_empty());
        // idempotent and side-effect free
        assert!(validate(&s).is_empty());
    }

    #[test]
    fn validate_gt_slack_on_pq_bus() {
        let dev = CouplingDevice {
            kind: CouplingKind::GtSlack,
            gas_node: "B".into(),
            eps_bus: "2".into(),
            efficiency: 2e7,
            tan_phi: 0.0,
        };
        let s = IegsSystem::new(two_node(), two_bus(), vec![dev]).unwrap();
        let codes: Vec<_> = validate(&s).iter().map(|d| d.code).collect();
        assert_eq!(codes, vec!["coupling-bus-kind"]);
    }

    #[test]
    fn validate_two_slacks() {
        let mut grid = two_bus();
        grid.buses[1].kind = BusKind::Slack;
        let s = IegsSystem::new(two_node(), grid, vec![]).unwrap();
        let codes: Vec<_> = validate(&s).iter().map(|d| d.code).collect();
        assert_eq!(codes, vec!["multiple-slack"]);
    }

    #[test]
    fn validate_negative_diameter() {
        let mut g = two_node();
        g.pipelines[0] = Pipeline::new("1", "A", "B", 50e3, -0.5, 0.01);
        let s = IegsSystem::new(g, PowerGrid::default(), vec![]).unwrap();
        let d = validate(&s);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, "nonpositive-diameter");
        assert_eq!(d[0].location, "gas.pipelines[0].diameter_m");
    }

    #[test]
    fn parallel_pipelines_are_distinct_columns() {
        let mut g = two_node();
        g.pipelines.push(Pipeline::new("2", "A", "B", 40e3, 0.4, 0.01));
        let s = IegsSystem::new(g, PowerGrid::default(), vec![]).unwrap();
        assert!(validate(&s).is_empty());
        assert_eq!(s.pipes_out(0), &[0, 1]);
    }

    #[test]
    fn admittance_is_permutation_equivariant() {
        let buses = vec![bus("a", BusKind::Slack), bus("b", BusKind::Pq), bus("c", BusKind::Pv)];
        let branches = vec![
            branch("a", "b", 0.02, 0.1, 0.01),
            branch("b", "c", 0.05, 0.3, 0.0),
            branch("a", "c", 0.01, 0.2, 0.04),
        ];
        let a = build_admittance(&buses, &branches).unwrap();
        let perm = [2usize, 0, 1];
        let pb: Vec<_> = perm.iter().map(|&i| buses[i].clone()).collect();
        let p = build_admittance(&pb, &branches).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(p.g[(i, j)], a.g[(perm[i], perm[j])]);
                assert_eq!(p.b[(i, j)], a.b[(perm[i], perm[j])]);
            }
        }
    }
}
