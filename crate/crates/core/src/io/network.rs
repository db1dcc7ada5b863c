//! Network file: a versioned JSON document with `gas`, `eps` and
//! `couplings` sections. Unknown fields are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{parse_error, read_text, write_text};
use crate::system::{
    validate, BusKind, CouplingDevice, CouplingKind, EpsBranch, EpsBus, GasNetwork, GasNode, IegsSystem, NodeKind,
    Pipeline, PowerGrid,
};

pub const NETWORK_FORMAT: &str = "iegs-network";
pub const NETWORK_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    pub format: String,
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub gas: GasSection,
    #[serde(default)]
    pub eps: EpsSection,
    #[serde(default)]
    pub couplings: Vec<CouplingEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GasSection {
    pub sound_speed_mps: f64,
    pub nodes: Vec<NodeEntry>,
    pub pipelines: Vec<PipelineEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeEntry {
    pub id: String,
    pub kind: NodeKind,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub compressor_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineEntry {
    pub id: String,
    pub from: String,
    pub to: String,
    pub length_m: f64,
    pub diameter_m: f64,
    /// Darcy friction factor.
    pub friction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsSection {
    pub power_base_mva: f64,
    pub buses: Vec<BusEntry>,
    pub branches: Vec<BranchEntry>,
}

impl Default for EpsSection {
    fn default() -> Self {
        Self {
            power_base_mva: 100.0,
            buses: Vec::new(),
            branches: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusEntry {
    pub id: String,
    pub kind: BusKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchEntry {
    pub from: String,
    pub to: String,
    pub r_pu: f64,
    pub x_pu: f64,
    /// Total line charging susceptance.
    #[serde(default)]
    pub b_pu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingEntry {
    pub kind: CouplingKind,
    pub gas_node: String,
    pub eps_bus: String,
    pub efficiency: f64,
    #[serde(default)]
    pub tan_phi: f64,
}

fn one() -> f64 {
    1.0
}

fn is_one(v: &f64) -> bool {
    *v == 1.0
}

impl NetworkFile {
    pub fn from_system(system: &IegsSystem) -> Self {
        Self {
            format: NETWORK_FORMAT.into(),
            version: NETWORK_VERSION,
            description: None,
            gas: GasSection {
                sound_speed_mps: system.gas.sound_speed_mps,
                nodes: system
                    .gas
                    .nodes
                    .iter()
                    .map(|n| NodeEntry {
                        id: n.id.clone(),
                        kind: n.kind,
                        compressor_ratio: n.compressor_ratio,
                    })
                    .collect(),
                pipelines: system
                    .gas
                    .pipelines
                    .iter()
                    .map(|p| PipelineEntry {
                        id: p.id.clone(),
                        from: p.from_node.clone(),
                        to: p.to_node.clone(),
                        length_m: p.length_m,
                        diameter_m: p.diameter_m,
                        friction: p.friction,
                    })
                    .collect(),
            },
            eps: EpsSection {
                power_base_mva: system.eps.power_base_mva,
                buses: system
                    .eps
                    .buses
                    .iter()
                    .map(|b| BusEntry {
                        id: b.id.clone(),
                        kind: b.kind,
                    })
                    .collect(),
                branches: system
                    .eps
                    .branches
                    .iter()
                    .map(|b| BranchEntry {
                        from: b.from_bus.clone(),
                        to: b.to_bus.clone(),
                        r_pu: b.series_resistance_pu,
                        x_pu: b.series_reactance_pu,
                        b_pu: b.shunt_susceptance_pu,
                    })
                    .collect(),
            },
            couplings: system
                .couplings
                .iter()
                .map(|c| CouplingEntry {
                    kind: c.kind,
                    gas_node: c.gas_node.clone(),
                    eps_bus: c.eps_bus.clone(),
                    efficiency: c.efficiency,
                    tan_phi: c.tan_phi,
                })
                .collect(),
        }
    }

    /// Builds the system without running [`validate`].
    pub fn to_system(&self) -> Result<IegsSystem> {
        if self.format != NETWORK_FORMAT || self.version != NETWORK_VERSION {
            return Err(Error::Range(format!(
                "unsupported network format '{}' version {} (expected '{NETWORK_FORMAT}' version {NETWORK_VERSION})",
                self.format, self.version
            )));
        }
        let gas = GasNetwork {
            nodes: self
                .gas
                .nodes
                .iter()
                .map(|n| GasNode::new(n.id.clone(), n.kind).with_compressor(n.compressor_ratio))
                .collect(),
            pipelines: self
                .gas
                .pipelines
                .iter()
                .map(|p| Pipeline::new(&p.id, &p.from, &p.to, p.length_m, p.diameter_m, p.friction))
                .collect(),
            sound_speed_mps: self.gas.sound_speed_mps,
        };
        let eps = PowerGrid {
            buses: self
                .eps
                .buses
                .iter()
                .map(|b| EpsBus {
                    id: b.id.clone(),
                    kind: b.kind,
                })
                .collect(),
            branches: self
                .eps
                .branches
                .iter()
                .map(|b| EpsBranch {
                    from_bus: b.from.clone(),
                    to_bus: b.to.clone(),
                    series_resistance_pu: b.r_pu,
                    series_reactance_pu: b.x_pu,
                    shunt_susceptance_pu: b.b_pu,
                })
                .collect(),
            power_base_mva: self.eps.power_base_mva,
        };
        let couplings = self
            .couplings
            .iter()
            .map(|c| CouplingDevice {
                kind: c.kind,
                gas_node: c.gas_node.clone(),
                eps_bus: c.eps_bus.clone(),
                efficiency: c.efficiency,
                tan_phi: c.tan_phi,
            })
            .collect();
        IegsSystem::new(gas, eps, couplings)
    }
}

pub fn parse_network(text: &str, origin: &str) -> Result<IegsSystem> {
    let file: NetworkFile = serde_json::from_str(text).map_err(|e| parse_error(origin, &e))?;
    let system = file.to_system()?;
    let diags = validate(&system);
    if diags.is_empty() {
        Ok(system)
    } else {
        Err(Error::Validation(diags))
    }
}

/// Reads, builds and validates a network file.
pub fn load_network(path: &Path) -> Result<IegsSystem> {
    parse_network(&read_text(path)?, &path.display().to_string())
}

pub fn network_to_string(system: &IegsSystem) -> String {
    let mut s = serde_json::to_string_pretty(&NetworkFile::from_system(system)).expect("network serializes");
    s.push('\n');
    s
}

pub fn write_network(path: &Path, system: &IegsSystem) -> Result<()> {
    write_text(path, &network_to_string(system))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn round_trip_is_structurally_equal() {
        for sys in [
            fixtures::single_pipe_system(),
            fixtures::coupled_demo_system(),
            fixtures::loop_system(),
        ] {
            let back = parse_network(&network_to_string(&sys), "mem").unwrap();
            assert_eq!(back, sys);
        }
    }

    #[test]
    fn unknown_field_is_rejected_with_location() {
        let text = network_to_string(&fixtures::single_pipe_system())
            .replace("\"friction\"", "\"roughness\": 1, \"friction\"");
        match parse_network(&text, "mem") {
            Err(Error::Parse { message, .. }) => assert!(message.contains("roughness") && message.contains("line")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn negative_diameter_reports_the_field() {
        let text =
            network_to_string(&fixtures::single_pipe_system()).replace("\"diameter_m\": 0.5", "\"diameter_m\": -0.5");
        match parse_network(&text, "mem") {
            Err(Error::Validation(d)) => assert!(d.iter().any(|d| d.location == "gas.pipelines[0].diameter_m")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wrong_version_is_rejected() {
        let text = network_to_string(&fixtures::loop_system()).replace("\"version\": 1", "\"version\": 7");
        assert!(matches!(parse_network(&text, "mem"), Err(Error::Range(_))));
    }
}
