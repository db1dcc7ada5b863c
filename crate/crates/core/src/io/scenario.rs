//! Scenario file: horizon, boundary signals keyed by node or bus id, and
//! the initialization mode.
//!
//! A signal is either a number (held constant) or
//! `{"breakpoints": [...], "segments": [[c0, c1, ...], ...]}` with each
//! segment a polynomial in time since its breakpoint.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{parse_error, read_text, write_text};
use crate::scenario::{
    BoundSignals, BoundarySet, InitMode, InitialState, PiecewisePolySignal, PipeProfile, PqSignals, PvSignals,
    Scenario, SlackSignals,
};
use crate::system::{CouplingKind, IegsSystem};

pub const SCENARIO_FORMAT: &str = "iegs-scenario";
pub const SCENARIO_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub format: String,
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub horizon_s: f64,
    pub boundaries: BoundaryEntries,
    #[serde(default)]
    pub init: InitEntry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SignalEntry {
    Constant(f64),
    Piecewise(PiecewiseEntry),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiecewiseEntry {
    pub breakpoints: Vec<f64>,
    pub segments: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryEntries {
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub gas_pressure: BTreeMap<String, SignalEntry>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub gas_load: BTreeMap<String, SignalEntry>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub eps_pv: BTreeMap<String, PvEntry>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub eps_pq: BTreeMap<String, PqEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_slack: Option<SlackEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PvEntry {
    pub p: SignalEntry,
    pub u: SignalEntry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PqEntry {
    pub p: SignalEntry,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<SignalEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlackEntry {
    pub e: SignalEntry,
    pub f: SignalEntry,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitEntry {
    #[default]
    Steady,
    Explicit(ExplicitInit),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitInit {
    pub pipes: BTreeMap<String, ProfileEntry>,
    pub nodes: BTreeMap<String, NodeInit>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub buses: BTreeMap<String, BusInit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileEntry {
    pub pi: Vec<f64>,
    pub m: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeInit {
    pub pi: f64,
    pub m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusInit {
    pub e: f64,
    pub f: f64,
    /// Injected power in per unit; required on gas-turbine slack and
    /// compressor buses.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pcp: Option<f64>,
}

impl SignalEntry {
    fn to_signal(&self, at: &str) -> Result<PiecewisePolySignal> {
        match self {
            SignalEntry::Constant(v) => Ok(PiecewisePolySignal::constant(*v)),
            SignalEntry::Piecewise(p) => PiecewisePolySignal::new(p.breakpoints.clone(), p.segments.clone())
                .map_err(|e| Error::Range(format!("{at}: {e}"))),
        }
    }

    fn from_signal(s: &PiecewisePolySignal) -> Self {
        match (s.breakpoints(), s.segments()) {
            ([b], [seg]) if *b == 0.0 && seg.len() == 1 => SignalEntry::Constant(seg[0]),
            (b, seg) => SignalEntry::Piecewise(PiecewiseEntry {
                breakpoints: b.to_vec(),
                segments: seg.to_vec(),
            }),
        }
    }
}

/// Buses whose injected power is a state variable, in layout order.
fn pcp_buses(system: &IegsSystem) -> Vec<usize> {
    (0..system.bus_count())
        .filter(|&b| {
            system
                .bus_coupling(b)
                .is_some_and(|d| matches!(d.kind, CouplingKind::GtSlack | CouplingKind::ElectricCompressor))
        })
        .collect()
}

fn missing(what: &str, id: &str) -> Error {
    Error::Structural(format!("explicit initial state has no entry for {what} '{id}'"))
}

impl ExplicitInit {
    fn to_state(&self, system: &IegsSystem) -> Result<InitialState> {
        for id in self.pipes.keys() {
            if !system.gas.pipelines.iter().any(|p| &p.id == id) {
                return Err(Error::Structural(format!(
                    "initial state names unknown pipeline '{id}'"
                )));
            }
        }
        for id in self.nodes.keys() {
            if system.node_idx(id).is_none() {
                return Err(Error::Structural(format!("initial state names unknown node '{id}'")));
            }
        }
        for id in self.buses.keys() {
            if system.bus_idx(id).is_none() {
                return Err(Error::Structural(format!("initial state names unknown bus '{id}'")));
            }
        }
        let pipes = system
            .gas
            .pipelines
            .iter()
            .map(|p| {
                let e = self.pipes.get(&p.id).ok_or_else(|| missing("pipeline", &p.id))?;
                Ok(PipeProfile {
                    pi: e.pi.clone(),
                    m: e.m.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let nodes = system
            .gas
            .nodes
            .iter()
            .map(|n| self.nodes.get(&n.id).ok_or_else(|| missing("node", &n.id)))
            .collect::<Result<Vec<_>>>()?;
        let buses = system
            .eps
            .buses
            .iter()
            .map(|b| self.buses.get(&b.id).ok_or_else(|| missing("bus", &b.id)))
            .collect::<Result<Vec<_>>>()?;
        let pcp = pcp_buses(system)
            .into_iter()
            .map(|b| {
                buses[b].pcp.ok_or_else(|| {
                    Error::Structural(format!(
                        "explicit initial state needs 'pcp' on bus '{}'",
                        system.eps.buses[b].id
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(InitialState {
            pipes,
            node_pi: nodes.iter().map(|n| n.pi).collect(),
            node_m: nodes.iter().map(|n| n.m).collect(),
            bus_e: buses.iter().map(|b| b.e).collect(),
            bus_f: buses.iter().map(|b| b.f).collect(),
            pcp,
        })
    }

    fn from_state(system: &IegsSystem, s: &InitialState) -> Self {
        let mut pcp = vec![None; system.bus_count()];
        for (k, b) in pcp_buses(system).into_iter().enumerate() {
            pcp[b] = s.pcp.get(k).copied();
        }
        Self {
            pipes: system
                .gas
                .pipelines
                .iter()
                .zip(&s.pipes)
                .map(|(p, prof)| {
                    (
                        p.id.clone(),
                        ProfileEntry {
                            pi: prof.pi.clone(),
                            m: prof.m.clone(),
                        },
                    )
                })
                .collect(),
            nodes: system
                .gas
                .nodes
                .iter()
                .enumerate()
                .map(|(i, n)| {
                    (
                        n.id.clone(),
                        NodeInit {
                            pi: s.node_pi[i],
                            m: s.node_m[i],
                        },
                    )
                })
                .collect(),
            buses: system
                .eps
                .buses
                .iter()
                .enumerate()
                .map(|(b, bus)| {
                    (
                        bus.id.clone(),
                        BusInit {
                            e: s.bus_e[b],
                            f: s.bus_f[b],
                            pcp: pcp[b],
                        },
                    )
                })
                .collect(),
        }
    }
}

impl ScenarioFile {
    pub fn from_scenario(system: &IegsSystem, sc: &Scenario) -> Self {
        let b = &sc.boundaries;
        let sig = SignalEntry::from_signal;
        Self {
            format: SCENARIO_FORMAT.into(),
            version: SCENARIO_VERSION,
            description: None,
            horizon_s: sc.horizon_s,
            boundaries: BoundaryEntries {
                gas_pressure: b.gas_pressure.iter().map(|(k, v)| (k.clone(), sig(v))).collect(),
                gas_load: b.gas_load.iter().map(|(k, v)| (k.clone(), sig(v))).collect(),
                eps_pv: b
                    .eps_pv
                    .iter()
                    .map(|(k, v)| {
                        (
                            k.clone(),
                            PvEntry {
                                p: sig(&v.p),
                                u: sig(&v.u),
                            },
                        )
                    })
                    .collect(),
                eps_pq: b
                    .eps_pq
                    .iter()
                    .map(|(k, v)| {
                        (
                            k.clone(),
                            PqEntry {
                                p: sig(&v.p),
                                q: v.q.as_ref().map(sig),
                            },
                        )
                    })
                    .collect(),
                eps_slack: b.eps_slack.as_ref().map(|s| SlackEntry {
                    e: sig(&s.e),
                    f: sig(&s.f),
                }),
            },
            init: match &sc.init {
                InitMode::Steady => InitEntry::Steady,
                InitMode::Explicit(s) => InitEntry::Explicit(ExplicitInit::from_state(system, s)),
            },
        }
    }

    /// Builds the scenario and checks that it binds against `system`.
    pub fn to_scenario(&self, system: &IegsSystem) -> Result<Scenario> {
        if self.format != SCENARIO_FORMAT || self.version != SCENARIO_VERSION {
            return Err(Error::Range(format!(
                "unsupported scenario format '{}' version {} (expected '{SCENARIO_FORMAT}' version {SCENARIO_VERSION})",
                self.format, self.version
            )));
        }
        let e = &self.boundaries;
        let mut b = BoundarySet::default();
        for (id, s) in &e.gas_pressure {
            b.gas_pressure
                .insert(id.clone(), s.to_signal(&format!("boundaries.gas_pressure.{id}"))?);
        }
        for (id, s) in &e.gas_load {
            b.gas_load
                .insert(id.clone(), s.to_signal(&format!("boundaries.gas_load.{id}"))?);
        }
        for (id, s) in &e.eps_pv {
            let at = format!("boundaries.eps_pv.{id}");
            b.eps_pv.insert(
                id.clone(),
                PvSignals {
                    p: s.p.to_signal(&format!("{at}.p"))?,
                    u: s.u.to_signal(&format!("{at}.u"))?,
                },
            );
        }
        for (id, s) in &e.eps_pq {
            let at = format!("boundaries.eps_pq.{id}");
            b.eps_pq.insert(
                id.clone(),
                PqSignals {
                    p: s.p.to_signal(&format!("{at}.p"))?,
                    q: s.q.as_ref().map(|q| q.to_signal(&format!("{at}.q"))).transpose()?,
                },
            );
        }
        if let Some(s) = &e.eps_slack {
            b.eps_slack = Some(SlackSignals {
                e: s.e.to_signal("boundaries.eps_slack.e")?,
                f: s.f.to_signal("boundaries.eps_slack.f")?,
            });
        }
        let init = match &self.init {
            InitEntry::Steady => InitMode::Steady,
            InitEntry::Explicit(x) => InitMode::Explicit(x.to_state(system)?),
        };
        BoundSignals::bind(system, &b, self.horizon_s)?;
        Ok(Scenario {
            horizon_s: self.horizon_s,
            boundaries: b,
            init,
        })
    }
}

pub fn parse_scenario(text: &str, origin: &str, system: &IegsSystem) -> Result<Scenario> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(|e| parse_error(origin, &e))?;
    file.to_scenario(system)
}

/// Reads a scenario file and binds it against `system`.
pub fn load_scenario(path: &Path, system: &IegsSystem) -> Result<Scenario> {
    parse_scenario(&read_text(path)?, &path.display().to_string(), system)
}

pub fn scenario_to_string(system: &IegsSystem, sc: &Scenario) -> String {
    let mut s = serde_json::to_string_pretty(&ScenarioFile::from_scenario(system, sc)).expect("scenario serializes");
    s.push('\n');
    s
}

pub fn write_scenario(path: &Path, system: &IegsSystem, sc: &Scenario) -> Result<()> {
    write_text(path, &scenario_to_string(system, sc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{make_grids, Layout};
    use crate::fixtures;

    #[test]
    fn fixtures_round_trip() {
        let cases = [
            (fixtures::single_pipe_system(), fixtures::single_pipe_scenario()),
            (
                fixtures::coupled_demo_system(),
                fixtures::coupled_demo_scenario().unwrap(),
            ),
            (fixtures::loop_system(), fixtures::loop_scenario().unwrap()),
        ];
        for (sys, sc) in cases {
            let back = parse_scenario(&scenario_to_string(&sys, &sc), "mem", &sys).unwrap();
            assert_eq!(back, sc);
        }
    }

    #[test]
    fn explicit_init_round_trips() {
        let sys = fixtures::coupled_demo_system();
        let mut sc = fixtures::coupled_demo_scenario().unwrap();
        let layout = Layout::new(&sys, make_grids(&sys, 5000.0));
        let x: Vec<f64> = (0..layout.len()).map(|i| 1.0 + i as f64 / 7.0).collect();
        sc.init = InitMode::Explicit(InitialState::from_vector(&layout, &x));
        let back = parse_scenario(&scenario_to_string(&sys, &sc), "mem", &sys).unwrap();
        assert_eq!(back, sc);
        let InitMode::Explicit(s) = back.init else {
            unreachable!()
        };
        assert_eq!(s.to_vector(&layout).unwrap(), x);
    }

    #[test]
    fn unbound_source_is_rejected() {
        let sys = fixtures::single_pipe_system();
        let text = scenario_to_string(&sys, &fixtures::single_pipe_scenario()).replace("\"src\"", "\"nowhere\"");
        assert!(parse_scenario(&text, "mem", &sys).is_err());
    }

    #[test]
    fn constant_signals_are_written_as_numbers() {
        let sys = fixtures::single_pipe_system();
        let text = scenario_to_string(&sys, &fixtures::single_pipe_scenario());
        assert!(text.contains("\"src\": 300000.0"), "{text}");
        assert!(text.contains("\"init\": \"steady\""));
    }
}
