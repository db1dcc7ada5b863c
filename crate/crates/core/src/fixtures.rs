//! Built-in test systems mirrored by the files under `data/`.

use crate::error::Result;
use crate::scenario::{BoundarySet, InitMode, PiecewisePolySignal, PqSignals, PvSignals, Scenario, SlackSignals};
use crate::system::{
    BusKind, CouplingDevice, CouplingKind, EpsBranch, EpsBus, GasNetwork, GasNode, IegsSystem, NodeKind, Pipeline,
    PowerGrid,
};

/// Default pipe parameters of the single-pipeline case.
pub const SINGLE_PIPE_LENGTH_M: f64 = 50e3;
pub const SINGLE_PIPE_DIAMETER_M: f64 = 0.5;
pub const SINGLE_PIPE_FRICTION: f64 = 0.01;
pub const SOUND_SPEED_MPS: f64 = 340.0;
pub const SINGLE_PIPE_SOURCE_PA: f64 = 300e3;
/// Three hours.
pub const SINGLE_PIPE_HORIZON_S: f64 = 10_800.0;
/// First load change.
pub const SINGLE_PIPE_FIRST_STEP_S: f64 = 1800.0;

/// Source node `src` feeding load node `load` through pipeline `pipe`.
pub fn single_pipe_system() -> IegsSystem {
    let gas = GasNetwork {
        nodes: vec![
            GasNode::new("src", NodeKind::Source),
            GasNode::new("load", NodeKind::Load),
        ],
        pipelines: vec![Pipeline::new(
            "pipe",
            "src",
            "load",
            SINGLE_PIPE_LENGTH_M,
            SINGLE_PIPE_DIAMETER_M,
            SINGLE_PIPE_FRICTION,
        )],
        sound_speed_mps: SOUND_SPEED_MPS,
    };
    IegsSystem::new(gas, PowerGrid::default(), vec![]).expect("fixture is well formed")
}

/// Load withdrawal of the single-pipeline case: 1.2 kg/s, 0.8 kg/s from
/// 0.5 h, 2 kg/s from 1.5 h, then a linear decline to 1.2 kg/s at 3 h.
pub fn single_pipe_load() -> PiecewisePolySignal {
    PiecewisePolySignal::new(
        vec![0.0, 1800.0, 5400.0, 7200.0],
        vec![vec![1.2], vec![0.8], vec![2.0], vec![2.0, -0.8 / 3600.0]],
    )
    .expect("fixture is well formed")
}

pub fn single_pipe_scenario() -> Scenario {
    let mut b = BoundarySet::default();
    b.gas_pressure
        .insert("src".into(), PiecewisePolySignal::constant(SINGLE_PIPE_SOURCE_PA));
    b.gas_load.insert("load".into(), single_pipe_load());
    Scenario {
        horizon_s: SINGLE_PIPE_HORIZON_S,
        boundaries: b,
        init: InitMode::Steady,
    }
}

/// Single-pipeline case with every boundary held at its initial value.
pub fn single_pipe_constant_scenario(horizon_s: f64) -> Scenario {
    let mut b = BoundarySet::default();
    b.gas_pressure
        .insert("src".into(), PiecewisePolySignal::constant(SINGLE_PIPE_SOURCE_PA));
    b.gas_load.insert("load".into(), PiecewisePolySignal::constant(1.2));
    Scenario {
        horizon_s,
        boundaries: b,
        init: InitMode::Steady,
    }
}

fn branch(from: &str, to: &str) -> EpsBranch {
    EpsBranch {
        from_bus: from.into(),
        to_bus: to.into(),
        series_resistance_pu: 0.01,
        series_reactance_pu: 0.1,
        shunt_susceptance_pu: 0.02,
    }
}

/// Six-node looped gas network and five-bus grid joined by a slack gas
/// turbine, a PV gas turbine, a power-to-gas unit and an electric
/// compressor.
///
/// Gas: `n1` source, `n2` compressor junction, loop `n2 → n3 → n5` and
/// `n2 → n4 → n5`, then `n5 → n6`. Grid: `b1` slack, `b2` PV, `b3` plain
/// load, `b4` compressor, `b5` power-to-gas.
pub fn coupled_demo_system() -> IegsSystem {
    let gas = GasNetwork {
        nodes: vec![
            GasNode::new("n1", NodeKind::Source),
            GasNode::new("n2", NodeKind::Junction).with_compressor(1.1),
            GasNode::new("n3", NodeKind::Load),
            GasNode::new("n4", NodeKind::Load),
            GasNode::new("n5", NodeKind::Load),
            GasNode::new("n6", NodeKind::Load),
        ],
        pipelines: vec![
            Pipeline::new("p1", "n1", "n2", 20e3, 0.6, 0.01),
            Pipeline::new("p2", "n2", "n3", 15e3, 0.5, 0.01),
            Pipeline::new("p3", "n2", "n4", 15e3, 0.5, 0.01),
            Pipeline::new("p4", "n3", "n5", 10e3, 0.5, 0.01),
            Pipeline::new("p5", "n4", "n5", 10e3, 0.5, 0.01),
            Pipeline::new("p6", "n5", "n6", 10e3, 0.5, 0.01),
        ],
        sound_speed_mps: SOUND_SPEED_MPS,
    };
    let eps = PowerGrid {
        buses: vec![
            EpsBus {
                id: "b1".into(),
                kind: BusKind::Slack,
            },
            EpsBus {
                id: "b2".into(),
                kind: BusKind::Pv,
            },
            EpsBus {
                id: "b3".into(),
                kind: BusKind::Pq,
            },
            EpsBus {
                id: "b4".into(),
                kind: BusKind::Pq,
            },
            EpsBus {
                id: "b5".into(),
                kind: BusKind::Pq,
            },
        ],
        branches: vec![
            branch("b1", "b2"),
            branch("b1", "b3"),
            branch("b2", "b3"),
            branch("b3", "b4"),
            branch("b3", "b5"),
            branch("b4", "b5"),
        ],
        power_base_mva: 100.0,
    };
    let dev = |kind, node: &str, bus: &str, efficiency, tan_phi| CouplingDevice {
        kind,
        gas_node: node.into(),
        eps_bus: bus.into(),
        efficiency,
        tan_phi,
    };
    let couplings = vec![
        dev(CouplingKind::GtSlack, "n6", "b1", 2.0e7, 0.0),
        dev(CouplingKind::GtPv, "n3", "b2", 2.0e7, 0.0),
        dev(CouplingKind::P2g, "n4", "b5", 1.2e-8, 0.2),
        dev(CouplingKind::ElectricCompressor, "n2", "b4", 1.0e5, 0.3),
    ];
    IegsSystem::new(gas, eps, couplings).expect("fixture is well formed")
}

/// One hour on the coupled demo with a gas load step at 0.25 h, a PV
/// dispatch ramp from 0.5 h and a step in the plain bus load at 0.75 h.
pub fn coupled_demo_scenario() -> Result<Scenario> {
    let mut b = BoundarySet::default();
    b.gas_pressure.insert("n1".into(), PiecewisePolySignal::constant(600e3));
    b.gas_load
        .insert("n5".into(), PiecewisePolySignal::steps(&[(0.0, 2.0), (900.0, 2.5)])?);
    b.eps_pv.insert(
        "b2".into(),
        PvSignals {
            p: PiecewisePolySignal::new(
                vec![0.0, 1800.0, 2400.0],
                vec![vec![0.5], vec![0.5, 0.2 / 600.0], vec![0.7]],
            )?,
            u: PiecewisePolySignal::constant(1.02),
        },
    );
    b.eps_pq.insert(
        "b3".into(),
        PqSignals {
            p: PiecewisePolySignal::steps(&[(0.0, -0.8), (2700.0, -0.9)])?,
            q: Some(PiecewisePolySignal::steps(&[(0.0, -0.2), (2700.0, -0.25)])?),
        },
    );
    b.eps_pq.insert(
        "b5".into(),
        PqSignals {
            p: PiecewisePolySignal::constant(-0.1),
            q: None,
        },
    );
    b.eps_slack = Some(SlackSignals {
        e: PiecewisePolySignal::constant(1.0),
        f: PiecewisePolySignal::constant(0.0),
    });
    Ok(Scenario {
        horizon_s: 3600.0,
        boundaries: b,
        init: InitMode::Steady,
    })
}

/// Triangle loop: source `a`, junction `b`, load `c`, with two pipelines
/// converging on `c`.
pub fn loop_system() -> IegsSystem {
    let gas = GasNetwork {
        nodes: vec![
            GasNode::new("a", NodeKind::Source),
            GasNode::new("b", NodeKind::Junction),
            GasNode::new("c", NodeKind::Load),
        ],
        pipelines: vec![
            Pipeline::new("ab", "a", "b", 10e3, 0.5, 0.01),
            Pipeline::new("bc", "b", "c", 10e3, 0.5, 0.01),
            Pipeline::new("ac", "a", "c", 15e3, 0.5, 0.01),
        ],
        sound_speed_mps: SOUND_SPEED_MPS,
    };
    IegsSystem::new(gas, PowerGrid::default(), vec![]).expect("fixture is well formed")
}

pub fn loop_scenario() -> Result<Scenario> {
    let mut b = BoundarySet::default();
    b.gas_pressure.insert("a".into(), PiecewisePolySignal::constant(500e3));
    b.gas_load
        .insert("c".into(), PiecewisePolySignal::steps(&[(0.0, 3.0), (600.0, 4.0)])?);
    Ok(Scenario {
        horizon_s: 1800.0,
        boundaries: b,
        init: InitMode::Steady,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::BoundSignals;
    use crate::system::validate;

    #[test]
    fn fixtures_validate_and_bind() {
        for (sys, sc) in [
            (single_pipe_system(), single_pipe_scenario()),
            (coupled_demo_system(), coupled_demo_scenario().unwrap()),
            (loop_system(), loop_scenario().unwrap()),
        ] {
            assert!(validate(&sys).is_empty(), "{:?}", validate(&sys));
            BoundSignals::bind(&sys, &sc.boundaries, sc.horizon_s).unwrap();
        }
    }
}
