use super::*;
use crate::fixtures;
use crate::scenario::{InitMode, PiecewisePolySignal, Scenario};
use crate::solver::oracle::monolithic_order;
use crate::system::IegsSystem;

fn rel_gap(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().chain(b).fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

#[test]
fn constant_boundaries_stay_steady() {
    let sys = fixtures::single_pipe_system();
    let sc = fixtures::single_pipe_constant_scenario(3600.0);
    let mut worst = 0.0f64;
    let traj = simulate_observed(&sys, &sc, &DtConfig::default(), &mut |w| {
        for k in 1..w.coef.len() {
            for (v, c) in w.coef[k].iter().enumerate() {
                worst = worst.max(c.abs() / w.coef[0][v].abs().max(1e-12));
            }
        }
        Ok(())
    })
    .unwrap();
    assert!(worst <= 1e-9, "higher-order coefficient ratio {worst}");
    let first = &traj.values[0];
    for row in &traj.values {
        for (a, b) in row.iter().zip(first) {
            assert!((a - b).abs() <= 1e-6 * b.abs().max(1e-6));
        }
    }
    assert_eq!(*traj.times.last().unwrap(), 3600.0);
}

#[test]
fn single_pipe_outlet_dips_after_load_rise() {
    let sys = fixtures::single_pipe_system();
    let sc = fixtures::single_pipe_scenario();
    let traj = simulate(&sys, &sc, &DtConfig::default()).unwrap();
    let p = traj.column("node.load.pi").unwrap();
    let at = |t: f64| p[traj.times.iter().position(|&s| s == t).unwrap()];
    assert!(at(5400.0) > at(7200.0) + 1e3, "{} vs {}", at(5400.0), at(7200.0));
    assert!(at(1800.0) < at(5400.0));
}

fn check_oracle(sys: &IegsSystem, sc: &Scenario, windows: usize) {
    let cfg = DtConfig {
        dx_m: 5000.0,
        ..Default::default()
    };
    let mut seen = 0;
    let mut worst = 0.0f64;
    let short = Scenario {
        horizon_s: sc.horizon_s,
        ..sc.clone()
    };
    let res = simulate_observed(sys, &short, &cfg, &mut |w| {
        if seen >= windows {
            return Err(crate::Error::Range("done".into()));
        }
        for k in 1..w.coef.len() {
            let mono = monolithic_order(sys, w.sd, &w.coef[..k], w.taylor, w.signs, k).unwrap();
            worst = worst.max(rel_gap(&mono, &w.coef[k]));
        }
        seen += 1;
        Ok(())
    });
    assert!(res.is_ok() || seen == windows);
    assert!(worst <= 1e-10, "block and monolithic coefficients differ by {worst}");
}

#[test]
fn block_solve_matches_monolithic_on_coupled_demo() {
    check_oracle(
        &fixtures::coupled_demo_system(),
        &fixtures::coupled_demo_scenario().unwrap(),
        5,
    );
}

#[test]
fn block_solve_matches_monolithic_on_loop() {
    check_oracle(&fixtures::loop_system(), &fixtures::loop_scenario().unwrap(), 5);
}

#[test]
fn pressure_ramp_sets_first_order_node_coefficient() {
    let sys = fixtures::single_pipe_system();
    let mut sc = fixtures::single_pipe_constant_scenario(60.0);
    sc.boundaries.gas_pressure.insert(
        "src".into(),
        PiecewisePolySignal::new(vec![0.0], vec![vec![3e5, 2.5]]).unwrap(),
    );
    let mut first = None;
    simulate_observed(&sys, &sc, &DtConfig::default(), &mut |w| {
        if first.is_none() {
            let i = w.sd.layout.node_pi(0);
            first = Some((w.coef[1][i], w.coef[2][i], w.coef[1][w.sd.layout.pi(0, 0)]));
        }
        Ok(())
    })
    .unwrap();
    let (c1, c2, pipe_head) = first.unwrap();
    assert!((c1 - 2.5).abs() < 1e-12);
    assert!(c2.abs() < 1e-12);
    assert!((pipe_head - 2.5).abs() < 1e-12);
}

#[test]
fn explicit_init_is_used_verbatim() {
    let sys = fixtures::single_pipe_system();
    let sc = fixtures::single_pipe_constant_scenario(60.0);
    let base = simulate(&sys, &sc, &DtConfig::default()).unwrap();
    let layout = crate::discretization::Layout::new(&sys, crate::discretization::make_grids(&sys, 1000.0));
    let state = crate::scenario::InitialState::from_vector(&layout, &base.values[0][..layout.len()]);
    let again = simulate(
        &sys,
        &Scenario {
            init: InitMode::Explicit(state),
            ..sc
        },
        &DtConfig::default(),
    )
    .unwrap();
    assert!(rel_gap(&base.values[0], &again.values[0]) < 1e-12);
}
