//! Conservation and propagation invariants along a Chaplygin trajectory.

use radial_euler::analysis::transforms::{angular_momentum_sup, mass_excess};
use radial_euler::dynamics::{max_signal_speed, RunOutcome, RunSettings, RunStatus};
use radial_euler::eos::EosSpec;
use radial_euler::experiments::{
    make_initial_data, required_r_max, simulate, InitialData, ScenarioSpec, SUPPORT_RADIUS,
};

const EPS: f64 = 0.02;

fn trajectory() -> (InitialData, RunOutcome, RunSettings) {
    let t_end = 10.0;
    let eos = EosSpec::chaplygin_default();
    let mut spec = ScenarioSpec::bump(eos, EPS, 512, 1.0, t_end);
    let probe = make_initial_data(&spec).unwrap();
    spec.r_max = 1.02 * required_r_max(&probe.state, &eos, t_end);
    spec.n = (64.0 * spec.r_max / SUPPORT_RADIUS).ceil() as usize + 1;
    let mut settings = RunSettings::new(eos, t_end);
    settings.cadence = 0.0;
    settings.snapshot_times = (1..=10).map(f64::from).collect();
    let (data, out) = simulate(&spec, &settings).unwrap();
    assert_eq!(out.status, RunStatus::Completed);
    (data, out, settings)
}

#[test]
fn mass_and_angular_momentum_are_conserved() {
    let (data, out, settings) = trajectory();
    let eos = settings.eos;
    let h = data.state.grid().h();
    let m0 = mass_excess(&data.state, &eos).unwrap();
    let rg0 = angular_momentum_sup(&data.state);
    let (mut mass, mut rg) = (0.0f64, 0.0f64);
    for s in &out.snapshots {
        mass = mass.max((mass_excess(s, &eos).unwrap() - m0).abs());
        rg = rg.max((angular_momentum_sup(s) - rg0).abs() / rg0);
    }
    let bound = 1e-6 * (m0.abs() + EPS * h);
    println!("mass drift {mass:.3e} (bound {bound:.3e}), sup |rg| drift {rg:.3e}");
    assert!(mass <= bound, "mass drift {mass:e}, m0 {m0:e}");
    assert!(rg <= 1e-3, "rg drift {rg:e}");
}

/// Support measured at the run's own support tolerance.
#[test]
fn support_stays_inside_the_cone() {
    let (data, out, settings) = trajectory();
    let h = data.state.grid().h();
    let speed = max_signal_speed(&data.state, &settings.eos);
    let tol = settings.support_tol * EPS;
    let excess: Vec<f64> = out
        .snapshots
        .iter()
        .map(|s| (s.extent_above(tol) as f64 * h - SUPPORT_RADIUS - speed * s.t) / h)
        .collect();
    println!("cells beyond the cone at t = 1..10: {excess:?}");
    let worst = excess.iter().fold(f64::MIN, |m, &x| m.max(x));
    assert!(worst <= 10.0, "support exceeds the cone by {worst} cells");
}
