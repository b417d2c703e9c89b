//! Acceptance suite: every criterion at its stated tolerance, one PASS/FAIL
//! line each. Numeric arguments select a subset, e.g. `-- 6 7 8`.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use radial_euler::analysis::audit::{ghost_energy_audit, nonlinear_terms, nonlinear_terms_null_form};
use radial_euler::analysis::{
    build_derivative_table, compute_g, cutoffs, data_size_epsilon, energy_e, energy_x, energy_y, vorticity_w,
};
use radial_euler::dynamics::{run, FieldState, RunSettings, RunStatus};
use radial_euler::eos::EosSpec;
use radial_euler::experiments::{
    convergence_study, decay_study, lifespan_sweep, make_initial_data, required_r_max, simulate, trajectory_drift,
    ScenarioSpec, SweepOptions, SUPPORT_RADIUS,
};
use radial_euler::grid::{ddr, make_grid, Parity, Stencil};

type Verdict = Result<String, String>;

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn chaplygin() -> EosSpec {
    EosSpec::default()
}

/// Lifespan sweep of polytropic bump data.
fn lifespan_scaling() -> Verdict {
    let epsilons = [0.08, 0.056, 0.04, 0.028, 0.02];
    let base = ScenarioSpec::bump(EosSpec::polytropic(2.0), epsilons[0], 8192, 16.0, 1.0);
    let template = RunSettings::new(base.eos, 1.0);
    let opts = SweepOptions {
        budget: Some(Duration::from_secs(30 * 60)),
        ..SweepOptions::default()
    };
    let report = lifespan_sweep(&base, &template, &epsilons, &opts).map_err(|e| e.to_string())?;
    let slope = report.summary.slope;
    let worst_refinement = report
        .rows
        .iter()
        .map(|r| r.refinement_change().unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max);
    let decreasing = report.rows.windows(2).all(|w| w[1].lifespan < w[0].lifespan);
    check(
        (-2.2..=-1.8).contains(&slope) && worst_refinement <= 0.02 && decreasing,
        format!(
            "slope {slope:.4}, tau0^2 {:.4}, worst refinement change {worst_refinement:.4}, decreasing {decreasing}",
            report.summary.tau0_sq
        ),
    )
}

/// Shared long Chaplygin run for the energy and decay criteria.
struct DecayEvidence {
    completed: bool,
    reached: f64,
    e2_ratio: f64,
    near_cone: Option<f64>,
    interior: Option<f64>,
    wall: f64,
}

fn decay_evidence() -> Result<DecayEvidence, String> {
    let t_end = 200.0;
    // 64 cells across the support over a domain that holds the front at t = 200
    let r_max = 225.0;
    let n = (64.0 * r_max / SUPPORT_RADIUS) as usize;
    let spec = ScenarioSpec::bump(chaplygin(), 0.02, n, r_max, t_end);
    let mut settings = RunSettings::new(spec.eos, t_end);
    settings.cadence = 1.0;
    let start = Instant::now();
    let report = decay_study(&spec, &settings, None).map_err(|e| e.to_string())?;
    let e2 = |t| report.value_at("E2", t).unwrap_or(f64::NAN);
    let exponent = |name| report.fit(name).and_then(|f| f.fit).map(|f| f.exponent);
    Ok(DecayEvidence {
        completed: report.status == RunStatus::Completed,
        reached: report.reached,
        e2_ratio: e2(200.0) / e2(1.0),
        near_cone: exponent("near_cone"),
        interior: exponent("interior_dt_vtilde"),
        wall: start.elapsed().as_secs_f64(),
    })
}

fn global_evolution(ev: &DecayEvidence) -> Verdict {
    check(
        ev.completed && ev.e2_ratio >= 0.5 && ev.e2_ratio <= 2.0,
        format!(
            "reached t = {}, E2(200)/E2(1) = {:.4}, wall {:.0} s",
            ev.reached, ev.e2_ratio, ev.wall
        ),
    )
}

fn near_cone_decay(ev: &DecayEvidence) -> Verdict {
    match ev.near_cone {
        Some(p) => check((-1.8..=-1.2).contains(&p), format!("exponent {p:.4} over [20, 180]")),
        None => Err("no fit".into()),
    }
}

fn interior_decay(ev: &DecayEvidence) -> Verdict {
    match ev.interior {
        Some(p) => check(p <= -1.6, format!("exponent {p:.4} over [20, 180]")),
        None => Err("no fit".into()),
    }
}

/// Transport of `w` and `r g` up to `t = 10`.
fn transport() -> Verdict {
    let t_end = 10.0;
    let n = 8192;
    let mut spec = ScenarioSpec::bump(chaplygin(), 0.02, n, 16.0, t_end);
    let probe = make_initial_data(&spec).map_err(|e| e.to_string())?;
    spec.r_max = 1.02 * required_r_max(&probe.state, &spec.eos, t_end);
    let mut settings = RunSettings::new(spec.eos, t_end);
    settings.cadence = 0.0;
    settings.snapshot_times = (1..=10).map(f64::from).collect();
    let (data, outcome) = simulate(&spec, &settings).map_err(|e| e.to_string())?;
    if outcome.status != RunStatus::Completed {
        return Err(format!("run ended {:?} at t = {}", outcome.status, outcome.t_end));
    }
    let drift = trajectory_drift(&data.state, &outcome, &spec.eos).map_err(|e| e.to_string())?;
    let (rg, w) = (drift.max_rg(), drift.max_w());
    check(
        rg <= 1e-3 && w <= 1e-3,
        format!("max drift |rg| {rg:.3e}, |w| {w:.3e} (n = {n}, r_max = {:.3})", spec.r_max),
    )
}

/// `G` against adaptive quadrature for `v = 0` and `g = r b(r)`.
fn g_transform() -> Verdict {
    let grid = make_grid(2.0, 8192).map_err(|e| e.to_string())?;
    let mut state = FieldState::rest(grid);
    state.g = grid.sample(Parity::Odd, |r| r * common::unit_bump(r));
    let g = compute_g(&state, &chaplygin()).map_err(|e| e.to_string())?;
    let integrand = |s: f64| s * common::unit_bump(s).powi(2);
    let mut err = 0.0f64;
    let mut scale = 0.0f64;
    let mut outside_zero = true;
    for j in 0..grid.n() {
        let r = grid.r(j);
        if r >= 1.0 {
            outside_zero &= g.samples[j] == 0.0;
            continue;
        }
        let exact = common::simpson(&integrand, r, 1.0, 1e-18);
        err = err.max((g.samples[j] - exact).abs());
        scale = scale.max(exact.abs());
    }
    let dg = ddr(&g).map_err(|e| e.to_string())?;
    let mut residual = 0.0f64;
    let mut source = 0.0f64;
    for j in 0..grid.n() {
        let s = state.g.samples[j].powi(2) / grid.r(j);
        residual = residual.max(((1.0 + state.p.samples[j]) * dg.samples[j] + s).abs());
        source = source.max(s);
    }
    let (err, residual) = (err / scale, residual / source);

    // the initial data of the decay runs: G vanishes past the support of g
    let spec = ScenarioSpec::bump(chaplygin(), 0.02, 8192, 12.0, 1.0);
    let data = make_initial_data(&spec).map_err(|e| e.to_string())?;
    let big_g = compute_g(&data.state, &spec.eos).map_err(|e| e.to_string())?;
    let support = data.state.g.samples.iter().rposition(|&x| x != 0.0).map_or(0, |j| j + 1);
    outside_zero &= big_g.samples[support..].iter().all(|&x| x == 0.0);

    check(
        err <= 1e-6 && residual <= 1e-6 && outside_zero,
        format!("oracle error {err:.3e}, ODE residual {residual:.3e} (relative), exact zero outside support {outside_zero}"),
    )
}

fn ghost_audit_at(n: usize, spacing: f64) -> Result<f64, String> {
    let t_mid = 0.5;
    let spec = ScenarioSpec::bump(chaplygin(), 1e-6, n, 1.0, t_mid + spacing);
    let mut settings = RunSettings::new(spec.eos, spec.t_end);
    settings.cadence = 0.0;
    settings.snapshot_times = vec![t_mid - spacing, t_mid, t_mid + spacing];
    let (_, outcome) = simulate(&spec, &settings).map_err(|e| e.to_string())?;
    let audit = ghost_energy_audit(&outcome.snapshots, &spec.eos).map_err(|e| e.to_string())?;
    Ok(audit.iter().map(|p| p.normalized).fold(0.0, f64::max))
}

/// Order-zero ghost energy identity in the linear regime.
fn ghost_identity() -> Verdict {
    let coarse = ghost_audit_at(1024, 0.005)?;
    let fine = ghost_audit_at(2048, 0.0025)?;
    let ratio = coarse / fine;
    check(
        coarse <= 1e-3 && fine <= 1e-3 && ratio >= 4.0,
        format!("normalized residual {coarse:.3e} -> {fine:.3e}, reduction {ratio:.2}x"),
    )
}

fn random_state(rng: &mut ChaCha8Rng, n: usize) -> FieldState {
    let grid = make_grid(2.0, n).unwrap();
    let mut modes = |amp: f64| -> Vec<(f64, f64, f64)> {
        (0..3)
            .map(|_| (rng.gen_range(-amp..amp), rng.gen_range(0.2..1.5), rng.gen_range(0.5..6.0)))
            .collect()
    };
    let (pv, pf, pg) = (modes(0.3), modes(0.5), modes(0.5));
    let eval = |m: &[(f64, f64, f64)], r: f64| -> f64 {
        m.iter()
            .map(|&(a, width, k)| a * common::unit_bump(r / width) * (k * r).cos())
            .sum()
    };
    let mut s = FieldState::rest(grid);
    s.p = grid.sample(Parity::Even, |r| eval(&pv, r));
    s.f = grid.sample(Parity::Odd, |r| r * eval(&pf, r));
    s.g = grid.sample(Parity::Odd, |r| r * eval(&pg, r));
    s
}

fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let diff = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Exact structural properties of the scheme and the diagnostics.
fn structure() -> Verdict {
    let mut failures = Vec::new();

    for eos in [chaplygin(), EosSpec::polytropic(2.0)] {
        let spec = ScenarioSpec::bump(eos, 0.05, 1024, 2.0, 1.0).irrotational();
        let mut settings = RunSettings::new(eos, 1.0);
        settings.cadence = 0.0;
        let (_, out) = simulate(&spec, &settings).map_err(|e| e.to_string())?;
        if !out.final_state.g.samples.iter().all(|x| x.to_bits() == 0) {
            failures.push(format!("g0 = 0 not preserved for {}", eos.descriptor()));
        }
    }

    for eos in [chaplygin(), EosSpec::polytropic(1.4)] {
        let rest = FieldState::rest(make_grid(2.0, 512).unwrap());
        let mut settings = RunSettings::new(eos, 1.0);
        settings.cadence = 0.0;
        let out = run(&rest, &settings).map_err(|e| e.to_string())?;
        let bits = |s: &FieldState| -> Vec<u64> {
            [&s.p, &s.f, &s.g]
                .iter()
                .flat_map(|f| f.samples.iter().map(|x| x.to_bits()))
                .collect()
        };
        if out.steps == 0 || bits(&out.final_state) != bits(&rest) {
            failures.push(format!("rest state moved for {}", eos.descriptor()));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_q = 0.0f64;
    for _ in 0..100 {
        let s = random_state(&mut rng, 400);
        s.validate(&chaplygin()).map_err(|e| e.to_string())?;
        let (a1, a2) = nonlinear_terms(&s).map_err(|e| e.to_string())?;
        let (b1, b2) = nonlinear_terms_null_form(&s).map_err(|e| e.to_string())?;
        worst_q = worst_q.max(max_rel_diff(&a1, &b1)).max(max_rel_diff(&a2, &b2));
    }
    if worst_q > 1e-12 {
        failures.push(format!("Q forms differ by {worst_q:e}"));
    }

    for (n, r_max) in [(64, 1.0), (1000, 37.0), (4096, 300.0)] {
        let grid = make_grid(r_max, n).unwrap();
        for t in [0.0, 0.3, 1.0, 17.5, 250.0] {
            let c = cutoffs(&grid, t);
            if c.chi0.samples.iter().zip(&c.chi1.samples).any(|(a, b)| a + b != 1.0) {
                failures.push(format!("chi0 + chi1 != 1 at t = {t}"));
            }
        }
    }

    if failures.is_empty() {
        Ok(format!("g0 = 0 and rest state bitwise, Q forms within {worst_q:.2e}, partition exact"))
    } else {
        Err(failures.join("; "))
    }
}

/// Self-convergence on the smooth Chaplygin benchmark.
fn scheme_order() -> Verdict {
    let spec = ScenarioSpec::bump(chaplygin(), 0.05, 4096, 2.0, 1.0);
    let report = convergence_study(&spec, &[4096, 8192, 16384], Stencil::Fourth).map_err(|e| e.to_string())?;
    let order = report.min_order().unwrap_or(f64::NAN);
    check(order >= 3.5, format!("minimum observed order {order:.3} (n = 4096, 8192, 16384)"))
}

/// Degree-one homogeneity of the data size and of every energy.
fn homogeneity() -> Verdict {
    let mut worst = 0.0f64;
    let base = ScenarioSpec::bump(chaplygin(), 1.0, 2048, 2.0, 1.0);
    let unit = make_initial_data(&base).map_err(|e| e.to_string())?;
    for eps in [0.02, 0.3, 3.0] {
        let mut spec = base.clone();
        spec.epsilon = eps;
        let data = make_initial_data(&spec).map_err(|e| e.to_string())?;
        let size = data_size_epsilon(&data.state, &data.rho0, 2).map_err(|e| e.to_string())?;
        worst = worst.max((size - eps * unit.data_size).abs() / (eps * unit.data_size));
    }

    let spec = ScenarioSpec::bump(chaplygin(), 0.05, 2048, 2.0, 1.0);
    let data = make_initial_data(&spec).map_err(|e| e.to_string())?;
    let mut state = data.state;
    state.t = 0.7;
    let table = build_derivative_table(&state, &spec.eos, 2).map_err(|e| e.to_string())?;
    let cut = cutoffs(&state.grid(), state.t);
    let energies = |t: &radial_euler::analysis::DerivativeTable| -> Result<Vec<f64>, String> {
        let mut out = Vec::new();
        for k in 0..=2 {
            out.push(energy_e(t, k).map_err(|e| e.to_string())?);
            out.push(energy_x(t, &cut, k).map_err(|e| e.to_string())?);
            out.push(energy_y(t, &cut, k).map_err(|e| e.to_string())?);
            out.push(vorticity_w(t, k).map_err(|e| e.to_string())?);
        }
        Ok(out)
    };
    let reference = energies(&table)?;
    for c in [-3.0, 0.25, 7.0] {
        let scaled = energies(&table.scaled(c))?;
        for (s, r) in scaled.iter().zip(&reference) {
            if *r != 0.0 {
                worst = worst.max((s - c.abs() * r).abs() / (c.abs() * r));
            }
        }
    }
    check(worst <= 1e-12, format!("worst relative deviation {worst:.2e}"))
}

fn main() -> ExitCode {
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |k: usize| selected.is_empty() || selected.contains(&k);
    let mut results: Vec<(usize, &str, Verdict, f64)> = Vec::new();
    let mut timed = |k: usize, name: &'static str, f: &dyn Fn() -> Verdict| {
        if wanted(k) {
            let start = Instant::now();
            let verdict = f();
            let wall = start.elapsed().as_secs_f64();
            print_line(k, name, &verdict, wall);
            results.push((k, name, verdict, wall));
        }
    };

    timed(1, "lifespan scaling", &lifespan_scaling);
    if wanted(2) || wanted(3) || wanted(4) {
        match decay_evidence() {
            Ok(ev) => {
                timed(2, "Chaplygin global evolution", &|| global_evolution(&ev));
                timed(3, "near-cone decay", &|| near_cone_decay(&ev));
                timed(4, "away-from-cone decay", &|| interior_decay(&ev));
            }
            Err(e) => {
                for (k, name) in [(2, "Chaplygin global evolution"), (3, "near-cone decay"), (4, "away-from-cone decay")] {
                    timed(k, name, &|| Err(e.clone()));
                }
            }
        }
    }
    timed(5, "vorticity and angular momentum transport", &transport);
    timed(6, "G transform", &g_transform);
    timed(7, "ghost energy identity", &ghost_identity);
    timed(8, "structural exactness", &structure);
    timed(9, "scheme order", &scheme_order);
    timed(10, "homogeneity", &homogeneity);

    let failed = results.iter().filter(|r| r.2.is_err()).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn print_line(k: usize, name: &str, verdict: &Verdict, wall: f64) {
    let (tag, detail) = match verdict {
        Ok(d) => ("PASS", d),
        Err(d) => ("FAIL", d),
    };
    println!("criterion {k:>2} {tag} {name}: {detail} [{wall:.1} s]");
}
