//! Invariant suite on small fixed scenarios, run by the `verify` command.

use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{bump, convergence_study, make_initial_data, simulate, trajectory_drift, ScenarioSpec, SUPPORT_RADIUS};
use crate::analysis::audit::{ghost_energy_audit, nonlinear_terms, nonlinear_terms_null_form};
use crate::analysis::energy::{energy_e, energy_x, energy_y, vorticity_w};
use crate::analysis::table::{build_derivative_table, DerivativeTable};
use crate::analysis::transforms::compute_g;
use crate::analysis::weights::{cutoffs, CutoffPair};
use crate::config::{parse_config, SimConfig};
use crate::dynamics::{run, FieldState, RunSettings, RunStatus};
use crate::eos::EosSpec;
use crate::error::Result;
use crate::grid::{ddr, make_grid, Parity, Stencil};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

fn bits(s: &FieldState) -> Vec<u64> {
    [&s.p, &s.f, &s.g]
        .iter()
        .flat_map(|f| f.samples.iter().map(|x| x.to_bits()))
        .collect()
}

fn quiet(eos: EosSpec, t_end: f64) -> RunSettings {
    let mut s = RunSettings::new(eos, t_end);
    s.cadence = 0.0;
    s
}

fn rest_fixed_point() -> Result<Check> {
    let mut moved = Vec::new();
    for eos in [EosSpec::default(), EosSpec::polytropic(2.0)] {
        let rest = FieldState::rest(make_grid(2.0, 256)?);
        let out = run(&rest, &quiet(eos, 0.5))?;
        if bits(&out.final_state) != bits(&rest) {
            moved.push(eos.descriptor());
        }
    }
    Ok(check("rest_fixed_point", moved.is_empty(), format!("moved: {moved:?}")))
}

fn irrotational_stays_irrotational() -> Result<Check> {
    let mut bad = Vec::new();
    for eos in [EosSpec::default(), EosSpec::polytropic(2.0)] {
        let spec = ScenarioSpec::bump(eos, 0.05, 512, 1.0, 0.5).irrotational();
        let (_, out) = simulate(&spec, &quiet(eos, 0.5))?;
        if out.final_state.g.samples.iter().any(|x| x.to_bits() != 0) {
            bad.push(eos.descriptor());
        }
    }
    Ok(check("zero_swirl_preserved", bad.is_empty(), format!("violations: {bad:?}")))
}

fn random_state(rng: &mut ChaCha8Rng) -> Result<FieldState> {
    let grid = make_grid(2.0, 300)?;
    let mut coeffs = |amp: f64| -> [(f64, f64); 3] {
        [(); 3].map(|_| (rng.gen_range(-amp..amp), rng.gen_range(0.5..6.0)))
    };
    let (cv, cf, cg) = (coeffs(0.3), coeffs(0.5), coeffs(0.5));
    let eval = |c: &[(f64, f64); 3], r: f64| -> f64 {
        let envelope = bump(r * SUPPORT_RADIUS);
        c.iter().map(|&(a, k)| a * (k * r).cos()).sum::<f64>() * envelope
    };
    let mut s = FieldState::rest(grid);
    s.p = grid.sample(Parity::Even, |r| eval(&cv, r));
    s.f = grid.sample(Parity::Odd, |r| r * eval(&cf, r));
    s.g = grid.sample(Parity::Odd, |r| r * eval(&cg, r));
    Ok(s)
}

fn relative_gap(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let gap = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    if scale == 0.0 {
        gap
    } else {
        gap / scale
    }
}

fn null_form_equivalence() -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..25 {
        let s = random_state(&mut rng)?;
        let (a1, a2) = nonlinear_terms(&s)?;
        let (b1, b2) = nonlinear_terms_null_form(&s)?;
        worst = worst.max(relative_gap(&a1, &b1)).max(relative_gap(&a2, &b2));
    }
    Ok(check("null_form_equivalence", worst <= 1e-12, format!("worst gap {worst:.2e}")))
}

fn partition_of_unity() -> Result<Check> {
    let grid = make_grid(50.0, 2000)?;
    let exact = [0.0, 0.5, 3.0, 40.0]
        .iter()
        .all(|&t| {
            let c = cutoffs(&grid, t);
            c.chi0.samples.iter().zip(&c.chi1.samples).all(|(a, b)| a + b == 1.0)
        });
    Ok(check("partition_of_unity", exact, String::new()))
}

fn energies(table: &DerivativeTable, cut: &CutoffPair) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for k in 0..=table.order {
        out.extend([
            energy_e(table, k)?,
            energy_x(table, cut, k)?,
            energy_y(table, cut, k)?,
            vorticity_w(table, k)?,
        ]);
    }
    Ok(out)
}

fn homogeneity() -> Result<Check> {
    let spec = ScenarioSpec::bump(EosSpec::default(), 0.05, 512, 1.0, 1.0);
    let unit = make_initial_data(&ScenarioSpec { epsilon: 1.0, ..spec.clone() })?;
    let data = make_initial_data(&spec)?;
    let mut worst = (data.data_size - 0.05 * unit.data_size).abs() / (0.05 * unit.data_size);
    let mut state = data.state;
    state.t = 0.4;
    let table = build_derivative_table(&state, &spec.eos, 2)?;
    let cut = cutoffs(&state.grid(), state.t);
    let base = energies(&table, &cut)?;
    for c in [-2.0, 0.125, 5.0] {
        for (s, b) in energies(&table.scaled(c), &cut)?.iter().zip(&base) {
            if *b != 0.0 {
                worst = worst.max((s - c.abs() * b).abs() / (c.abs() * b));
            }
        }
    }
    Ok(check("homogeneity", worst <= 1e-12, format!("worst deviation {worst:.2e}")))
}

fn g_transform() -> Result<Check> {
    let spec = ScenarioSpec::bump(EosSpec::default(), 0.05, 2048, 1.0, 1.0);
    let state = make_initial_data(&spec)?.state;
    let grid = state.grid();
    let big_g = compute_g(&state, &spec.eos)?;
    let dg = ddr(&big_g)?;
    let mut residual = 0.0f64;
    let mut source = 0.0f64;
    for j in 0..grid.n() {
        let s = state.g.samples[j].powi(2) / grid.r(j);
        residual = residual.max(((1.0 + state.p.samples[j]) * dg.samples[j] + s).abs());
        source = source.max(s);
    }
    // scale-free form of the 10 h^2 bound: h in units of the support radius
    let h = grid.h() / SUPPORT_RADIUS;
    let relative = residual / source;
    let support = state.g.samples.iter().rposition(|&x| x != 0.0).map_or(0, |j| j + 1);
    let vanishes = big_g.samples[support..].iter().all(|&x| x == 0.0);
    Ok(check(
        "g_transform",
        relative <= 10.0 * h * h && vanishes,
        format!("relative ODE residual {relative:.2e} (bound {:.2e}), zero outside support {vanishes}", 10.0 * h * h),
    ))
}

fn ghost_identity() -> Result<Check> {
    let mut levels = Vec::new();
    for (n, spacing) in [(1024, 0.005), (2048, 0.0025)] {
        let spec = ScenarioSpec::bump(EosSpec::default(), 1e-6, n, 1.0, 0.5 + spacing);
        let mut settings = quiet(spec.eos, spec.t_end);
        settings.snapshot_times = vec![0.5 - spacing, 0.5, 0.5 + spacing];
        let (_, out) = simulate(&spec, &settings)?;
        let audit = ghost_energy_audit(&out.snapshots, &spec.eos)?;
        levels.push(audit.iter().map(|p| p.normalized).fold(0.0, f64::max));
    }
    let ratio = levels[0] / levels[1];
    Ok(check(
        "ghost_identity",
        levels[0] <= 1e-3 && ratio >= 4.0,
        format!("residual {:.2e} -> {:.2e}, ratio {ratio:.2}", levels[0], levels[1]),
    ))
}

fn transport() -> Result<Check> {
    let spec = ScenarioSpec::bump(EosSpec::default(), 0.02, 2048, 2.5, 2.0);
    let mut settings = quiet(spec.eos, 2.0);
    settings.snapshot_times = vec![0.5, 1.0, 1.5];
    let (data, out) = simulate(&spec, &settings)?;
    let drift = trajectory_drift(&data.state, &out, &spec.eos)?;
    let worst = drift.max_rg().max(drift.max_w());
    Ok(check("transport", worst <= 1e-3, format!("worst drift {worst:.2e}")))
}

fn convergence() -> Result<Check> {
    // pre-asymptotic resolutions, so the bound is below the design order
    let spec = ScenarioSpec::bump(EosSpec::default(), 0.05, 2048, 2.0, 1.0);
    let report = convergence_study(&spec, &[2048, 4096, 8192], Stencil::Fourth)?;
    let order = report.min_order().unwrap_or(f64::NAN);
    Ok(check("convergence", order >= 2.5, format!("minimum order {order:.3}")))
}

fn determinism() -> Result<Check> {
    let spec = ScenarioSpec::bump(EosSpec::polytropic(2.0), 0.05, 512, 1.0, 0.5);
    let mut settings = RunSettings::new(spec.eos, 0.5);
    settings.order = 1;
    let (_, a) = simulate(&spec, &settings)?;
    let (_, b) = simulate(&spec, &settings)?;
    let same = a.ledger == b.ledger && bits(&a.final_state) == bits(&b.final_state);
    Ok(check("determinism", same, String::new()))
}

fn dichotomy_smoke() -> Result<Check> {
    let spec = ScenarioSpec::bump(EosSpec::default(), 0.02, 2048, 4.0, 3.0);
    let (_, out) = simulate(&spec, &quiet(spec.eos, 3.0))?;
    Ok(check(
        "chaplygin_short_run",
        out.status == RunStatus::Completed,
        format!("status {}", out.status.as_str()),
    ))
}

fn config_round_trip() -> Result<Check> {
    let text = "eos = polytropic\ngamma = 1.4\nepsilon = 0.03\nsnapshot_times = 0.5, 1\nfit_t_lo = 5\nfit_t_hi = 9";
    let cfg = parse_config(text)?;
    let again = parse_config(&cfg.to_string())?;
    let defaults = parse_config(&SimConfig::default().to_string())?;
    Ok(check(
        "config_round_trip",
        again == cfg && defaults == SimConfig::default(),
        String::new(),
    ))
}

type CheckFn = fn() -> Result<Check>;

/// Runs every check; errors inside a check count as failures.
pub fn invariant_suite() -> Vec<Check> {
    let checks: [(&'static str, CheckFn); 13] = [
        ("rest_fixed_point", rest_fixed_point),
        ("zero_swirl_preserved", irrotational_stays_irrotational),
        ("null_form_equivalence", null_form_equivalence),
        ("partition_of_unity", partition_of_unity),
        ("homogeneity", homogeneity),
        ("g_transform", g_transform),
        ("ghost_identity", ghost_identity),
        ("transport", transport),
        ("convergence", convergence),
        ("determinism", determinism),
        ("chaplygin_short_run", dichotomy_smoke),
        ("config_round_trip", config_round_trip),
        ("snapshot_round_trip", snapshot_round_trip),
    ];
    checks
        .iter()
        .map(|(name, f)| {
            let c = f().unwrap_or_else(|e| check(name, false, e.to_string()));
            info!("{}: {} {}", c.name, if c.passed { "ok" } else { "FAILED" }, c.detail);
            c
        })
        .collect()
}

fn snapshot_round_trip() -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut state = random_state(&mut rng)?;
    state.t = 1.0 / 3.0;
    let dir = std::env::temp_dir().join(format!("radial-euler-verify-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| crate::error::Error::io(&dir, e))?;
    let eos = EosSpec::polytropic(5.0 / 3.0);
    let path = crate::io::write_snapshot(&dir, "verify", 0, &state, &eos)?;
    let (back, eos_back) = crate::io::read_snapshot(&path)?;
    let _ = std::fs::remove_dir_all(&dir);
    Ok(check(
        "snapshot_round_trip",
        bits(&back) == bits(&state) && back.t == state.t && eos_back == eos,
        String::new(),
    ))
}
