use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use log::{error, info, warn};

use radial_euler::config::{parse_config, SimConfig, Study};
use radial_euler::dynamics::RunStatus;
use radial_euler::experiments::{
    convergence_study, decay_study, invariant_suite, lifespan_sweep, simulate, ObservedOrder, SweepOptions,
};
use radial_euler::grid::Stencil;
use radial_euler::io::{
    cell, spec_hash, write_ledger_csv, write_manifest, write_snapshot, write_table_csv, RunManifest,
};
use radial_euler::{Error, Result};

#[derive(Parser)]
#[command(name = "radial-euler", version, about = "Axisymmetric compressible Euler studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Configuration file (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `out_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Grid size, overriding `n`.
    #[arg(long, global = true)]
    resolution: Option<usize>,
    /// Only report warnings and errors.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Integrate one trajectory.
    Run,
    /// Lifespan sweep over `epsilons` for a polytropic gas.
    Sweep,
    /// Long Chaplygin run with decay-rate fits.
    Decay,
    /// Self-convergence on (n, 2n, 4n).
    Converge,
    /// Invariant suite on small fixed scenarios.
    Verify,
}

impl Command {
    fn study(self) -> Study {
        match self {
            Self::Run => Study::Run,
            Self::Sweep => Study::Sweep,
            Self::Decay => Study::Decay,
            Self::Converge => Study::Converge,
            Self::Verify => Study::Verify,
        }
    }
}

const EXIT_REJECTED: u8 = 2;

fn load_config(cli: &Cli) -> Result<SimConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            parse_config(&text)?
        }
        None => SimConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    if let Some(n) = cli.resolution {
        cfg.n = n;
    }
    cfg.study = cli.command.study();
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_run(cfg: &SimConfig, out: &Path, m: &mut RunManifest) -> Result<()> {
    let spec = cfg.scenario()?;
    let settings = cfg.run_settings(&spec);
    let (data, outcome) = simulate(&spec, &settings)?;
    write_ledger_csv(&out.join("ledger.csv"), &outcome.ledger)?;
    for (i, snap) in outcome.snapshots.iter().enumerate() {
        write_snapshot(out, &m.run_id, i, snap, &spec.eos)?;
    }
    m.outcome = outcome.status.as_str().to_string();
    m.partial = outcome.status == RunStatus::Aborted;
    m.result("data_size", data.data_size);
    m.result("t_reached", outcome.t_end);
    m.result("steps", outcome.steps);
    if let Some(t) = outcome.blowup_time {
        m.result("blowup_time", t);
    }
    if let Some(msg) = &outcome.message {
        m.result("message", msg);
    }
    Ok(())
}

fn cmd_sweep(cfg: &SimConfig, out: &Path, jobs: usize, m: &mut RunManifest) -> Result<()> {
    let base = cfg.scenario_with(cfg.epsilons.first().copied().unwrap_or(1.0))?;
    let template = cfg.run_settings(&base);
    let opts = SweepOptions {
        horizon_constant: cfg.horizon_constant,
        jobs,
        ..SweepOptions::default()
    };
    let report = lifespan_sweep(&base, &template, &cfg.epsilons, &opts)?;
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                cell(Some(r.epsilon)),
                cell(Some(r.lifespan)),
                r.n.to_string(),
                cell(Some(r.r_max)),
                cell(Some(r.t_end)),
                r.attempts.to_string(),
                cell(Some(r.theta)),
                cell(r.refined_lifespan),
                cell(r.refinement_change()),
            ]
        })
        .collect();
    write_table_csv(
        &out.join("sweep.csv"),
        &["epsilon", "lifespan", "n", "r_max", "t_end", "attempts", "theta", "refined_lifespan", "refinement_change"],
        &rows,
    )?;
    let s = report.summary;
    m.outcome = "completed".into();
    m.result("slope", s.slope);
    m.result("r_squared", s.r_squared);
    m.result("tau0_sq", s.tau0_sq);
    m.result("theta", template.thresholds.gradient_factor);
    m.result("dt_floor_factor", template.thresholds.dt_floor_factor);
    let stable = report
        .rows
        .iter()
        .all(|r| r.refinement_change().is_some_and(|c| c <= 0.02));
    let decreasing = report.rows.windows(2).all(|w| w[1].lifespan < w[0].lifespan);
    m.acceptance.push(("slope".into(), (-2.2..=-1.8).contains(&s.slope)));
    m.acceptance.push(("refinement".into(), stable));
    m.acceptance.push(("monotone".into(), decreasing));
    Ok(())
}

fn cmd_decay(cfg: &SimConfig, out: &Path, m: &mut RunManifest) -> Result<()> {
    let spec = cfg.scenario()?;
    let settings = cfg.run_settings(&spec);
    let window = cfg.fit_window_for(settings.t_end);
    let report = decay_study(&spec, &settings, Some(window))?;
    write_ledger_csv(&out.join("ledger.csv"), &report.ledger)?;
    let rows: Vec<Vec<String>> = report
        .fits
        .iter()
        .map(|f| {
            vec![
                f.name.to_string(),
                cell(f.target),
                cell(f.fit.map(|x| x.exponent)),
                cell(f.fit.map(|x| x.r_squared)),
                f.fit.map_or(String::new(), |x| x.points.to_string()),
                cell(Some(f.window_max)),
                f.note.clone().unwrap_or_default().replace(',', ";"),
            ]
        })
        .collect();
    write_table_csv(
        &out.join("decay_fits.csv"),
        &["probe", "target", "exponent", "r_squared", "points", "window_max", "note"],
        &rows,
    )?;
    m.outcome = report.status.as_str().to_string();
    m.result("fit_window", format!("{} {}", window.0, window.1));
    m.result("t_reached", report.reached);
    for f in &report.fits {
        if let Some(fit) = f.fit {
            m.result(&format!("exponent.{}", f.name), fit.exponent);
        }
    }
    let exponent = |name: &str| report.fit(name).and_then(|f| f.fit).map(|f| f.exponent);
    let e2 = |t: f64| report.value_at("E2", t);
    let bounded = match (e2(1.0), e2(report.reached)) {
        (Some(a), Some(b)) if a > 0.0 => (0.5..=2.0).contains(&(b / a)),
        _ => false,
    };
    m.acceptance.push(("no_blowup".into(), report.status == RunStatus::Completed));
    m.acceptance.push(("e2_bounded".into(), bounded));
    m.acceptance.push((
        "near_cone".into(),
        exponent("near_cone").is_some_and(|p| (-1.8..=-1.2).contains(&p)),
    ));
    m.acceptance.push((
        "interior_dt_vtilde".into(),
        exponent("interior_dt_vtilde").is_some_and(|p| p <= -1.6),
    ));
    Ok(())
}

fn order_cell(o: ObservedOrder) -> String {
    match o {
        ObservedOrder::Exact => "exact".into(),
        ObservedOrder::Undefined => "undefined".into(),
        ObservedOrder::Value(x) => cell(Some(x)),
    }
}

fn cmd_converge(cfg: &SimConfig, out: &Path, m: &mut RunManifest) -> Result<()> {
    let spec = cfg.scenario()?;
    let levels = [cfg.n, 2 * cfg.n, 4 * cfg.n];
    let report = convergence_study(&spec, &levels, Stencil::Fourth)?;
    let mut rows = Vec::new();
    for f in &report.fields {
        for (norm, diffs, order) in [("l2", f.l2, f.order_l2), ("linf", f.linf, f.order_linf)] {
            rows.push(vec![
                f.field.to_string(),
                norm.to_string(),
                cell(Some(diffs.0)),
                cell(Some(diffs.1)),
                order_cell(order),
            ]);
        }
    }
    write_table_csv(
        &out.join("convergence.csv"),
        &["field", "norm", "diff_coarse", "diff_fine", "order"],
        &rows,
    )?;
    m.outcome = "completed".into();
    m.result("resolutions", format!("{} {} {}", levels[0], levels[1], levels[2]));
    let min = report.min_order();
    if let Some(p) = min {
        m.result("min_order", p);
    }
    m.acceptance.push(("order".into(), report.is_exact() || min.is_some_and(|p| p >= 3.5)));
    Ok(())
}

fn cmd_verify(out: &Path, m: &mut RunManifest) -> Result<()> {
    let checks = invariant_suite();
    let rows: Vec<Vec<String>> = checks
        .iter()
        .map(|c| {
            vec![
                c.name.to_string(),
                if c.passed { "pass" } else { "fail" }.to_string(),
                c.detail.replace(',', ";"),
            ]
        })
        .collect();
    write_table_csv(&out.join("verify.csv"), &["check", "result", "detail"], &rows)?;
    m.outcome = "completed".into();
    for c in checks {
        if !c.passed {
            warn!("check {} failed: {}", c.name, c.detail);
        }
        m.acceptance.push((c.name.to_string(), c.passed));
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<bool> {
    let cfg = load_config(cli)?;
    let out = cfg.out_dir.clone();
    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let run_id = format!("{}-{}", cfg.study.as_str(), &spec_hash(&cfg)[..12]);
    let mut manifest = RunManifest::new(run_id, cfg.clone());
    let start = Instant::now();
    let result = match cli.command {
        Command::Run => cmd_run(&cfg, &out, &mut manifest),
        Command::Sweep => cmd_sweep(&cfg, &out, cli.jobs, &mut manifest),
        Command::Decay => cmd_decay(&cfg, &out, &mut manifest),
        Command::Converge => cmd_converge(&cfg, &out, &mut manifest),
        Command::Verify => cmd_verify(&out, &mut manifest),
    };
    manifest.wall_time = start.elapsed().as_secs_f64();
    if let Err(e) = &result {
        manifest.outcome = format!("error: {e}");
        manifest.partial = true;
    }
    write_manifest(&out.join("manifest.txt"), &manifest)?;
    result?;
    for (name, ok) in &manifest.acceptance {
        info!("{name}: {}", if *ok { "pass" } else { "fail" });
    }
    info!("{} finished in {:.1} s, outputs in {}", manifest.run_id, manifest.wall_time, out.display());
    Ok(manifest.all_accepted())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            error!("acceptance checks failed");
            ExitCode::from(EXIT_REJECTED)
        }
        Err(e) => {
            error!("{e}");
            ExitCode::FAILURE
        }
    }
}
