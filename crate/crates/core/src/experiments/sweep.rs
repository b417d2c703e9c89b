//! Lifespan of polytropic bump data as a function of amplitude.

use std::time::{Duration, Instant};

use log::info;
use rayon::prelude::*;

use super::{make_initial_data, simulate, ScenarioSpec, MIN_SUPPORT_CELLS, SUPPORT_RADIUS};
use crate::analysis::fit::fit_line;
use crate::dynamics::{max_signal_speed, RunSettings, RunStatus};
use crate::error::{Error, Result};

pub const MIN_MEMBERS: usize = 4;
pub const MIN_SPAN: f64 = 4.0;
/// Grid half-width as a multiple of the distance covered at the initial
/// signal speed.
const REACH_FACTOR: f64 = 1.5;

#[derive(Debug, Clone)]
pub struct SweepOptions {
    /// Guess of `eps^2 T`, used to size the first attempt.
    pub horizon_constant: f64,
    /// Attempts after the first, each doubling `t_end` and `r_max`.
    pub max_retries: usize,
    /// Repeat every member at half the grid spacing.
    pub refine: bool,
    pub jobs: usize,
    /// Wall-clock budget for the whole sweep.
    pub budget: Option<Duration>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            horizon_constant: 0.06,
            max_retries: 3,
            refine: true,
            jobs: 1,
            budget: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub epsilon: f64,
    pub lifespan: f64,
    pub n: usize,
    pub r_max: f64,
    /// Horizon of the attempt that blew up.
    pub t_end: f64,
    pub attempts: usize,
    /// Gradient factor of the detector.
    pub theta: f64,
    pub refined_lifespan: Option<f64>,
}

impl SweepRow {
    /// Relative change of the lifespan under grid refinement.
    pub fn refinement_change(&self) -> Option<f64> {
        self.refined_lifespan.map(|t| ((t - self.lifespan) / self.lifespan).abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifespanSummary {
    /// Slope of `log T` against `log eps`.
    pub slope: f64,
    pub r_squared: f64,
    /// Median of `eps^2 T`.
    pub tau0_sq: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub summary: LifespanSummary,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    }
}

/// Power-law summary of `(eps, T)` pairs.
pub fn summarize_lifespans(points: &[(f64, f64)]) -> Result<LifespanSummary> {
    if points.iter().any(|&(e, t)| !(e > 0.0 && t > 0.0)) {
        return Err(Error::Fit("amplitudes and lifespans must be positive".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let line = fit_line(&xs, &ys)?;
    Ok(LifespanSummary {
        slope: line.slope,
        r_squared: line.r_squared,
        tau0_sq: median(points.iter().map(|&(e, t)| e * e * t).collect()),
    })
}

fn check_members(epsilons: &[f64]) -> Result<()> {
    if epsilons.len() < MIN_MEMBERS {
        return Err(Error::Usage(format!(
            "a sweep needs at least {MIN_MEMBERS} amplitudes, got {}",
            epsilons.len()
        )));
    }
    if epsilons.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(Error::Usage("sweep amplitudes must be positive".into()));
    }
    let lo = epsilons.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = epsilons.iter().copied().fold(0.0, f64::max);
    if hi / lo < MIN_SPAN {
        return Err(Error::Usage(format!(
            "sweep amplitudes span a factor {:.3}, need at least {MIN_SPAN}",
            hi / lo
        )));
    }
    Ok(())
}

/// Grid for a horizon `t_end`: wide enough for the signal to travel and fine
/// enough to resolve the support, never coarser than `base_n` allows.
fn sized_grid(base_n: usize, c_max: f64, t_end: f64) -> (usize, f64) {
    let r_max = SUPPORT_RADIUS + REACH_FACTOR * c_max * t_end;
    let n = base_n.max((MIN_SUPPORT_CELLS * r_max / SUPPORT_RADIUS).ceil() as usize);
    (n, r_max)
}

/// Largest initial signal speed, measured on a small grid over the support.
fn initial_speed(base: &ScenarioSpec, epsilon: f64) -> Result<f64> {
    let mut probe = base.clone();
    probe.epsilon = epsilon;
    probe.r_max = 2.0 * SUPPORT_RADIUS;
    probe.n = 4 * MIN_SUPPORT_CELLS as usize;
    let data = make_initial_data(&probe)?;
    Ok(max_signal_speed(&data.state, &base.eos))
}

fn run_member(base: &ScenarioSpec, template: &RunSettings, epsilon: f64, opts: &SweepOptions) -> Result<SweepRow> {
    let label = format!("eps={epsilon}");
    let fail = |msg: String| Error::Sweep {
        label: label.clone(),
        msg,
    };
    let c_max = initial_speed(base, epsilon)?;
    let mut t_end = opts.horizon_constant / (epsilon * epsilon);
    for attempt in 0..=opts.max_retries {
        let (n, r_max) = sized_grid(base.n, c_max, t_end);
        let mut spec = base.clone();
        spec.epsilon = epsilon;
        spec.n = n;
        spec.r_max = r_max;
        spec.t_end = t_end;
        let mut settings = template.clone();
        settings.t_end = t_end;
        settings.cadence = 0.0;
        settings.snapshot_times.clear();
        info!("{label}: attempt {} with t_end = {t_end:.3}, r_max = {r_max:.3}, n = {n}", attempt + 1);
        let (_, outcome) = simulate(&spec, &settings).map_err(|e| fail(e.to_string()))?;
        match outcome.status {
            RunStatus::Aborted => return Err(fail(outcome.message.unwrap_or_default())),
            RunStatus::Completed => t_end *= 2.0,
            RunStatus::BlewUp => {
                let lifespan = outcome.blowup_time.unwrap_or(outcome.t_end);
                let refined_lifespan = if opts.refine {
                    spec.n *= 2;
                    let (_, fine) = simulate(&spec, &settings).map_err(|e| fail(e.to_string()))?;
                    match fine.status {
                        RunStatus::BlewUp => fine.blowup_time,
                        RunStatus::Aborted => return Err(fail(fine.message.unwrap_or_default())),
                        RunStatus::Completed => None,
                    }
                } else {
                    None
                };
                return Ok(SweepRow {
                    epsilon,
                    lifespan,
                    n,
                    r_max,
                    t_end,
                    attempts: attempt + 1,
                    theta: template.thresholds.gradient_factor,
                    refined_lifespan,
                });
            }
        }
    }
    Err(fail(format!(
        "no blow-up detected by t = {} after {} attempts",
        t_end / 2.0,
        opts.max_retries + 1
    )))
}

/// Measures `T_eps` for each amplitude and fits `T ~ eps^slope`.
///
/// `base` supplies the gas, profiles, seed, cfl and minimum resolution;
/// `template` supplies thresholds and dissipation. Each member is sized from
/// `opts.horizon_constant / eps^2`.
pub fn lifespan_sweep(
    base: &ScenarioSpec,
    template: &RunSettings,
    epsilons: &[f64],
    opts: &SweepOptions,
) -> Result<SweepReport> {
    if base.eos.is_chaplygin() {
        return Err(Error::Usage("the lifespan sweep needs a polytropic gas".into()));
    }
    check_members(epsilons)?;
    let mut settings = template.clone();
    settings.eos = base.eos;
    settings.cfl = base.cfl;
    settings.deadline = opts.budget.map(|b| Instant::now() + b);

    // cheapest members first so that a failing sweep fails early
    let mut order: Vec<f64> = epsilons.to_vec();
    order.sort_by(|a, b| b.total_cmp(a));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.max(1))
        .build()
        .map_err(|e| Error::Usage(format!("thread pool: {e}")))?;
    let mut rows = pool.install(|| {
        order
            .par_iter()
            .map(|&eps| run_member(base, &settings, eps, opts))
            .collect::<Result<Vec<_>>>()
    })?;
    rows.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon));
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.epsilon, r.lifespan)).collect();
    let summary = summarize_lifespans(&points)?;
    Ok(SweepReport { rows, summary })
}
