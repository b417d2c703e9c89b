use std::time::Instant;

use log::{debug, info};

use super::{
    check_positivity, local_sound_speed, max_gradient, BlowupThresholds, FieldState, Stepper, DEFAULT_DISSIPATION,
    WINDOW_PAD,
};
use crate::analysis::ledger::{evaluate_row, EnergyLedger};
use crate::eos::EosSpec;
use crate::error::{Error, Result};
use crate::grid::{ddr_slice, Parity, Stencil};

/// Cells kept free between the perturbation and the outer edge.
pub const SUPPORT_MARGIN: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Completed,
    BlewUp,
    Aborted,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Completed => "completed",
            Self::BlewUp => "blew_up",
            Self::Aborted => "aborted",
        }
    }
}

/// Integration and diagnostic controls for [`run`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub eos: EosSpec,
    pub t_end: f64,
    pub cfl: f64,
    /// Time between ledger rows; zero disables the ledger.
    pub cadence: f64,
    /// Derivative-table depth used for ledger rows.
    pub order: usize,
    pub thresholds: BlowupThresholds,
    /// Times at which the state is recorded.
    pub snapshot_times: Vec<f64>,
    pub dissipation: f64,
    /// Window and support tolerances relative to the initial amplitude.
    pub window_tol: f64,
    pub support_tol: f64,
    pub stencil: Stencil,
    /// Wall-clock limit; a run still going at the deadline is aborted.
    pub deadline: Option<Instant>,
}

impl RunSettings {
    pub fn new(eos: EosSpec, t_end: f64) -> Self {
        Self {
            eos,
            t_end,
            cfl: 0.4,
            cadence: 0.1,
            order: 2,
            thresholds: BlowupThresholds::default(),
            snapshot_times: Vec::new(),
            dissipation: DEFAULT_DISSIPATION,
            window_tol: 1e-30,
            support_tol: 1e-12,
            stencil: Stencil::Fourth,
            deadline: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub status: RunStatus,
    /// Time reached.
    pub t_end: f64,
    pub blowup_time: Option<f64>,
    pub max_gradient_history: Vec<(f64, f64)>,
    pub ledger: EnergyLedger,
    pub snapshots: Vec<FieldState>,
    pub final_state: FieldState,
    pub steps: usize,
    pub message: Option<String>,
}

fn amplitude(state: &FieldState) -> f64 {
    state.p.sup_norm().max(state.f.sup_norm()).max(state.g.sup_norm())
}

/// Sorted event times in `[0, t_end]` spaced by `cadence`, merged with the
/// snapshot times.
fn event_times(settings: &RunSettings) -> Vec<f64> {
    let mut times: Vec<f64> = settings.snapshot_times.clone();
    if settings.cadence > 0.0 {
        let count = (settings.t_end / settings.cadence + 1e-9).floor() as usize;
        times.extend((0..=count).map(|i| i as f64 * settings.cadence));
    }
    times.push(settings.t_end);
    times.retain(|&t| t >= 0.0 && t <= settings.t_end);
    times.sort_by(f64::total_cmp);
    times.dedup();
    times
}

fn is_diagnostic_time(t: f64, settings: &RunSettings) -> bool {
    if settings.cadence <= 0.0 {
        return false;
    }
    let k = (t / settings.cadence).round();
    (k * settings.cadence - t).abs() <= 1e-9 * settings.cadence.max(t)
}

/// Per-step checks restricted to the nodes a step can have touched. They
/// agree with [`super::detect_blowup`] and [`super::cfl_dt`] up to samples
/// below the window tolerance.
struct Monitor {
    eos: EosSpec,
    h: f64,
    n: usize,
    grad0: f64,
    scratch: Vec<f64>,
}

impl Monitor {
    fn max_speed(&self, state: &FieldState, limit: usize) -> f64 {
        let (p, f) = (&state.p.samples[..limit], &state.f.samples[..limit]);
        let rest = if limit < self.n { local_sound_speed(&self.eos, 0.0) } else { 0.0 };
        p.iter()
            .zip(f)
            .fold(rest, |m, (&p, &f)| m.max(f.abs() + local_sound_speed(&self.eos, p)))
    }

    fn cfl_dt(&self, state: &FieldState, limit: usize, cfl: f64) -> f64 {
        let speed = self.max_speed(state, limit);
        if speed > 0.0 {
            cfl * self.h / speed
        } else {
            cfl * self.h
        }
    }

    fn max_gradient(&mut self, state: &FieldState, limit: usize) -> f64 {
        let len = (limit + 2).min(self.n);
        let mut best = 0.0f64;
        for (u, parity) in [(&state.p.samples, Parity::Even), (&state.f.samples, Parity::Odd)] {
            ddr_slice(u, parity, self.h, Stencil::Fourth, len, &mut self.scratch);
            best = self.scratch[..len].iter().fold(best, |m, x| m.max(x.abs()));
        }
        best
    }

    fn is_finite(state: &FieldState, limit: usize) -> bool {
        [&state.p, &state.f, &state.g]
            .iter()
            .all(|x| x.samples[..limit].iter().all(|v| v.is_finite()))
    }
}

/// Integrates `initial` to `settings.t_end` or until blow-up.
pub fn run(initial: &FieldState, settings: &RunSettings) -> Result<RunOutcome> {
    let eos = settings.eos;
    eos.validate()?;
    if !(settings.t_end >= initial.t) {
        return Err(Error::Config(format!("t_end {} precedes the initial time", settings.t_end)));
    }
    if !(settings.cfl > 0.0 && settings.cfl < 1.0) {
        return Err(Error::Config(format!("cfl must lie in (0, 1), got {}", settings.cfl)));
    }
    initial.validate(&eos)?;
    let grid = initial.grid();
    let n = grid.n();
    let amp = amplitude(initial);
    let window_tol = settings.window_tol * amp;
    let mut stepper = Stepper::with_stencil(eos, n, settings.stencil)
        .with_dissipation(settings.dissipation)
        .with_window_tolerance(window_tol);
    let mut monitor = Monitor {
        eos,
        h: grid.h(),
        n,
        grad0: max_gradient(initial),
        scratch: vec![0.0; n],
    };
    let mut extent = initial.extent_above(window_tol);
    let support_tol = settings.support_tol * amp;

    let mut state = initial.clone();
    let mut ledger = EnergyLedger::new(settings.order);
    let mut history = Vec::new();
    let mut snapshots = Vec::new();
    let events = event_times(settings);
    let mut next_event = events.iter().position(|&t| t >= state.t).unwrap_or(events.len());
    let mut steps = 0usize;

    let mut record = |state: &FieldState, ledger: &mut EnergyLedger, history: &mut Vec<(f64, f64)>| -> Result<()> {
        if is_diagnostic_time(state.t, settings) {
            ledger.push(evaluate_row(state, &eos, settings.order)?)?;
            history.push((state.t, max_gradient(state)));
        }
        if settings.snapshot_times.contains(&state.t) {
            snapshots.push(state.clone());
        }
        Ok(())
    };

    let finish = |status: RunStatus,
                  state: FieldState,
                  ledger: EnergyLedger,
                  history: Vec<(f64, f64)>,
                  snapshots: Vec<FieldState>,
                  steps: usize,
                  message: Option<String>| {
        info!("run finished: {} at t = {} after {steps} steps", status.as_str(), state.t);
        RunOutcome {
            status,
            t_end: state.t,
            blowup_time: (status == RunStatus::BlewUp).then_some(state.t),
            max_gradient_history: history,
            ledger,
            snapshots,
            final_state: state,
            steps,
            message,
        }
    };

    if next_event < events.len() && events[next_event] == state.t {
        record(&state, &mut ledger, &mut history)?;
        next_event += 1;
    }

    while state.t < settings.t_end {
        if settings.deadline.is_some_and(|d| steps.is_multiple_of(64) && Instant::now() >= d) {
            let msg = format!("wall-clock budget exhausted at t = {}", state.t);
            return Ok(finish(RunStatus::Aborted, state, ledger, history, snapshots, steps, Some(msg)));
        }
        let limit = (extent + WINDOW_PAD).min(n);
        let dt_cfl = monitor.cfl_dt(&state, limit, settings.cfl);
        if dt_cfl < settings.thresholds.dt_floor_factor * grid.h() {
            let msg = format!("step {dt_cfl:e} below floor");
            return Ok(finish(RunStatus::BlewUp, state, ledger, history, snapshots, steps, Some(msg)));
        }
        let target = events.get(next_event).copied().unwrap_or(settings.t_end);
        let clamped = state.t + dt_cfl >= target;
        let dt = if clamped { target - state.t } else { dt_cfl };
        if let Err(e) = stepper.step_with_extent(&mut state, dt, extent) {
            let msg = e.to_string();
            return Ok(finish(RunStatus::BlewUp, state, ledger, history, snapshots, steps, Some(msg)));
        }
        steps += 1;
        if clamped {
            state.t = target;
        }
        // nothing at or past `limit` changed
        if !Monitor::is_finite(&state, limit) {
            let msg = "non-finite values".to_string();
            return Ok(finish(RunStatus::BlewUp, state, ledger, history, snapshots, steps, Some(msg)));
        }
        if let Err(e) = check_positivity(&eos, &grid, state.t, &state.p.samples, limit) {
            let msg = e.to_string();
            return Ok(finish(RunStatus::BlewUp, state, ledger, history, snapshots, steps, Some(msg)));
        }
        let grad = monitor.max_gradient(&state, limit);
        if grad > settings.thresholds.gradient_factor * (monitor.grad0 + 1.0) {
            let msg = format!("blow-up criterion met, max gradient {grad:e}");
            return Ok(finish(RunStatus::BlewUp, state, ledger, history, snapshots, steps, Some(msg)));
        }
        extent = state.extent_above_within(window_tol, limit);
        let support = state.extent_above_within(support_tol, limit);
        if support + SUPPORT_MARGIN > n {
            let msg = format!(
                "perturbation reached r = {:.6} within {SUPPORT_MARGIN} cells of r_max = {}",
                grid.r(support.saturating_sub(1)),
                grid.r_max()
            );
            return Ok(finish(RunStatus::Aborted, state, ledger, history, snapshots, steps, Some(msg)));
        }
        if clamped {
            record(&state, &mut ledger, &mut history)?;
            next_event += 1;
            debug!("t = {:.4}, steps = {steps}, extent = {extent}", state.t);
        }
    }
    Ok(finish(RunStatus::Completed, state, ledger, history, snapshots, steps, None))
}
