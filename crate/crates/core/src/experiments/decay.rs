//! Long Chaplygin runs and power-law fits of the decay probes.

use log::warn;

use super::{simulate, ScenarioSpec};
use crate::analysis::fit::{fit_decay, DecayFit};
use crate::analysis::ledger::EnergyLedger;
use crate::dynamics::{RunSettings, RunStatus};
use crate::error::{Error, Result};

pub const MIN_DECAY_HORIZON: f64 = 200.0;
pub const MAX_DECAY_CADENCE: f64 = 1.0;

/// Probes with their expected exponents; `None` marks a probe that should
/// stay bounded rather than decay.
pub const PROBE_TARGETS: [(&str, Option<f64>); 6] = [
    ("near_cone", Some(-1.5)),
    ("cone_weighted", None),
    ("interior_dt_vtilde", Some(-1.99)),
    ("interior_div_f", Some(-1.99)),
    ("interior_f", Some(-1.0)),
    ("dt_big_g", Some(-1.99)),
];

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeFit {
    pub name: &'static str,
    pub target: Option<f64>,
    pub fit: Option<DecayFit>,
    /// Largest value inside the fit window.
    pub window_max: f64,
    /// Why the fit is absent.
    pub note: Option<String>,
}

#[derive(Debug, Clone)]
pub struct DecayReport {
    pub status: RunStatus,
    pub reached: f64,
    pub blowup_time: Option<f64>,
    pub message: Option<String>,
    pub window: (f64, f64),
    pub fits: Vec<ProbeFit>,
    pub ledger: EnergyLedger,
}

impl DecayReport {
    pub fn fit(&self, name: &str) -> Option<&ProbeFit> {
        self.fits.iter().find(|f| f.name == name)
    }

    /// Ledger value of `column` at the row closest to `t`.
    pub fn value_at(&self, column: &str, t: f64) -> Option<f64> {
        let series = self.ledger.series(column)?;
        series
            .into_iter()
            .min_by(|a, b| (a.0 - t).abs().total_cmp(&(b.0 - t).abs()))
            .map(|p| p.1)
    }
}

/// Fits every probe of `ledger` over `window`.
pub fn decay_fits(ledger: &EnergyLedger, window: (f64, f64)) -> Vec<ProbeFit> {
    PROBE_TARGETS
        .iter()
        .map(|&(name, target)| {
            let series = ledger.series(name).unwrap_or_default();
            let window_max = series
                .iter()
                .filter(|p| p.0 >= window.0 && p.0 <= window.1)
                .fold(0.0f64, |m, p| m.max(p.1));
            let (fit, note) = if series.iter().all(|p| p.1 == 0.0) {
                (None, Some("identically zero".to_string()))
            } else {
                match fit_decay(&series, window) {
                    Ok(fit) => (Some(fit), None),
                    Err(e) => {
                        warn!("probe {name}: {e}");
                        (None, Some(e.to_string()))
                    }
                }
            };
            ProbeFit {
                name,
                target,
                fit,
                window_max,
                note,
            }
        })
        .collect()
}

/// Runs a Chaplygin scenario to at least `t = 200` and fits the probes over
/// `window`, by default `[20, 0.9 t_end]`. Blow-up ends the run early and is
/// reported in the status rather than as an error.
pub fn decay_study(spec: &ScenarioSpec, settings: &RunSettings, window: Option<(f64, f64)>) -> Result<DecayReport> {
    if !spec.eos.is_chaplygin() {
        return Err(Error::Usage("the decay study needs a Chaplygin gas".into()));
    }
    if settings.t_end < MIN_DECAY_HORIZON {
        return Err(Error::Usage(format!(
            "the decay study needs t_end >= {MIN_DECAY_HORIZON}, got {}",
            settings.t_end
        )));
    }
    if !(settings.cadence > 0.0 && settings.cadence <= MAX_DECAY_CADENCE) {
        return Err(Error::Usage(format!(
            "the decay study needs a cadence in (0, {MAX_DECAY_CADENCE}], got {}",
            settings.cadence
        )));
    }
    let window = window.unwrap_or((20.0, 0.9 * settings.t_end));
    let (_, outcome) = simulate(spec, settings)?;
    match outcome.status {
        RunStatus::Aborted => {
            return Err(Error::Config(format!(
                "decay run aborted: {}",
                outcome.message.unwrap_or_default()
            )))
        }
        RunStatus::BlewUp => warn!(
            "Chaplygin decay run blew up at t = {}: {}",
            outcome.t_end,
            outcome.message.as_deref().unwrap_or("")
        ),
        RunStatus::Completed => {}
    }
    Ok(DecayReport {
        status: outcome.status,
        reached: outcome.t_end,
        blowup_time: outcome.blowup_time,
        message: outcome.message,
        window,
        fits: decay_fits(&outcome.ledger, window),
        ledger: outcome.ledger,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::ledger::LedgerRow;
    use crate::eos::EosSpec;

    fn synthetic_ledger() -> EnergyLedger {
        let mut ledger = EnergyLedger::new(1);
        for i in 1..=100 {
            let t = 2.0 * i as f64;
            ledger
                .push(LedgerRow {
                    t,
                    e: vec![1.0, 1.0],
                    x: vec![1.0],
                    y: vec![1.0],
                    w0: 0.0,
                    mass: 0.0,
                    rg_sup: 0.0,
                    w_sup: 0.0,
                    ghost_residual: 0.0,
                    probes: [t.powf(-1.5), 0.3, t.powi(-2), t.powi(-2), 1.0 / t, 0.0],
                })
                .unwrap();
        }
        ledger
    }

    #[test]
    fn fits_recover_exponents() {
        let fits = decay_fits(&synthetic_ledger(), (20.0, 180.0));
        let exp = |name: &str| fits.iter().find(|f| f.name == name).unwrap().fit.unwrap().exponent;
        assert!((exp("near_cone") + 1.5).abs() < 1e-12);
        assert!(exp("cone_weighted").abs() < 1e-12);
        assert!((exp("interior_f") + 1.0).abs() < 1e-12);
        let g = fits.iter().find(|f| f.name == "dt_big_g").unwrap();
        assert!(g.fit.is_none());
        assert_eq!(g.note.as_deref(), Some("identically zero"));
        assert_eq!(fits[1].window_max, 0.3);
    }

    #[test]
    fn rest_state_fits_are_skipped() {
        let spec = ScenarioSpec::bump(EosSpec::default(), 0.0, 128, 0.25, 200.0);
        let mut settings = RunSettings::new(spec.eos, 200.0);
        settings.cadence = 1.0;
        let report = decay_study(&spec, &settings, None).unwrap();
        assert_eq!(report.status, RunStatus::Completed);
        assert_eq!(report.ledger.len(), 201);
        assert_eq!(report.window, (20.0, 180.0));
        assert!(report.fits.iter().all(|f| f.fit.is_none() && f.window_max == 0.0));
    }

    #[test]
    fn preconditions() {
        let spec = ScenarioSpec::bump(EosSpec::polytropic(2.0), 0.02, 128, 0.25, 200.0);
        let mut settings = RunSettings::new(spec.eos, 200.0);
        settings.cadence = 1.0;
        assert!(matches!(decay_study(&spec, &settings, None), Err(Error::Usage(_))));
        let spec = ScenarioSpec::bump(EosSpec::default(), 0.02, 128, 0.25, 10.0);
        settings.eos = spec.eos;
        settings.t_end = 10.0;
        assert!(matches!(decay_study(&spec, &settings, None), Err(Error::Usage(_))));
        settings.t_end = 200.0;
        settings.cadence = 2.0;
        assert!(matches!(decay_study(&spec, &settings, None), Err(Error::Usage(_))));
    }
}
