//! Flat `key = value` configuration.
//!
//! One pair per line; `#` starts a comment. Unknown keys and duplicate keys
//! are rejected. Serializing a parsed config and parsing it again yields the
//! same config.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::dynamics::{BlowupThresholds, RunSettings, DEFAULT_DISSIPATION};
use crate::eos::EosSpec;
use crate::error::{Error, Result};
use crate::experiments::{Profile, ScenarioSpec, SweepOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Study {
    Run,
    Sweep,
    Decay,
    Converge,
    Verify,
}

impl Study {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Run => "run",
            Self::Sweep => "sweep",
            Self::Decay => "decay",
            Self::Converge => "converge",
            Self::Verify => "verify",
        }
    }
}

impl FromStr for Study {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "run" => Ok(Self::Run),
            "sweep" => Ok(Self::Sweep),
            "decay" => Ok(Self::Decay),
            "converge" => Ok(Self::Converge),
            "verify" => Ok(Self::Verify),
            other => Err(format!("unknown study `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EosKind {
    Chaplygin,
    Polytropic,
}

/// Parsed configuration for one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub eos: EosSpec,
    /// Absent until supplied; single-trajectory studies require it.
    pub epsilon: Option<f64>,
    pub rho_profile: Profile,
    pub f_profile: Profile,
    pub g_profile: Profile,
    pub seed: u64,
    pub n: usize,
    pub r_max: f64,
    pub t_end: f64,
    pub cfl: f64,
    pub cadence: f64,
    pub dissipation: f64,
    pub order: usize,
    pub thresholds: BlowupThresholds,
    pub snapshot_times: Vec<f64>,
    pub out_dir: PathBuf,
    pub study: Study,
    /// Sweep amplitudes.
    pub epsilons: Vec<f64>,
    /// Initial guess of `eps^2 T` used to size sweep horizons.
    pub horizon_constant: f64,
    /// Decay-fit window; `None` means `[20, 0.9 t_end]`.
    pub fit_window: Option<(f64, f64)>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            eos: EosSpec::default(),
            epsilon: None,
            rho_profile: Profile::Bump,
            f_profile: Profile::Bump,
            g_profile: Profile::Bump,
            seed: 0,
            n: 8192,
            r_max: 12.0,
            t_end: 10.0,
            cfl: 0.4,
            cadence: 0.1,
            dissipation: DEFAULT_DISSIPATION,
            order: 2,
            thresholds: BlowupThresholds::default(),
            snapshot_times: Vec::new(),
            out_dir: PathBuf::from("out"),
            study: Study::Run,
            epsilons: Vec::new(),
            horizon_constant: SweepOptions::default().horizon_constant,
            fit_window: None,
        }
    }
}

impl SimConfig {
    /// Scenario of a single trajectory; needs `epsilon`.
    pub fn scenario(&self) -> Result<ScenarioSpec> {
        let epsilon = self
            .epsilon
            .ok_or_else(|| Error::Config("scenario incomplete: `epsilon` is required".into()))?;
        self.scenario_with(epsilon)
    }

    pub fn scenario_with(&self, epsilon: f64) -> Result<ScenarioSpec> {
        let spec = ScenarioSpec {
            eos: self.eos,
            epsilon,
            rho_profile: self.rho_profile,
            f_profile: self.f_profile,
            g_profile: self.g_profile,
            seed: self.seed,
            n: self.n,
            r_max: self.r_max,
            t_end: self.t_end,
            cfl: self.cfl,
            cadence: self.cadence,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Run controls derived from this config for a given scenario.
    pub fn run_settings(&self, scenario: &ScenarioSpec) -> RunSettings {
        let mut s = RunSettings::new(scenario.eos, scenario.t_end);
        s.cfl = scenario.cfl;
        s.cadence = scenario.cadence;
        s.order = self.order;
        s.thresholds = self.thresholds;
        s.snapshot_times = self.snapshot_times.clone();
        s.dissipation = self.dissipation;
        s
    }

    pub fn fit_window_for(&self, t_end: f64) -> (f64, f64) {
        self.fit_window.unwrap_or((20.0, 0.9 * t_end))
    }

    pub fn validate(&self) -> Result<()> {
        self.eos.validate()?;
        if let Some(eps) = self.epsilon {
            if !(eps >= 0.0 && eps.is_finite()) {
                return Err(Error::Config(format!("epsilon must be a nonnegative number, got {eps}")));
            }
        }
        if self.epsilons.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(Error::Config("sweep epsilons must be positive".into()));
        }
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(Error::Config(format!("cfl must lie in (0, 1), got {}", self.cfl)));
        }
        if !(self.t_end > 0.0) || !(self.r_max > 0.0) || self.n == 0 {
            return Err(Error::Config("t_end, r_max and n must be positive".into()));
        }
        if !(self.cadence >= 0.0) {
            return Err(Error::Config("cadence must be nonnegative".into()));
        }
        if let Some(t) = self.snapshot_times.iter().find(|&&t| !(0.0..=self.t_end).contains(&t)) {
            return Err(Error::Config(format!("snapshot time {t} outside [0, {}]", self.t_end)));
        }
        if !(self.thresholds.gradient_factor > 0.0) || !(self.thresholds.dt_floor_factor > 0.0) {
            return Err(Error::Config("blow-up thresholds must be positive".into()));
        }
        if !(self.horizon_constant > 0.0) {
            return Err(Error::Config("horizon_constant must be positive".into()));
        }
        Ok(())
    }
}

fn parse_value<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("invalid value `{value}` for `{key}`"),
    })
}

fn parse_list(line: usize, key: &str, value: &str) -> Result<Vec<f64>> {
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|v| parse_value(line, key, v.trim())).collect()
}

const KEYS: [&str; 27] = [
    "eos",
    "p0",
    "b",
    "gamma",
    "a",
    "epsilon",
    "rho_profile",
    "f_profile",
    "g_profile",
    "seed",
    "n",
    "r_max",
    "t_end",
    "cfl",
    "cadence",
    "dissipation",
    "order",
    "gradient_factor",
    "dt_floor_factor",
    "snapshot_times",
    "out_dir",
    "study",
    "epsilons",
    "horizon_constant",
    "fit_t_lo",
    "fit_t_hi",
    "r0",
];

/// Parses configuration text, applying defaults for absent keys.
pub fn parse_config(text: &str) -> Result<SimConfig> {
    let mut pairs: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
            line,
            msg: format!("expected `key = value`, found `{content}`"),
        })?;
        let key = key.trim();
        let value = value.trim();
        if !KEYS.contains(&key) || key == "r0" {
            if key == "r0" {
                return Err(Error::Parse {
                    line,
                    msg: "the support radius `r0` is fixed at 1/8".into(),
                });
            }
            return Err(Error::Parse {
                line,
                msg: format!("unknown key `{key}`"),
            });
        }
        if pairs.insert(key, (line, value)).is_some() {
            return Err(Error::Parse {
                line,
                msg: format!("duplicate key `{key}`"),
            });
        }
    }

    let mut cfg = SimConfig::default();
    let get = |k: &str| pairs.get(k).copied();

    let kind = match get("eos") {
        None => EosKind::Chaplygin,
        Some((_, "chaplygin")) => EosKind::Chaplygin,
        Some((_, "polytropic")) => EosKind::Polytropic,
        Some((line, other)) => {
            return Err(Error::Parse {
                line,
                msg: format!("unknown eos `{other}`"),
            })
        }
    };
    cfg.eos = match kind {
        EosKind::Chaplygin => {
            for k in ["gamma", "a"] {
                if let Some((line, _)) = get(k) {
                    return Err(Error::Parse {
                        line,
                        msg: format!("`{k}` applies to polytropic gases only"),
                    });
                }
            }
            let p0 = get("p0").map(|(l, v)| parse_value(l, "p0", v)).transpose()?.unwrap_or(2.0);
            let b = get("b").map(|(l, v)| parse_value(l, "b", v)).transpose()?.unwrap_or(1.0);
            EosSpec::Chaplygin { p0, b }
        }
        EosKind::Polytropic => {
            for k in ["p0", "b"] {
                if let Some((line, _)) = get(k) {
                    return Err(Error::Parse {
                        line,
                        msg: format!("`{k}` applies to Chaplygin gases only"),
                    });
                }
            }
            let gamma: f64 = get("gamma").map(|(l, v)| parse_value(l, "gamma", v)).transpose()?.unwrap_or(2.0);
            let a = get("a").map(|(l, v)| parse_value(l, "a", v)).transpose()?.unwrap_or(1.0 / gamma);
            EosSpec::Polytropic { a, gamma }
        }
    };

    macro_rules! set {
        ($key:literal, $field:expr) => {
            if let Some((line, v)) = get($key) {
                $field = parse_value(line, $key, v)?;
            }
        };
    }
    if let Some((line, v)) = get("epsilon") {
        cfg.epsilon = Some(parse_value(line, "epsilon", v)?);
    }
    set!("rho_profile", cfg.rho_profile);
    set!("f_profile", cfg.f_profile);
    set!("g_profile", cfg.g_profile);
    set!("seed", cfg.seed);
    set!("n", cfg.n);
    set!("r_max", cfg.r_max);
    set!("t_end", cfg.t_end);
    set!("cfl", cfg.cfl);
    set!("cadence", cfg.cadence);
    set!("dissipation", cfg.dissipation);
    set!("order", cfg.order);
    set!("gradient_factor", cfg.thresholds.gradient_factor);
    set!("dt_floor_factor", cfg.thresholds.dt_floor_factor);
    set!("study", cfg.study);
    set!("horizon_constant", cfg.horizon_constant);
    if let Some((_, v)) = get("out_dir") {
        cfg.out_dir = PathBuf::from(v);
    }
    if let Some((line, v)) = get("snapshot_times") {
        cfg.snapshot_times = parse_list(line, "snapshot_times", v)?;
    }
    if let Some((line, v)) = get("epsilons") {
        cfg.epsilons = parse_list(line, "epsilons", v)?;
    }
    match (get("fit_t_lo"), get("fit_t_hi")) {
        (None, None) => {}
        (Some((l1, lo)), Some((l2, hi))) => {
            cfg.fit_window = Some((parse_value(l1, "fit_t_lo", lo)?, parse_value(l2, "fit_t_hi", hi)?));
        }
        (Some((line, _)), None) | (None, Some((line, _))) => {
            return Err(Error::Parse {
                line,
                msg: "`fit_t_lo` and `fit_t_hi` must be given together".into(),
            })
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(", ")
}

/// Serializes in the grammar accepted by [`parse_config`]; floats use the
/// shortest representation that parses back to the same value.
impl fmt::Display for SimConfig {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.eos {
            EosSpec::Chaplygin { p0, b } => {
                writeln!(out, "eos = chaplygin")?;
                writeln!(out, "p0 = {p0:?}")?;
                writeln!(out, "b = {b:?}")?;
            }
            EosSpec::Polytropic { a, gamma } => {
                writeln!(out, "eos = polytropic")?;
                writeln!(out, "gamma = {gamma:?}")?;
                writeln!(out, "a = {a:?}")?;
            }
        }
        if let Some(eps) = self.epsilon {
            writeln!(out, "epsilon = {eps:?}")?;
        }
        writeln!(out, "rho_profile = {}", self.rho_profile)?;
        writeln!(out, "f_profile = {}", self.f_profile)?;
        writeln!(out, "g_profile = {}", self.g_profile)?;
        writeln!(out, "seed = {}", self.seed)?;
        writeln!(out, "n = {}", self.n)?;
        writeln!(out, "r_max = {:?}", self.r_max)?;
        writeln!(out, "t_end = {:?}", self.t_end)?;
        writeln!(out, "cfl = {:?}", self.cfl)?;
        writeln!(out, "cadence = {:?}", self.cadence)?;
        writeln!(out, "dissipation = {:?}", self.dissipation)?;
        writeln!(out, "order = {}", self.order)?;
        writeln!(out, "gradient_factor = {:?}", self.thresholds.gradient_factor)?;
        writeln!(out, "dt_floor_factor = {:?}", self.thresholds.dt_floor_factor)?;
        writeln!(out, "snapshot_times = {}", join(&self.snapshot_times))?;
        writeln!(out, "out_dir = {}", self.out_dir.display())?;
        writeln!(out, "study = {}", self.study.as_str())?;
        writeln!(out, "epsilons = {}", join(&self.epsilons))?;
        writeln!(out, "horizon_constant = {:?}", self.horizon_constant)?;
        if let Some((lo, hi)) = self.fit_window {
            writeln!(out, "fit_t_lo = {lo:?}")?;
            writeln!(out, "fit_t_hi = {hi:?}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eos_alone_gives_defaults_and_needs_epsilon() {
        let cfg = parse_config("eos = chaplygin").unwrap();
        assert_eq!(cfg.eos, EosSpec::Chaplygin { p0: 2.0, b: 1.0 });
        assert_eq!(cfg.cfl, 0.4);
        assert_eq!(cfg.thresholds.gradient_factor, 100.0);
        assert_eq!(cfg.order, 2);
        assert!(matches!(cfg.scenario(), Err(Error::Config(m)) if m.contains("epsilon")));
    }

    #[test]
    fn polytropic_defaults_to_reciprocal_gamma() {
        let cfg = parse_config("gamma = 2\neos = polytropic\nepsilon = 0.05").unwrap();
        assert_eq!(cfg.eos, EosSpec::Polytropic { a: 0.5, gamma: 2.0 });
        assert_eq!(cfg.epsilon, Some(0.05));
    }

    #[test]
    fn negative_epsilon_is_rejected() {
        assert!(matches!(parse_config("epsilon = -1"), Err(Error::Config(_))));
    }

    #[test]
    fn unknown_key_is_named() {
        let err = parse_config("eos = chaplygin\nfoo = 3").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("foo") && msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn type_mismatch_reports_line() {
        match parse_config("# header\n\nn = lots").unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn comments_duplicates_and_lists() {
        let cfg = parse_config("epsilons = 0.08, 0.04 # sweep\nsnapshot_times = 1, 2.5\nt_end = 3").unwrap();
        assert_eq!(cfg.epsilons, vec![0.08, 0.04]);
        assert_eq!(cfg.snapshot_times, vec![1.0, 2.5]);
        assert!(parse_config("n = 4\nn = 5").is_err());
        assert!(parse_config("snapshot_times = 11").is_err());
        assert!(parse_config("eos = chaplygin\ngamma = 2").is_err());
        assert!(parse_config("fit_t_lo = 3").is_err());
    }

    #[test]
    fn serialization_round_trips() {
        let text = "eos = polytropic\ngamma = 1.4\nepsilon = 0.1\nsnapshot_times = 0.1, 0.7\nfit_t_lo = 2\nfit_t_hi = 9";
        let cfg = parse_config(text).unwrap();
        let again = parse_config(&cfg.to_string()).unwrap();
        assert_eq!(cfg, again);
    }
}
