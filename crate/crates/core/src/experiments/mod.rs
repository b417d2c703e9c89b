//! Scenario construction and the headline studies.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::audit::{conservation_audit, DriftReport};
use crate::analysis::energy::{data_size_epsilon, MAX_DATA_ORDER};
use crate::dynamics::{max_signal_speed, run, FieldState, RunOutcome, RunSettings};
use crate::eos::{dot_c, EosSpec};
use crate::error::{Error, Result};
use crate::grid::{make_grid, Parity, RadialField, RadialGrid};

mod convergence;
mod decay;
mod sweep;
mod verify;

pub use convergence::{convergence_study, convergence_study_with, restrict, ConvergenceReport, FieldOrder, ObservedOrder};
pub use decay::{decay_fits, decay_study, DecayReport, ProbeFit, PROBE_TARGETS};
pub use sweep::{lifespan_sweep, summarize_lifespans, LifespanSummary, SweepOptions, SweepReport, SweepRow};
pub use verify::{invariant_suite, Check};

/// Radius containing the support of every initial profile.
pub const SUPPORT_RADIUS: f64 = 0.125;

/// Minimum number of cells across the initial support.
pub const MIN_SUPPORT_CELLS: f64 = 64.0;

/// Headroom factor on the distance travelled at the initial signal speed.
pub const HORIZON_FACTOR: f64 = 1.1;

/// `b(r) = exp(-1/(1 - (r/r0)^2))` inside the support, 0 outside.
pub fn bump(r: f64) -> f64 {
    let x = r / SUPPORT_RADIUS;
    if x.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - x * x)).exp()
    }
}

/// Shape of one initial profile. Odd fields carry an extra factor `r/r0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    Bump,
    Zero,
    /// Bump modulated by a seeded, even, smooth factor.
    Perturbed,
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Bump => "bump",
            Self::Zero => "zero",
            Self::Perturbed => "perturbed",
        })
    }
}

impl FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "bump" => Ok(Self::Bump),
            "zero" => Ok(Self::Zero),
            "perturbed" => Ok(Self::Perturbed),
            other => Err(format!("unknown profile `{other}`")),
        }
    }
}

/// Cosine modulation `1 + sum_k a_k cos(k pi r / r0)` with `|a_k| <= 0.2`.
fn modulation(seed: u64, stream: u64) -> [f64; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    [rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2)]
}

fn profile_value(profile: Profile, r: f64, odd: bool, seed: u64, stream: u64) -> f64 {
    let base = match profile {
        Profile::Zero => return 0.0,
        Profile::Bump => bump(r),
        Profile::Perturbed => {
            let a = modulation(seed, stream);
            let x = std::f64::consts::PI * r / SUPPORT_RADIUS;
            bump(r) * (1.0 + a[0] * x.cos() + a[1] * (2.0 * x).cos() + a[2] * (3.0 * x).cos())
        }
    };
    if odd {
        base * r / SUPPORT_RADIUS
    } else {
        base
    }
}

/// Everything needed to reproduce one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub eos: EosSpec,
    pub epsilon: f64,
    pub rho_profile: Profile,
    pub f_profile: Profile,
    pub g_profile: Profile,
    pub seed: u64,
    pub n: usize,
    pub r_max: f64,
    pub t_end: f64,
    pub cfl: f64,
    pub cadence: f64,
}

impl ScenarioSpec {
    /// Bump data for all three fields.
    pub fn bump(eos: EosSpec, epsilon: f64, n: usize, r_max: f64, t_end: f64) -> Self {
        Self {
            eos,
            epsilon,
            rho_profile: Profile::Bump,
            f_profile: Profile::Bump,
            g_profile: Profile::Bump,
            seed: 0,
            n,
            r_max,
            t_end,
            cfl: 0.4,
            cadence: 0.1,
        }
    }

    pub fn irrotational(mut self) -> Self {
        self.g_profile = Profile::Zero;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.eos.validate()?;
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon must be nonnegative, got {}", self.epsilon)));
        }
        if !(self.r_max > SUPPORT_RADIUS) || !self.r_max.is_finite() {
            return Err(Error::Config(format!("r_max = {} must exceed the support radius", self.r_max)));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::Config(format!("t_end must be positive, got {}", self.t_end)));
        }
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(Error::Config(format!("cfl must lie in (0, 1), got {}", self.cfl)));
        }
        if !(self.cadence >= 0.0) {
            return Err(Error::Config("cadence must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<RadialGrid> {
        make_grid(self.r_max, self.n)
    }

    pub fn label(&self) -> String {
        format!("{}_eps{}_n{}", self.eos.descriptor(), self.epsilon, self.n)
    }
}

/// Initial state with the density it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub state: FieldState,
    pub rho0: RadialField,
    /// Data size truncated at the highest supported order.
    pub data_size: f64,
}

/// Builds `rho0 = 1 + eps b`, `f0 = g0 = eps (r/r0) b` (or the configured
/// profiles) and the evolved variable `p` for the scenario's gas.
pub fn make_initial_data(spec: &ScenarioSpec) -> Result<InitialData> {
    spec.validate()?;
    let grid = spec.grid()?;
    let cells = SUPPORT_RADIUS / grid.h();
    if cells < MIN_SUPPORT_CELLS {
        return Err(Error::Config(format!(
            "support radius resolved by {cells:.1} cells, need {MIN_SUPPORT_CELLS}: raise n or lower r_max"
        )));
    }
    let eps = spec.epsilon;
    let rho0 = grid.sample(Parity::Even, |r| 1.0 + eps * profile_value(spec.rho_profile, r, false, spec.seed, 0));
    let f = grid.sample(Parity::Odd, |r| eps * profile_value(spec.f_profile, r, true, spec.seed, 1));
    let g = grid.sample(Parity::Odd, |r| eps * profile_value(spec.g_profile, r, true, spec.seed, 2));
    let p = match spec.eos {
        EosSpec::Chaplygin { .. } => rho0.map(|rho| 1.0 / rho - 1.0),
        EosSpec::Polytropic { .. } => {
            let samples = rho0
                .samples
                .iter()
                .map(|&rho| dot_c(&spec.eos, rho))
                .collect::<Result<Vec<_>>>()?;
            RadialField::new(grid, samples, Parity::Even)?
        }
    };
    let state = FieldState { t: 0.0, p, f, g };
    state.validate(&spec.eos)?;
    let data_size = data_size_epsilon(&state, &rho0, MAX_DATA_ORDER)?;
    Ok(InitialData { state, rho0, data_size })
}

/// Smallest `r_max` admitting a run of the scenario's length; zero for the
/// rest state, which never leaves its support.
pub fn required_r_max(initial: &FieldState, eos: &EosSpec, t_end: f64) -> f64 {
    if initial.nonzero_extent() == 0 {
        return 0.0;
    }
    let support = initial.nonzero_extent() as f64 * initial.grid().h();
    support + HORIZON_FACTOR * t_end * max_signal_speed(initial, eos)
}

/// Builds the initial data and runs it with `settings`, after checking that
/// the grid is wide enough for the requested horizon.
pub fn simulate(spec: &ScenarioSpec, settings: &RunSettings) -> Result<(InitialData, RunOutcome)> {
    let data = make_initial_data(spec)?;
    let need = required_r_max(&data.state, &spec.eos, settings.t_end);
    if spec.r_max < need {
        return Err(Error::Config(format!(
            "r_max = {} is too small for t_end = {}: need at least {need:.4}",
            spec.r_max, settings.t_end
        )));
    }
    let outcome = run(&data.state, settings)?;
    Ok((data, outcome))
}

/// Drift report over a recorded trajectory, starting from the initial state.
pub fn trajectory_drift(initial: &FieldState, outcome: &RunOutcome, eos: &EosSpec) -> Result<DriftReport> {
    let mut states = Vec::with_capacity(outcome.snapshots.len() + 2);
    states.push(initial.clone());
    states.extend(outcome.snapshots.iter().filter(|s| s.t > initial.t).cloned());
    if states.last().map(|s| s.t) != Some(outcome.final_state.t) {
        states.push(outcome.final_state.clone());
    }
    conservation_audit(&states, eos)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::energy::vorticity_w;
    use crate::analysis::table::build_derivative_table;

    fn spec(eps: f64) -> ScenarioSpec {
        ScenarioSpec::bump(EosSpec::default(), eps, 256, 0.5, 0.2)
    }

    #[test]
    fn zero_amplitude_is_rest() {
        let data = make_initial_data(&spec(0.0)).unwrap();
        assert_eq!(data.state, FieldState::rest(data.state.grid()));
        assert_eq!(data.data_size, 0.0);
    }

    #[test]
    fn profiles_vanish_outside_support() {
        let data = make_initial_data(&spec(0.1)).unwrap();
        let grid = data.state.grid();
        for j in 0..grid.n() {
            if grid.r(j) >= SUPPORT_RADIUS {
                assert_eq!(data.state.p.samples[j], 0.0);
                assert_eq!(data.state.f.samples[j], 0.0);
                assert_eq!(data.rho0.samples[j], 1.0);
            }
        }
        let j = grid.index_at_or_beyond(0.06);
        let r = grid.r(j);
        assert!((data.state.f.samples[j] - 0.1 * r / SUPPORT_RADIUS * bump(r)).abs() < 1e-16);
        assert!((data.state.p.samples[j] - (1.0 / (1.0 + 0.1 * bump(r)) - 1.0)).abs() < 1e-16);
    }

    #[test]
    fn data_size_is_homogeneous() {
        let one = make_initial_data(&spec(1.0).irrotational()).unwrap().data_size;
        let small = make_initial_data(&spec(0.02).irrotational()).unwrap().data_size;
        // rho0 - 1, f and g are linear in epsilon
        assert!((small - 0.02 * one).abs() <= 1e-13 * small, "{small} vs {}", 0.02 * one);
    }

    #[test]
    fn irrotational_variant_has_no_vorticity() {
        let data = make_initial_data(&spec(0.02).irrotational()).unwrap();
        assert!(data.state.g.samples.iter().all(|&x| x == 0.0));
        let table = build_derivative_table(&data.state, &EosSpec::default(), 0).unwrap();
        assert_eq!(vorticity_w(&table, 0).unwrap(), 0.0);
    }

    #[test]
    fn under_resolved_support_is_rejected() {
        let mut s = spec(0.05);
        s.n = 100;
        assert!(matches!(make_initial_data(&s), Err(Error::Config(m)) if m.contains("cells")));
    }

    #[test]
    fn polytropic_data_uses_sound_speed_variable() {
        let mut s = spec(0.05);
        s.eos = EosSpec::polytropic(2.0);
        let data = make_initial_data(&s).unwrap();
        let j = 10;
        let rho = data.rho0.samples[j];
        assert!((data.state.p.samples[j] - 2.0 * (rho.sqrt() - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn perturbed_profile_is_seeded() {
        let mut s = spec(0.05);
        s.rho_profile = Profile::Perturbed;
        let a = make_initial_data(&s).unwrap();
        let b = make_initial_data(&s).unwrap();
        assert_eq!(a, b);
        s.seed = 7;
        let c = make_initial_data(&s).unwrap();
        assert_ne!(a.rho0, c.rho0);
        assert!(c.rho0.samples[c.state.grid().index_at_or_beyond(SUPPORT_RADIUS)] == 1.0);
    }

    #[test]
    fn horizon_check_rejects_narrow_grids() {
        let mut s = spec(0.05);
        let settings = RunSettings::new(s.eos, 5.0);
        assert!(matches!(simulate(&s, &settings), Err(Error::Config(_))));
        s.t_end = 0.2;
        let settings = RunSettings::new(s.eos, 0.2);
        let (_, out) = simulate(&s, &settings).unwrap();
        assert_eq!(out.t_end, 0.2);
    }
}
