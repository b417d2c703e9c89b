//! Self-convergence on nested staggered grids.

use super::{make_initial_data, ScenarioSpec};
use crate::dynamics::{max_signal_speed, FieldState, Stepper, DEFAULT_DISSIPATION};
use crate::error::{Error, Result};
use crate::grid::{lp_norm, Norm, RadialField, RadialGrid, Stencil};

pub const MAX_CONVERGENCE_HORIZON: f64 = 1.0;
/// Extra margin on the initial signal speed when fixing the step count.
const SPEED_MARGIN: f64 = 1.25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObservedOrder {
    /// All differences vanish.
    Exact,
    /// One difference vanishes and the other does not.
    Undefined,
    Value(f64),
}

impl ObservedOrder {
    fn from_diffs(coarse: f64, fine: f64) -> Self {
        match (coarse == 0.0, fine == 0.0) {
            (true, true) => Self::Exact,
            (false, false) => Self::Value((coarse / fine).log2()),
            _ => Self::Undefined,
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Self::Value(x) => Some(x),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldOrder {
    pub field: &'static str,
    /// `(|u_n - u_2n|, |u_2n - u_4n|)` in `L^2` and `L^inf`.
    pub l2: (f64, f64),
    pub linf: (f64, f64),
    pub order_l2: ObservedOrder,
    pub order_linf: ObservedOrder,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub resolutions: [usize; 3],
    pub t_end: f64,
    pub steps: [usize; 3],
    pub fields: Vec<FieldOrder>,
}

impl ConvergenceReport {
    /// Smallest finite order over all fields and norms; `None` when every
    /// order is exact or undefined.
    pub fn min_order(&self) -> Option<f64> {
        self.fields
            .iter()
            .flat_map(|f| [f.order_l2.value(), f.order_linf.value()])
            .flatten()
            .reduce(f64::min)
    }

    pub fn is_exact(&self) -> bool {
        self.fields
            .iter()
            .all(|f| f.order_l2 == ObservedOrder::Exact && f.order_linf == ObservedOrder::Exact)
    }
}

/// Fourth-order interpolation of a field on `2n` nodes to the `n` coarse
/// nodes, each of which lies midway between two fine ones.
pub fn restrict(fine: &RadialField, coarse: &RadialGrid) -> Result<RadialField> {
    let n = coarse.n();
    if fine.len() != 2 * n || (fine.grid.r_max() - coarse.r_max()).abs() > 1e-12 * coarse.r_max() {
        return Err(Error::Config(format!(
            "grids of {} and {n} nodes do not nest",
            fine.len()
        )));
    }
    let u = &fine.samples;
    let sign = fine.parity.sign();
    let at = |i: isize| -> f64 {
        if i < 0 {
            sign * u[(-1 - i) as usize]
        } else {
            u.get(i as usize).copied().unwrap_or(0.0)
        }
    };
    let samples = (0..n as isize)
        .map(|j| (9.0 * (at(2 * j) + at(2 * j + 1)) - (at(2 * j - 1) + at(2 * j + 2))) / 16.0)
        .collect();
    RadialField::new(*coarse, samples, fine.parity)
}

fn check_nesting(resolutions: &[usize]) -> Result<[usize; 3]> {
    match *resolutions {
        [a, b, c] if a > 0 && b == 2 * a && c == 2 * b => Ok([a, b, c]),
        _ => Err(Error::Config(format!(
            "convergence needs nested resolutions (n, 2n, 4n), got {resolutions:?}"
        ))),
    }
}

fn evolve(spec: &ScenarioSpec, n: usize, steps: usize, stencil: Stencil, sigma: f64) -> Result<FieldState> {
    let mut level = spec.clone();
    level.n = n;
    let mut state = make_initial_data(&level)?.state;
    let dt = spec.t_end / steps as f64;
    let mut stepper = Stepper::with_stencil(spec.eos, n, stencil).with_dissipation(sigma);
    for _ in 0..steps {
        stepper.step(&mut state, dt)?;
    }
    Ok(state)
}

/// Evolves the scenario on `n`, `2n` and `4n` nodes to `spec.t_end` with
/// step counts in ratio 1:2:4 and measures the observed order per field.
pub fn convergence_study(spec: &ScenarioSpec, resolutions: &[usize], stencil: Stencil) -> Result<ConvergenceReport> {
    convergence_study_with(spec, resolutions, stencil, DEFAULT_DISSIPATION)
}

pub fn convergence_study_with(
    spec: &ScenarioSpec,
    resolutions: &[usize],
    stencil: Stencil,
    sigma: f64,
) -> Result<ConvergenceReport> {
    let levels = check_nesting(resolutions)?;
    if spec.t_end > MAX_CONVERGENCE_HORIZON {
        return Err(Error::Config(format!(
            "convergence runs are limited to t_end <= {MAX_CONVERGENCE_HORIZON}, got {}",
            spec.t_end
        )));
    }
    let mut coarse_spec = spec.clone();
    coarse_spec.n = levels[0];
    let coarse = make_initial_data(&coarse_spec)?;
    let h = coarse.state.grid().h();
    let speed = max_signal_speed(&coarse.state, &spec.eos) * SPEED_MARGIN;
    let base_steps = (spec.t_end * speed / (spec.cfl * h)).ceil().max(1.0) as usize;
    let steps = [base_steps, 2 * base_steps, 4 * base_steps];

    let states = levels
        .iter()
        .zip(steps)
        .map(|(&n, s)| evolve(spec, n, s, stencil, sigma))
        .collect::<Result<Vec<_>>>()?;

    let mut fields = Vec::new();
    for (name, pick) in [
        ("p", (|s: &FieldState| s.p.clone()) as fn(&FieldState) -> RadialField),
        ("f", |s: &FieldState| s.f.clone()),
        ("g", |s: &FieldState| s.g.clone()),
    ] {
        let u: Vec<RadialField> = states.iter().map(pick).collect();
        let d1 = u[0].sub(&restrict(&u[1], &u[0].grid)?);
        let d2 = u[1].sub(&restrict(&u[2], &u[1].grid)?);
        let l2 = (lp_norm(&d1, Norm::L2), lp_norm(&d2, Norm::L2));
        let linf = (d1.sup_norm(), d2.sup_norm());
        fields.push(FieldOrder {
            field: name,
            l2,
            linf,
            order_l2: ObservedOrder::from_diffs(l2.0, l2.1),
            order_linf: ObservedOrder::from_diffs(linf.0, linf.1),
        });
    }
    Ok(ConvergenceReport {
        resolutions: levels,
        t_end: spec.t_end,
        steps,
        fields,
    })
}
