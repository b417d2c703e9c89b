//! Pointwise transforms of a state: the G correction and `v = v_tilde + G`,
//! specific vorticity, and Riemann invariants of polytropic flow.

use crate::dynamics::{FieldState, POSITIVITY_FLOOR};
use crate::eos::{rho_from_dot_c, EosSpec};
use crate::error::{Error, Result};
use crate::grid::{div_radial, Parity, RadialField, RadialGrid};

/// Right-to-left cumulative trapezoid `int_{r_j}^inf integrand dr'`.
///
/// The integrand is taken to vanish past the last node, so the result is an
/// exact zero at every node from the start of the integrand's trailing zeros.
pub fn tail_integral(grid: &RadialGrid, integrand: &[f64]) -> Vec<f64> {
    let n = integrand.len();
    let h = grid.h();
    let mut out = vec![0.0; n];
    if n == 0 {
        return out;
    }
    // last half cell [r_{n-1}, r_max] closes against the rest-state zero
    out[n - 1] = 0.25 * h * integrand[n - 1];
    for j in (0..n - 1).rev() {
        out[j] = out[j + 1] + 0.5 * h * (integrand[j] + integrand[j + 1]);
    }
    out
}

fn require_chaplygin(eos: &EosSpec, what: &str) -> Result<()> {
    if eos.is_chaplygin() {
        Ok(())
    } else {
        Err(Error::Usage(format!("{what} is defined for Chaplygin states only")))
    }
}

fn check_density(state: &FieldState) -> Result<()> {
    for (j, &v) in state.p.samples.iter().enumerate() {
        if !(1.0 + v >= POSITIVITY_FLOOR) {
            return Err(Error::StateInvalid {
                t: state.t,
                r: state.grid().r(j),
                what: format!("1 + v = {:e}", 1.0 + v),
            });
        }
    }
    Ok(())
}

/// `G(r) = int_r^inf g^2 / ((1 + v) r') dr'`, the solution of
/// `(1 + v) G_r + g^2/r = 0` with `G(inf) = 0`.
pub fn compute_g(state: &FieldState, eos: &EosSpec) -> Result<RadialField> {
    require_chaplygin(eos, "G")?;
    check_density(state)?;
    let grid = state.grid();
    let integrand: Vec<f64> = (0..grid.n())
        .map(|j| {
            let g = state.g.samples[j];
            g * g / ((1.0 + state.p.samples[j]) * grid.r(j))
        })
        .collect();
    RadialField::new(grid, tail_integral(&grid, &integrand), Parity::Even)
}

/// Splits `v` into the decaying part `v_tilde = v - G` and `G`.
pub fn decompose_v(state: &FieldState, eos: &EosSpec) -> Result<(RadialField, RadialField)> {
    let big_g = compute_g(state, eos)?;
    let vt = state.p.sub(&big_g);
    Ok((vt, big_g))
}

/// Specific volume `1/rho` implied by the evolved variable.
pub(crate) fn specific_volume(eos: &EosSpec, p: f64) -> Result<f64> {
    match eos {
        EosSpec::Chaplygin { .. } => Ok(1.0 + p),
        EosSpec::Polytropic { .. } => Ok(1.0 / rho_from_dot_c(eos, p)?),
    }
}

/// Specific vorticity `w = curl u / rho = (1/rho)(g_r + g/r)`.
pub fn specific_vorticity(state: &FieldState, eos: &EosSpec) -> Result<RadialField> {
    state.validate(eos)?;
    let curl = div_radial(&state.g)?;
    let mut out = curl;
    for (o, &p) in out.samples.iter_mut().zip(&state.p.samples) {
        *o *= specific_volume(eos, p)?;
    }
    Ok(out)
}

/// Riemann invariants `Z_+ = f + c_dot`, `Z_- = f - c_dot` of a polytropic
/// state. They have no definite parity, so plain samples are returned.
pub fn riemann_invariants(state: &FieldState, eos: &EosSpec) -> Result<(Vec<f64>, Vec<f64>)> {
    if eos.is_chaplygin() {
        return Err(Error::Usage("Riemann invariants need a polytropic gas".into()));
    }
    let f = &state.f.samples;
    let c = &state.p.samples;
    let plus = f.iter().zip(c).map(|(a, b)| a + b).collect();
    let minus = f.iter().zip(c).map(|(a, b)| a - b).collect();
    Ok((plus, minus))
}

/// Mass excess `2 pi int (rho - 1) r dr`.
pub fn mass_excess(state: &FieldState, eos: &EosSpec) -> Result<f64> {
    let excess = state
        .p
        .samples
        .iter()
        .map(|&p| specific_volume(eos, p).map(|sv| 1.0 / sv - 1.0))
        .collect::<Result<Vec<_>>>()?;
    Ok(2.0 * std::f64::consts::PI * crate::grid::radial_moment(&state.grid(), &excess))
}

/// `max_r |r g|`.
pub fn angular_momentum_sup(state: &FieldState) -> f64 {
    state.g.times_r().sup_norm()
}
