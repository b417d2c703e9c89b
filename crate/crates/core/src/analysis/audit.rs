//! Audits of identities the continuous system satisfies exactly: the two
//! algebraic forms of the quadratic terms, the weighted energy identity at
//! order zero, and the transported quantities.

use crate::analysis::transforms::{angular_momentum_sup, mass_excess, specific_vorticity};
use crate::analysis::weights::ghost_weight;
use crate::dynamics::{rhs, FieldState};
use crate::eos::EosSpec;
use crate::error::{Error, Result};
use crate::grid::{ddr, div_radial, radial_moment, RadialField};

/// Quadratic terms `(Q1, Q2)` of the Chaplygin system written as
/// `Q1 = v div f - f v_r`, `Q2 = v v_r - f f_r + g^2/r`.
pub fn nonlinear_terms(state: &FieldState) -> Result<(Vec<f64>, Vec<f64>)> {
    let grid = state.grid();
    let dv = ddr(&state.p)?;
    let df = ddr(&state.f)?;
    let (v, f, g) = (&state.p.samples, &state.f.samples, &state.g.samples);
    let n = grid.n();
    let mut q1 = vec![0.0; n];
    let mut q2 = vec![0.0; n];
    for j in 0..n {
        let r = grid.r(j);
        q1[j] = v[j] * (df.samples[j] + f[j] / r) - f[j] * dv.samples[j];
        q2[j] = v[j] * dv.samples[j] - f[j] * df.samples[j] + g[j] * g[j] / r;
    }
    Ok((q1, q2))
}

/// The same terms grouped around the good derivative `d_r (v + f)`:
/// `Q1 = v d_r(v+f) - (v+f) v_r + v f / r`,
/// `Q2 = v d_r(v+f) - (v+f) f_r + g^2 / r`.
pub fn nonlinear_terms_null_form(state: &FieldState) -> Result<(Vec<f64>, Vec<f64>)> {
    let grid = state.grid();
    let dv = ddr(&state.p)?;
    let df = ddr(&state.f)?;
    let (v, f, g) = (&state.p.samples, &state.f.samples, &state.g.samples);
    let n = grid.n();
    let mut q1 = vec![0.0; n];
    let mut q2 = vec![0.0; n];
    for j in 0..n {
        let r = grid.r(j);
        let good = dv.samples[j] + df.samples[j];
        let sum = v[j] + f[j];
        q1[j] = v[j] * good - sum * dv.samples[j] + v[j] * f[j] / r;
        q2[j] = v[j] * good - sum * df.samples[j] + g[j] * g[j] / r;
    }
    Ok((q1, q2))
}

/// Acoustic pair `(a, b)` for which the linear part reads
/// `a_t = div b`, `b_t = a_r`: `(v, f)` for Chaplygin gas and `(c_dot, -f)`
/// for a polytropic one.
fn acoustic_pair(state: &FieldState, eos: &EosSpec) -> (RadialField, RadialField) {
    if eos.is_chaplygin() {
        (state.p.clone(), state.f.clone())
    } else {
        (state.p.clone(), state.f.scaled(-1.0))
    }
}

/// Constituents of the order-zero ghost energy identity at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GhostTerms {
    /// `int e^q r (a^2 + b^2) dr`.
    pub energy: f64,
    /// `int q' e^q r (a + b)^2 dr`.
    pub ghost: f64,
    /// `2 int e^q r (a Q1 + b Q2) dr`.
    pub source: f64,
    /// `d/dt` of `energy` evaluated through the evolution equations.
    pub energy_rate: f64,
}

/// Ghost identity terms of `state`, with `Q1 = a_t - div b`, `Q2 = b_t - a_r`
/// taken from the discrete right-hand side.
pub fn ghost_terms(state: &FieldState, eos: &EosSpec) -> Result<GhostTerms> {
    let grid = state.grid();
    let gw = ghost_weight(&grid, state.t);
    let (a, b) = acoustic_pair(state, eos);
    let (pt, ft, _) = rhs(state, eos)?;
    let (at, bt) = if eos.is_chaplygin() { (pt, ft) } else { (pt, ft.scaled(-1.0)) };
    let divb = div_radial(&b)?;
    let da = ddr(&a)?;
    let n = grid.n();
    let mut e = vec![0.0; n];
    let mut gh = vec![0.0; n];
    let mut src = vec![0.0; n];
    let mut rate = vec![0.0; n];
    for j in 0..n {
        let eq = gw.q.samples[j].exp();
        let dq = gw.dq.samples[j];
        let (x, y) = (a.samples[j], b.samples[j]);
        let (xt, yt) = (at.samples[j], bt.samples[j]);
        let q1 = xt - divb.samples[j];
        let q2 = yt - da.samples[j];
        e[j] = eq * (x * x + y * y);
        gh[j] = dq * eq * (x + y) * (x + y);
        src[j] = 2.0 * eq * (x * q1 + y * q2);
        // d/dt e^{q(r-t)} = -q' e^q
        rate[j] = -dq * eq * (x * x + y * y) + 2.0 * eq * (x * xt + y * yt);
    }
    Ok(GhostTerms {
        energy: radial_moment(&grid, &e),
        ghost: radial_moment(&grid, &gh),
        source: radial_moment(&grid, &src),
        energy_rate: radial_moment(&grid, &rate),
    })
}

fn normalized(rate: f64, ghost: f64, source: f64) -> f64 {
    let scale = rate.abs().max(ghost.abs()).max(source.abs());
    if scale == 0.0 {
        0.0
    } else {
        (rate + ghost - source).abs() / scale
    }
}

/// Instantaneous normalized residual of the order-zero identity using the
/// evolution equations for the time derivative. Measures the discrete
/// integration-by-parts defect only.
pub fn ghost_residual_instant(state: &FieldState, eos: &EosSpec) -> Result<f64> {
    let t = ghost_terms(state, eos)?;
    Ok(normalized(t.energy_rate, t.ghost, t.source))
}

/// One sample of the snapshot-based ghost audit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GhostAuditPoint {
    pub t: f64,
    pub residual: f64,
    pub normalized: f64,
}

/// Ghost energy audit over a trajectory: the time derivative of the weighted
/// energy is a centered difference across neighbouring snapshots, so the
/// first and last snapshot yield no sample.
pub fn ghost_energy_audit(snapshots: &[FieldState], eos: &EosSpec) -> Result<Vec<GhostAuditPoint>> {
    if snapshots.len() < 3 {
        return Err(Error::Usage(format!(
            "ghost audit needs at least 3 snapshots, got {}",
            snapshots.len()
        )));
    }
    let terms = snapshots
        .iter()
        .map(|s| ghost_terms(s, eos))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(snapshots.len() - 2);
    for i in 1..snapshots.len() - 1 {
        let dt = snapshots[i + 1].t - snapshots[i - 1].t;
        if !(dt > 0.0) {
            return Err(Error::Usage("snapshot times must increase".into()));
        }
        let rate = (terms[i + 1].energy - terms[i - 1].energy) / dt;
        let residual = (rate + terms[i].ghost - terms[i].source).abs();
        out.push(GhostAuditPoint {
            t: snapshots[i].t,
            residual,
            normalized: normalized(rate, terms[i].ghost, terms[i].source),
        });
    }
    Ok(out)
}

/// Drift of transported and conserved quantities relative to the first
/// snapshot.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DriftReport {
    pub times: Vec<f64>,
    pub mass: Vec<f64>,
    pub rg_sup: Vec<f64>,
    pub w_sup: Vec<f64>,
}

impl DriftReport {
    pub fn max_mass(&self) -> f64 {
        self.mass.iter().fold(0.0, |m, &x| m.max(x))
    }

    pub fn max_rg(&self) -> f64 {
        self.rg_sup.iter().fold(0.0, |m, &x| m.max(x))
    }

    pub fn max_w(&self) -> f64 {
        self.w_sup.iter().fold(0.0, |m, &x| m.max(x))
    }
}

fn relative_drift(x: f64, x0: f64) -> f64 {
    if x0 == 0.0 {
        x.abs()
    } else {
        ((x - x0) / x0).abs()
    }
}

/// Relative drifts of the mass excess, `sup |r g|` and `sup |w|`.
pub fn conservation_audit(snapshots: &[FieldState], eos: &EosSpec) -> Result<DriftReport> {
    let mut report = DriftReport::default();
    let Some(first) = snapshots.first() else {
        return Ok(report);
    };
    let m0 = mass_excess(first, eos)?;
    let rg0 = angular_momentum_sup(first);
    let w0 = specific_vorticity(first, eos)?.sup_norm();
    for s in snapshots {
        report.times.push(s.t);
        report.mass.push(relative_drift(mass_excess(s, eos)?, m0));
        report.rg_sup.push(relative_drift(angular_momentum_sup(s), rg0));
        report.w_sup.push(relative_drift(specific_vorticity(s, eos)?.sup_norm(), w0));
    }
    Ok(report)
}
