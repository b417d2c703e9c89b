//! Time integration of the axisymmetric system.
//!
//! Chaplygin gases evolve `(v, f, g)` with `v = 1/rho - 1`:
//!
//! ```text
//! v_t = (1 + v)(f_r + f/r) - f v_r
//! f_t = (1 + v) v_r - f f_r + g^2/r
//! g_t = -f g_r - f g/r
//! ```
//!
//! Polytropic gases evolve `(c_dot, f, g)` in symmetrized form with
//! `c = 1 + kappa c_dot`, `kappa = (gamma - 1)/2`:
//!
//! ```text
//! c_dot_t = -f c_dot_r - c (f_r + f/r)
//! f_t     = -f f_r - c c_dot_r + g^2/r
//! ```
//!
//! Spatial derivatives use the fourth-order stencil of [`crate::grid`], time
//! stepping is classical RK4. Only the prefix of the grid that can be reached
//! by nonzero data within one step is updated; beyond it every field is an
//! exact zero, so the result is bitwise identical to a full-grid sweep. A
//! positive window tolerance instead treats samples below it as zero.

use crate::eos::EosSpec;
use crate::error::{Error, Result};
use crate::grid::{add_dissipation, ddr_slice, Parity, RadialField, RadialGrid, Stencil};

mod fused;
mod run;

pub use run::{run, RunOutcome, RunSettings, RunStatus};

/// Lower bound on `1 + v` (Chaplygin) or the sound speed (polytropic).
pub const POSITIVITY_FLOOR: f64 = 1e-6;

/// Cells past the last nonzero sample that one RK4 step can touch.
pub(crate) const WINDOW_PAD: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub t: f64,
    /// `v` for Chaplygin gases, `c_dot` for polytropic gases. Even.
    pub p: RadialField,
    /// Radial velocity. Odd.
    pub f: RadialField,
    /// Tangential velocity. Odd.
    pub g: RadialField,
}

impl FieldState {
    pub fn rest(grid: RadialGrid) -> Self {
        Self {
            t: 0.0,
            p: grid.zeros(Parity::Even),
            f: grid.zeros(Parity::Odd),
            g: grid.zeros(Parity::Odd),
        }
    }

    pub fn from_samples(grid: RadialGrid, t: f64, p: Vec<f64>, f: Vec<f64>, g: Vec<f64>) -> Result<Self> {
        Ok(Self {
            t,
            p: RadialField::new(grid, p, Parity::Even)?,
            f: RadialField::new(grid, f, Parity::Odd)?,
            g: RadialField::new(grid, g, Parity::Odd)?,
        })
    }

    pub fn grid(&self) -> RadialGrid {
        self.p.grid
    }

    pub fn is_finite(&self) -> bool {
        [&self.p, &self.f, &self.g]
            .iter()
            .all(|x| x.samples.iter().all(|v| v.is_finite()))
    }

    /// Index one past the last node where any field is nonzero.
    pub fn nonzero_extent(&self) -> usize {
        last_nonzero(&[&self.p.samples, &self.f.samples, &self.g.samples])
    }

    /// Index one past the last node where any field exceeds `tol` in magnitude.
    pub fn extent_above(&self, tol: f64) -> usize {
        self.extent_above_within(tol, self.grid().n())
    }

    /// [`FieldState::extent_above`] when no sample at or past `limit` exceeds `tol`.
    pub(crate) fn extent_above_within(&self, tol: f64, limit: usize) -> usize {
        (0..limit)
            .rev()
            .find(|&j| {
                self.p.samples[j].abs() > tol || self.f.samples[j].abs() > tol || self.g.samples[j].abs() > tol
            })
            .map_or(0, |j| j + 1)
    }

    /// Checks the positivity invariant of the state.
    pub fn validate(&self, eos: &EosSpec) -> Result<()> {
        check_positivity(eos, &self.grid(), self.t, &self.p.samples, self.p.len())
    }
}

fn last_nonzero(fields: &[&[f64]]) -> usize {
    let n = fields[0].len();
    (0..n)
        .rev()
        .find(|&j| fields.iter().any(|u| u[j] != 0.0))
        .map_or(0, |j| j + 1)
}

fn check_positivity(eos: &EosSpec, grid: &RadialGrid, t: f64, p: &[f64], len: usize) -> Result<()> {
    let (scale, what) = match eos {
        EosSpec::Chaplygin { .. } => (1.0, "1 + v below density floor"),
        EosSpec::Polytropic { gamma, .. } => (0.5 * (gamma - 1.0), "sound speed below floor"),
    };
    for (j, &x) in p[..len].iter().enumerate() {
        let s = 1.0 + scale * x;
        if !(s >= POSITIVITY_FLOOR) {
            return Err(Error::StateInvalid {
                t,
                r: grid.r(j),
                what: format!("{what} ({s:e})"),
            });
        }
    }
    Ok(())
}

/// Scratch buffers for the right-hand side.
#[derive(Debug, Clone)]
struct Scratch {
    dp: Vec<f64>,
    df: Vec<f64>,
    dg: Vec<f64>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Self {
            dp: vec![0.0; n],
            df: vec![0.0; n],
            dg: vec![0.0; n],
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn rhs_kernel(
    eos: &EosSpec,
    grid: &RadialGrid,
    stencil: Stencil,
    t: f64,
    (p, f, g): (&[f64], &[f64], &[f64]),
    len: usize,
    (op, of, og): (&mut [f64], &mut [f64], &mut [f64]),
    scratch: &mut Scratch,
) -> Result<()> {
    check_positivity(eos, grid, t, p, len)?;
    let h = grid.h();
    ddr_slice(p, Parity::Even, h, stencil, len, &mut scratch.dp);
    ddr_slice(f, Parity::Odd, h, stencil, len, &mut scratch.df);
    ddr_slice(g, Parity::Odd, h, stencil, len, &mut scratch.dg);
    let (dp, df, dg) = (&scratch.dp, &scratch.df, &scratch.dg);
    match *eos {
        EosSpec::Chaplygin { b, .. } => {
            for j in 0..len {
                let inv_r = 1.0 / grid.r(j);
                let a = 1.0 + p[j];
                let divf = df[j] + f[j] * inv_r;
                op[j] = a * divf - f[j] * dp[j];
                of[j] = b * a * dp[j] - f[j] * df[j] + g[j] * g[j] * inv_r;
                og[j] = -f[j] * dg[j] - f[j] * g[j] * inv_r;
            }
        }
        EosSpec::Polytropic { gamma, .. } => {
            let kappa = 0.5 * (gamma - 1.0);
            for j in 0..len {
                let inv_r = 1.0 / grid.r(j);
                let c = 1.0 + kappa * p[j];
                let divf = df[j] + f[j] * inv_r;
                op[j] = -f[j] * dp[j] - c * divf;
                of[j] = -f[j] * df[j] - c * dp[j] + g[j] * g[j] * inv_r;
                og[j] = -f[j] * dg[j] - f[j] * g[j] * inv_r;
            }
        }
    }
    Ok(())
}

/// Time derivatives `(p_t, f_t, g_t)` of a state.
pub fn rhs(state: &FieldState, eos: &EosSpec) -> Result<(RadialField, RadialField, RadialField)> {
    rhs_with(state, eos, Stencil::Fourth)
}

pub fn rhs_with(
    state: &FieldState,
    eos: &EosSpec,
    stencil: Stencil,
) -> Result<(RadialField, RadialField, RadialField)> {
    let grid = state.grid();
    let n = grid.n();
    let mut out = FieldState::rest(grid);
    let mut scratch = Scratch::new(n);
    rhs_kernel(
        eos,
        &grid,
        stencil,
        state.t,
        (&state.p.samples, &state.f.samples, &state.g.samples),
        n,
        (&mut out.p.samples, &mut out.f.samples, &mut out.g.samples),
        &mut scratch,
    )?;
    Ok((out.p, out.f, out.g))
}

/// Local signal speed `|f| + c` at every node.
pub fn max_signal_speed(state: &FieldState, eos: &EosSpec) -> f64 {
    let p = &state.p.samples;
    let f = &state.f.samples;
    let mut best = 0.0f64;
    for j in 0..p.len() {
        let c = local_sound_speed(eos, p[j]);
        best = best.max(f[j].abs() + c);
    }
    best
}

#[inline]
pub(crate) fn local_sound_speed(eos: &EosSpec, p: f64) -> f64 {
    match *eos {
        // rho = 1/(1+v), c = sqrt(B)/rho
        EosSpec::Chaplygin { b, .. } => b.sqrt() * (1.0 + p),
        EosSpec::Polytropic { gamma, .. } => 1.0 + 0.5 * (gamma - 1.0) * p,
    }
}

/// CFL-limited step `cfl * h / max(|f| + c)`.
pub fn cfl_dt(state: &FieldState, eos: &EosSpec, cfl: f64) -> f64 {
    let h = state.grid().h();
    let speed = max_signal_speed(state, eos);
    if speed > 0.0 {
        cfl * h / speed
    } else {
        cfl * h
    }
}

/// Default Kreiss-Oliger dissipation strength used by [`Stepper`].
pub const DEFAULT_DISSIPATION: f64 = 0.05;

/// Reusable RK4 stepper holding stage buffers.
///
/// Each stage evaluates [`rhs`] plus sixth-order Kreiss-Oliger dissipation of
/// strength `dissipation` on every field.
#[derive(Debug, Clone)]
pub struct Stepper {
    eos: EosSpec,
    stencil: Stencil,
    dissipation: f64,
    window_tol: f64,
    scratch: Scratch,
    fused: Option<(RadialGrid, fused::FusedBuffers)>,
    k: [[Vec<f64>; 3]; 4],
    stage: [Vec<f64>; 3],
}

impl Stepper {
    pub fn new(eos: EosSpec, n: usize) -> Self {
        Self::with_stencil(eos, n, Stencil::Fourth)
    }

    pub fn with_stencil(eos: EosSpec, n: usize, stencil: Stencil) -> Self {
        let buf = || [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        Self {
            eos,
            stencil,
            dissipation: DEFAULT_DISSIPATION,
            window_tol: 0.0,
            scratch: Scratch::new(n),
            fused: None,
            k: [buf(), buf(), buf(), buf()],
            stage: buf(),
        }
    }

    pub fn with_dissipation(mut self, sigma: f64) -> Self {
        self.dissipation = sigma;
        self
    }

    /// Samples with magnitude at most `tol` past the last larger one are
    /// left untouched and read as zero.
    pub fn with_window_tolerance(mut self, tol: f64) -> Self {
        self.window_tol = tol;
        self
    }

    pub fn eos(&self) -> &EosSpec {
        &self.eos
    }

    /// Advances `state` in place by one classical RK4 step.
    ///
    /// On error the state is left untouched.
    pub fn step(&mut self, state: &mut FieldState, dt: f64) -> Result<()> {
        let extent = if self.window_tol > 0.0 {
            state.extent_above(self.window_tol)
        } else {
            state.nonzero_extent()
        };
        self.step_with_extent(state, dt, extent)
    }

    /// As [`Stepper::step`] with the active extent supplied by the caller.
    pub(crate) fn step_with_extent(&mut self, state: &mut FieldState, dt: f64, extent: usize) -> Result<()> {
        let grid = state.grid();
        let n = grid.n();
        let len = (extent + WINDOW_PAD).min(n);
        if extent == 0 {
            state.t += dt;
            return Ok(());
        }
        let t0 = state.t;
        if self.stencil == Stencil::Fourth {
            let bufs = match &mut self.fused {
                Some((g, b)) if *g == grid => b,
                slot => &mut slot.insert((grid, fused::FusedBuffers::new(&grid))).1,
            };
            let y = [&mut state.p.samples, &mut state.f.samples, &mut state.g.samples];
            fused::fused_step(bufs, &self.eos, &grid, t0, dt, self.dissipation, len, y)?;
            state.t = t0 + dt;
            return Ok(());
        }
        self.step_generic(state, dt, len)
    }

    /// Stage-by-stage RK4 for any stencil.
    fn step_generic(&mut self, state: &mut FieldState, dt: f64, len: usize) -> Result<()> {
        let grid = state.grid();
        let t0 = state.t;
        let y = [&state.p.samples, &state.f.samples, &state.g.samples];
        let coef = [0.5 * dt, 0.5 * dt, dt];
        let h = grid.h();
        let Self {
            eos,
            stencil,
            dissipation,
            scratch,
            k,
            stage,
            ..
        } = self;
        for s in 0..4 {
            if s > 0 {
                let prev = &k[s - 1];
                for c in 0..3 {
                    for j in 0..len {
                        stage[c][j] = y[c][j] + coef[s - 1] * prev[c][j];
                    }
                }
            }
            let input: (&[f64], &[f64], &[f64]) = if s == 0 {
                (y[0], y[1], y[2])
            } else {
                (&stage[0], &stage[1], &stage[2])
            };
            let ts = t0 + if s == 0 { 0.0 } else { coef[s - 1] };
            let [k0, k1, k2] = &mut k[s];
            rhs_kernel(eos, &grid, *stencil, ts, input, len, (&mut *k0, &mut *k1, &mut *k2), scratch)?;
            add_dissipation(input.0, Parity::Even, h, *dissipation, len, k0);
            add_dissipation(input.1, Parity::Odd, h, *dissipation, len, k1);
            add_dissipation(input.2, Parity::Odd, h, *dissipation, len, k2);
        }
        let w = dt / 6.0;
        let k = &self.k;
        for (c, field) in [&mut state.p, &mut state.f, &mut state.g].into_iter().enumerate() {
            let u = &mut field.samples;
            for j in 0..len {
                u[j] += w * (k[0][c][j] + 2.0 * k[1][c][j] + 2.0 * k[2][c][j] + k[3][c][j]);
            }
        }
        state.t = t0 + dt;
        Ok(())
    }
}

/// One classical RK4 step of size `dt`.
///
/// This is the bare scheme without dissipation; [`Stepper`] adds it.
pub fn step_rk4(state: &FieldState, eos: &EosSpec, dt: f64) -> Result<FieldState> {
    let mut next = state.clone();
    Stepper::new(*eos, state.grid().n())
        .with_dissipation(0.0)
        .step(&mut next, dt)?;
    Ok(next)
}

/// Blow-up detection thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowupThresholds {
    /// Gradient growth factor.
    pub gradient_factor: f64,
    /// Minimum admissible step, as a multiple of `h`.
    pub dt_floor_factor: f64,
}

impl Default for BlowupThresholds {
    fn default() -> Self {
        Self {
            gradient_factor: 100.0,
            dt_floor_factor: 1e-10,
        }
    }
}

/// Gradient measure watched by the blow-up detector: `max |p_r|, |f_r|`.
pub fn max_gradient(state: &FieldState) -> f64 {
    let grid = state.grid();
    let len = (state.nonzero_extent() + 2).min(grid.n());
    let mut d = vec![0.0; grid.n()];
    let mut best = 0.0f64;
    for (u, parity) in [(&state.p.samples, Parity::Even), (&state.f.samples, Parity::Odd)] {
        ddr_slice(u, parity, grid.h(), Stencil::Fourth, len, &mut d);
        best = d[..len].iter().fold(best, |m, x| m.max(x.abs()));
    }
    best
}

/// True when the gradient has grown past `gradient_factor * (initial + 1)`,
/// the CFL step has collapsed below the floor, or the state is invalid.
pub fn detect_blowup(
    state: &FieldState,
    initial: &FieldState,
    eos: &EosSpec,
    cfl: f64,
    thresholds: &BlowupThresholds,
) -> bool {
    if !state.is_finite() || state.validate(eos).is_err() {
        return true;
    }
    let grad0 = max_gradient(initial);
    if max_gradient(state) > thresholds.gradient_factor * (grad0 + 1.0) {
        return true;
    }
    cfl_dt(state, eos, cfl) < thresholds.dt_floor_factor * state.grid().h()
}
