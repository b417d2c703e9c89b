//! Single-pass RK4 stages for the fourth-order stencil.
//!
//! Stage inputs live in buffers with `PAD` ghost cells on each side, so the
//! derivative and dissipation stencils need no branches. Each stage reads
//! the padded input once, accumulates the RK4 combination and writes the next
//! stage input in the same loop. The arithmetic matches the generic path
//! operation for operation.

use super::{check_positivity, POSITIVITY_FLOOR};
use crate::eos::EosSpec;
use crate::error::Result;
use crate::grid::RadialGrid;

const PAD: usize = 3;

#[derive(Debug, Clone)]
pub(super) struct FusedBuffers {
    inv_r: Vec<f64>,
    cur: [Vec<f64>; 3],
    next: [Vec<f64>; 3],
    acc: [Vec<f64>; 3],
}

impl FusedBuffers {
    pub(super) fn new(grid: &RadialGrid) -> Self {
        let n = grid.n();
        let padded = || [vec![0.0; n + 2 * PAD], vec![0.0; n + 2 * PAD], vec![0.0; n + 2 * PAD]];
        Self {
            inv_r: (0..n).map(|j| 1.0 / grid.r(j)).collect(),
            cur: padded(),
            next: padded(),
            acc: [vec![0.0; n], vec![0.0; n], vec![0.0; n]],
        }
    }
}

/// Parity reflection on the left, rest state on the right.
fn fill_ghosts(buf: &mut [Vec<f64>; 3], len: usize) {
    for (c, u) in buf.iter_mut().enumerate() {
        let sign = if c == 0 { 1.0 } else { -1.0 };
        for i in 0..PAD {
            u[PAD + len + i] = 0.0;
        }
        for i in 0..PAD {
            u[PAD - 1 - i] = sign * u[PAD + i];
        }
    }
}

/// `B` for Chaplygin, `kappa` for polytropic.
#[inline(always)]
#[allow(clippy::too_many_arguments)]
fn flux<const CHAP: bool>(param: f64, p: f64, f: f64, g: f64, dp: f64, df: f64, dg: f64, inv_r: f64) -> [f64; 3] {
    let divf = df + f * inv_r;
    let (op, of) = if CHAP {
        let a = 1.0 + p;
        (a * divf - f * dp, param * a * dp - f * df + g * g * inv_r)
    } else {
        let c = 1.0 + param * p;
        (-f * dp - c * divf, -f * df - c * dp + g * g * inv_r)
    };
    [op, of, -f * dg - f * g * inv_r]
}

#[inline(always)]
fn stencils(u: &[f64], j: usize, inv12h: f64, diss: f64) -> (f64, f64, f64) {
    let d = (u[j + 1] - u[j + 5] + 8.0 * (u[j + 4] - u[j + 2])) * inv12h;
    let d6 = u[j] + u[j + 6] - 6.0 * (u[j + 1] + u[j + 5]) + 15.0 * (u[j + 2] + u[j + 4]) - 20.0 * u[j + 3];
    (d, diss * d6, u[j + 3])
}

/// Loop body shared by all stages: `acc` receives `weight * k` (overwritten
/// on the first stage) and, when `NEXT`, `next` receives `y + coef * k`.
#[allow(clippy::too_many_arguments)]
fn sweep<const CHAP: bool, const FIRST: bool, const NEXT: bool>(
    param: f64,
    cur: &[Vec<f64>; 3],
    y: [&[f64]; 3],
    inv_r: &[f64],
    len: usize,
    (inv12h, diss): (f64, f64),
    weight: f64,
    coef: f64,
    next: &mut [Vec<f64>; 3],
    acc: &mut [Vec<f64>; 3],
) {
    let (p, f, g) = (&cur[0][..len + 2 * PAD], &cur[1][..len + 2 * PAD], &cur[2][..len + 2 * PAD]);
    let inv_r = &inv_r[..len];
    let (y0, y1, y2) = (&y[0][..len], &y[1][..len], &y[2][..len]);
    let [a0, a1, a2] = acc;
    let (a0, a1, a2) = (&mut a0[..len], &mut a1[..len], &mut a2[..len]);
    let [n0, n1, n2] = next;
    let (n0, n1, n2) = (&mut n0[PAD..PAD + len], &mut n1[PAD..PAD + len], &mut n2[PAD..PAD + len]);
    for j in 0..len {
        let (dp, kp, pv) = stencils(p, j, inv12h, diss);
        let (df, kf, fv) = stencils(f, j, inv12h, diss);
        let (dg, kg, gv) = stencils(g, j, inv12h, diss);
        let [op, of, og] = flux::<CHAP>(param, pv, fv, gv, dp, df, dg, inv_r[j]);
        let k = [op + kp, of + kf, og + kg];
        if FIRST {
            a0[j] = k[0];
            a1[j] = k[1];
            a2[j] = k[2];
        } else {
            a0[j] += weight * k[0];
            a1[j] += weight * k[1];
            a2[j] += weight * k[2];
        }
        if NEXT {
            n0[j] = y0[j] + coef * k[0];
            n1[j] = y1[j] + coef * k[1];
            n2[j] = y2[j] + coef * k[2];
        }
    }
}

/// One RK4 step over the first `len` nodes; `y` is updated in place.
#[allow(clippy::too_many_arguments)]
pub(super) fn fused_step(
    bufs: &mut FusedBuffers,
    eos: &EosSpec,
    grid: &RadialGrid,
    t0: f64,
    dt: f64,
    sigma: f64,
    len: usize,
    y: [&mut Vec<f64>; 3],
) -> Result<()> {
    let (chap, param) = match *eos {
        EosSpec::Chaplygin { b, .. } => (true, b),
        EosSpec::Polytropic { gamma, .. } => (false, 0.5 * (gamma - 1.0)),
    };
    let scale = if chap { 1.0 } else { param };
    let h = grid.h();
    let inv12h = 1.0 / (12.0 * h);
    let diss = sigma / (64.0 * h);
    let [y0, y1, y2] = y;
    for (c, u) in [&*y0, &*y1, &*y2].into_iter().enumerate() {
        bufs.cur[c][PAD..PAD + len].copy_from_slice(&u[..len]);
    }
    let coef = [0.5 * dt, 0.5 * dt, dt];
    let weights = [1.0, 2.0, 2.0, 1.0];
    for s in 0..4 {
        fill_ghosts(&mut bufs.cur, len);
        let p = &bufs.cur[0][PAD..PAD + len];
        let lowest = p.iter().fold(f64::INFINITY, |m, &x| m.min(1.0 + scale * x));
        if !(lowest >= POSITIVITY_FLOOR) {
            let ts = t0 + if s == 0 { 0.0 } else { coef[s - 1] };
            check_positivity(eos, grid, ts, p, len)?;
        }
        let FusedBuffers { inv_r, cur, next, acc } = bufs;
        let yv: [&[f64]; 3] = [&y0[..], &y1[..], &y2[..]];
        let k = (inv12h, diss);
        let (w, c) = (weights[s], coef.get(s).copied().unwrap_or(0.0));
        match (chap, s) {
            (true, 0) => sweep::<true, true, true>(param, cur, yv, inv_r, len, k, w, c, next, acc),
            (true, 3) => sweep::<true, false, false>(param, cur, yv, inv_r, len, k, w, c, next, acc),
            (true, _) => sweep::<true, false, true>(param, cur, yv, inv_r, len, k, w, c, next, acc),
            (false, 0) => sweep::<false, true, true>(param, cur, yv, inv_r, len, k, w, c, next, acc),
            (false, 3) => sweep::<false, false, false>(param, cur, yv, inv_r, len, k, w, c, next, acc),
            (false, _) => sweep::<false, false, true>(param, cur, yv, inv_r, len, k, w, c, next, acc),
        }
        if s < 3 {
            std::mem::swap(&mut bufs.cur, &mut bufs.next);
        }
    }
    let w = dt / 6.0;
    for (c, u) in [y0, y1, y2].into_iter().enumerate() {
        for (x, a) in u[..len].iter_mut().zip(&bufs.acc[c][..len]) {
            *x += w * a;
        }
    }
    Ok(())
}
