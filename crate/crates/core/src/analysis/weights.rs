//! Space-time weights: the light-cone cutoff pair and the ghost weight.

use std::sync::OnceLock;

use crate::grid::{Parity, RadialField, RadialGrid};

/// Japanese bracket `(1 + x^2)^(1/2)`.
pub fn bracket(x: f64) -> f64 {
    x.hypot(1.0)
}

/// Cubic smoothstep clamped to `[0, 1]`.
pub fn smoothstep(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * u * (3.0 - 2.0 * u)
}

/// Interior cutoff profile: 1 for `s <= 1/4`, 0 for `s >= 1/2`.
pub fn chi0_profile(s: f64) -> f64 {
    smoothstep((0.5 - s) * 4.0)
}

/// `d chi0 / ds`.
pub fn chi0_profile_derivative(s: f64) -> f64 {
    let u = (0.5 - s) * 4.0;
    if u <= 0.0 || u >= 1.0 {
        0.0
    } else {
        -4.0 * 6.0 * u * (1.0 - u)
    }
}

/// Sup of `(chi')^2 / chi` over both members of the pair for the cubic
/// smoothstep with a transition of width 1/4.
pub const CUTOFF_FISHER_BOUND: f64 = 192.0;

/// Partition of unity separating the interior `r <~ t/4` from the cone region.
#[derive(Debug, Clone, PartialEq)]
pub struct CutoffPair {
    pub t: f64,
    pub chi0: RadialField,
    pub chi1: RadialField,
}

/// Cutoffs at time `t`, evaluated at `s = r / <t>`.
pub fn cutoffs(grid: &RadialGrid, t: f64) -> CutoffPair {
    let tb = bracket(t);
    let chi0 = grid.sample(Parity::Even, |r| chi0_profile(r / tb));
    let chi1 = chi0.map(|c| 1.0 - c);
    CutoffPair { t, chi0, chi1 }
}

const TAIL_START: f64 = 1e4;
const TABLE_PANELS: usize = 8192;

/// `int_s^inf (1 + x^2)^(-5/8) dx` for `s >= TAIL_START` by its large-`s`
/// expansion.
fn tail(s: f64) -> f64 {
    4.0 * s.powf(-0.25) - 0.625 * (4.0 / 9.0) * s.powf(-2.25) + 0.5078125 * (4.0 / 17.0) * s.powf(-4.25)
}

struct TailTable {
    du: f64,
    // T(u) = int_{sinh u}^inf (1 + x^2)^(-5/8) dx on a uniform u grid
    values: Vec<f64>,
}

fn integrand_u(u: f64) -> f64 {
    u.cosh().powf(-0.25)
}

fn table() -> &'static TailTable {
    static TABLE: OnceLock<TailTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        // five-point Gauss-Legendre per panel
        const NODES: [f64; 5] = [
            0.0,
            -0.538_469_310_105_683_1,
            0.538_469_310_105_683_1,
            -0.906_179_845_938_664,
            0.906_179_845_938_664,
        ];
        const WEIGHTS: [f64; 5] = [
            0.568_888_888_888_888_9,
            0.478_628_670_499_366_5,
            0.478_628_670_499_366_5,
            0.236_926_885_056_189_1,
            0.236_926_885_056_189_1,
        ];
        let u_max = TAIL_START.asinh();
        let du = u_max / TABLE_PANELS as f64;
        let mut values = vec![0.0; TABLE_PANELS + 1];
        values[TABLE_PANELS] = tail(TAIL_START);
        for i in (0..TABLE_PANELS).rev() {
            let mid = (i as f64 + 0.5) * du;
            let panel: f64 = NODES
                .iter()
                .zip(WEIGHTS)
                .map(|(&x, w)| w * integrand_u(mid + 0.5 * du * x))
                .sum();
            values[i] = values[i + 1] + 0.5 * du * panel;
        }
        TailTable { du, values }
    })
}

/// `int_s^inf (1 + x^2)^(-5/8) dx` for `s >= 0`.
fn upper_tail(s: f64) -> f64 {
    debug_assert!(s >= 0.0);
    if s >= TAIL_START {
        return tail(s);
    }
    let tab = table();
    let u = s.asinh();
    let i = ((u / tab.du) as usize).min(TABLE_PANELS - 1);
    let x = u / tab.du - i as f64;
    // cubic Hermite with exact slopes dT/du = -cosh(u)^(-1/4)
    let (y0, y1) = (tab.values[i], tab.values[i + 1]);
    let m0 = -integrand_u(i as f64 * tab.du) * tab.du;
    let m1 = -integrand_u((i + 1) as f64 * tab.du) * tab.du;
    let x2 = x * x;
    let x3 = x2 * x;
    (2.0 * x3 - 3.0 * x2 + 1.0) * y0 + (x3 - 2.0 * x2 + x) * m0 + (-2.0 * x3 + 3.0 * x2) * y1 + (x3 - x2) * m1
}

/// Ghost weight profile `q(s) = -int_s^inf <x>^(-5/4) dx`.
pub fn ghost_profile(s: f64) -> f64 {
    if s >= 0.0 {
        -upper_tail(s)
    } else {
        // the integrand is even
        -2.0 * upper_tail(0.0) + upper_tail(-s)
    }
}

/// `q'(s) = <s>^(-5/4)`.
pub fn ghost_profile_derivative(s: f64) -> f64 {
    bracket(s).powf(-1.25)
}

/// Ghost weight `q(r - t)` and its derivative sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GhostWeight {
    pub t: f64,
    pub q: RadialField,
    pub dq: RadialField,
}

impl GhostWeight {
    pub fn exp_q(&self) -> RadialField {
        self.q.map(f64::exp)
    }
}

/// Ghost weight at time `t`. The sampled fields carry even parity, which is
/// only nominal: `q(r - t)` is not an even function of `r`.
pub fn ghost_weight(grid: &RadialGrid, t: f64) -> GhostWeight {
    GhostWeight {
        t,
        q: grid.sample(Parity::Even, |r| ghost_profile(r - t)),
        dq: grid.sample(Parity::Even, |r| ghost_profile_derivative(r - t)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn cutoff_plateaus_and_midpoint() {
        assert_eq!(chi0_profile(0.2), 1.0);
        assert_eq!(chi0_profile(0.6), 0.0);
        assert_eq!(chi0_profile(0.375), 0.5);
        assert_eq!(chi0_profile(0.25), 1.0);
        assert_eq!(chi0_profile(0.5), 0.0);
    }

    #[test]
    fn cutoff_partition_is_exact() {
        let grid = make_grid(10.0, 1000).unwrap();
        for t in [0.0, 1.0, 7.3, 40.0] {
            let c = cutoffs(&grid, t);
            for j in 0..grid.n() {
                assert_eq!(c.chi0.samples[j] + c.chi1.samples[j], 1.0);
                assert!((0.0..=1.0).contains(&c.chi0.samples[j]));
            }
        }
    }

    #[test]
    fn cutoff_derivative_matches_finite_difference() {
        for s in [0.26, 0.3, 0.375, 0.41, 0.49] {
            let e = 1e-6;
            let fd = (chi0_profile(s + e) - chi0_profile(s - e)) / (2.0 * e);
            assert!((fd - chi0_profile_derivative(s)).abs() < 1e-6);
        }
    }

    #[test]
    fn cutoff_fisher_ratio_is_bounded() {
        let mut sup = 0.0f64;
        for i in 0..=200_000 {
            let s = 0.25 + 0.25 * i as f64 / 200_000.0;
            let c0 = chi0_profile(s);
            let d = chi0_profile_derivative(s);
            for c in [c0, 1.0 - c0] {
                if c > 1e-30 {
                    sup = sup.max(d * d / c);
                }
            }
        }
        assert!(sup <= CUTOFF_FISHER_BOUND * (1.0 + 1e-12), "{sup}");
        assert!(sup > 0.99 * CUTOFF_FISHER_BOUND);
    }

    #[test]
    fn ghost_value_at_origin() {
        // sqrt(pi) Gamma(1/8) / (2 Gamma(5/8)), cross-checked by adaptive quadrature
        let expected = -4.654_370_284_873_076;
        assert!((ghost_profile(0.0) - expected).abs() < 1e-10);
        assert_eq!(ghost_profile_derivative(0.0), 1.0);
    }

    #[test]
    fn ghost_tail_and_sign() {
        assert!(ghost_profile(1e12).abs() < 1e-2);
        assert!(ghost_profile(1e12) < 0.0);
        let mut prev = ghost_profile(-50.0);
        let mut s: f64 = -50.0;
        while s < 2e4 {
            s += 0.37 + s.abs() * 0.01;
            let q = ghost_profile(s);
            assert!(q <= 0.0);
            assert!(q >= prev);
            prev = q;
        }
    }

    #[test]
    fn ghost_derivative_by_finite_differences() {
        for s in [-30.0, -2.5, -0.3, 0.0, 0.7, 3.0, 90.0, 9999.0, 1.2e4] {
            let e = 1e-3 * bracket(s);
            let fd = (ghost_profile(s + e) - ghost_profile(s - e)) / (2.0 * e);
            assert!((fd - ghost_profile_derivative(s)).abs() < 1e-6, "s = {s}");
        }
    }

    #[test]
    fn ghost_table_meets_tail_continuously() {
        let below = ghost_profile(TAIL_START * (1.0 - 1e-12));
        let above = ghost_profile(TAIL_START);
        assert!((below - above).abs() < 1e-9);
    }

    #[test]
    fn ghost_weight_sampling() {
        let grid = make_grid(5.0, 64).unwrap();
        let gw = ghost_weight(&grid, 2.0);
        assert!(gw.exp_q().samples.iter().all(|&x| x > 0.0 && x <= 1.0));
        let j = grid.index_at_or_beyond(2.0);
        assert!((gw.dq.samples[j] - ghost_profile_derivative(grid.r(j) - 2.0)).abs() < 1e-15);
    }
}
