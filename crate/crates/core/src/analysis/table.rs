//! Time-derivative tables and the commuting vector fields `Gamma^a`.
//!
//! Time derivatives are obtained by differentiating the evolution equations
//! analytically and substituting lower table entries, with every `d/dr`
//! realized by the discrete stencil. `S = t d_t + r d_r` acts on a *jet*
//! (a field together with its time derivatives) through
//! `d_t^k (S psi) = t psi^(k+1) + k psi^(k) + r d_r psi^(k)`, which is the
//! commutation rule `d_t S = (S + 1) d_t`.

use crate::analysis::transforms::tail_integral;
use crate::dynamics::{rhs, FieldState};
use crate::eos::EosSpec;
use crate::error::{Error, Result};
use crate::grid::{ddr, div_radial, Parity, RadialField};

/// Deepest supported time-derivative order.
pub const MAX_ORDER: usize = 2;

/// Quantities carried by a [`DerivativeTable`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantity {
    /// `v` (Chaplygin) or `c_dot` (polytropic).
    P,
    F,
    /// Tangential velocity `g`.
    Swirl,
    /// The correction `G` (Chaplygin only; zero otherwise).
    BigG,
    /// `v_tilde = v - G`.
    VTilde,
    /// Specific vorticity `w`.
    W,
}

const QUANTITIES: [Quantity; 6] = [
    Quantity::P,
    Quantity::F,
    Quantity::Swirl,
    Quantity::BigG,
    Quantity::VTilde,
    Quantity::W,
];

/// A field with its time derivatives `d_t^k psi`, `k = 0..=depth`, at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub t: f64,
    pub derivs: Vec<RadialField>,
}

impl Jet {
    pub fn depth(&self) -> usize {
        self.derivs.len() - 1
    }

    /// `d_t` of the jet; loses one order.
    pub fn dt(&self) -> Result<Jet> {
        if self.derivs.len() < 2 {
            return Err(Error::UnsupportedOrder {
                requested: 1,
                available: 0,
            });
        }
        Ok(Jet {
            t: self.t,
            derivs: self.derivs[1..].to_vec(),
        })
    }

    /// `S = t d_t + r d_r` applied to the jet; loses one order.
    pub fn scaling(&self) -> Result<Jet> {
        let depth = self.depth();
        if depth == 0 {
            return Err(Error::UnsupportedOrder {
                requested: 1,
                available: 0,
            });
        }
        let derivs = (0..depth)
            .map(|k| {
                let rd = ddr(&self.derivs[k])?.times_r();
                let next = &self.derivs[k + 1];
                let kk = k as f64;
                let t = self.t;
                let base = self.derivs[k].zip_with(next, self.derivs[k].parity, |x, y| t * y + kk * x);
                Ok(base.add(&rd))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Jet { t: self.t, derivs })
    }

    /// `Gamma^a = d_t^{a1} S^{a2}` as a jet of the remaining depth.
    pub fn gamma(&self, a: (usize, usize)) -> Result<Jet> {
        let need = a.0 + a.1;
        if need > self.depth() {
            return Err(Error::UnsupportedOrder {
                requested: need,
                available: self.depth(),
            });
        }
        let mut jet = self.clone();
        for _ in 0..a.1 {
            jet = jet.scaling()?;
        }
        for _ in 0..a.0 {
            jet = jet.dt()?;
        }
        Ok(jet)
    }

    /// `Gamma^a psi` at the jet's time.
    pub fn gamma_field(&self, a: (usize, usize)) -> Result<RadialField> {
        Ok(self.gamma(a)?.derivs.swap_remove(0))
    }
}

/// `d_t^k` of `(p, f, g)` and auxiliaries for `k = 0..=order`.
#[derive(Debug, Clone)]
pub struct DerivativeTable {
    pub t: f64,
    pub order: usize,
    pub eos: EosSpec,
    entries: Vec<[RadialField; 6]>,
}

fn index(q: Quantity) -> usize {
    QUANTITIES.iter().position(|&x| x == q).unwrap()
}

impl DerivativeTable {
    pub fn entry(&self, k: usize, q: Quantity) -> Result<&RadialField> {
        if k > self.order {
            return Err(Error::UnsupportedOrder {
                requested: k,
                available: self.order,
            });
        }
        Ok(&self.entries[k][index(q)])
    }

    pub fn jet(&self, q: Quantity) -> Jet {
        Jet {
            t: self.t,
            derivs: self.entries.iter().map(|e| e[index(q)].clone()).collect(),
        }
    }

    /// Every entry multiplied by `c`. Used for homogeneity checks of the
    /// energy functionals with frozen tables.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            t: self.t,
            order: self.order,
            eos: self.eos,
            entries: self
                .entries
                .iter()
                .map(|row| row.clone().map(|f| f.scaled(c)))
                .collect(),
        }
    }
}

/// `Gamma^a` of a tabulated quantity.
pub fn gamma_apply(table: &DerivativeTable, q: Quantity, a: (usize, usize)) -> Result<RadialField> {
    if a.0 + a.1 > table.order {
        return Err(Error::UnsupportedOrder {
            requested: a.0 + a.1,
            available: table.order,
        });
    }
    table.jet(q).gamma_field(a)
}

/// Specific volume `1/rho` and its first two time derivatives given `p` and
/// its time derivatives.
fn specific_volume_jet(eos: &EosSpec, p: &[&RadialField]) -> Result<Vec<RadialField>> {
    match *eos {
        EosSpec::Chaplygin { .. } => {
            let mut out = vec![p[0].map(|x| 1.0 + x)];
            out.extend(p[1..].iter().map(|f| (*f).clone()));
            Ok(out)
        }
        EosSpec::Polytropic { gamma, .. } => {
            let kappa = 0.5 * (gamma - 1.0);
            // a = c^(-1/kappa) with c = 1 + kappa p (a = exp(-p) when kappa = 0)
            let a0 = p[0].map(|x| {
                if kappa == 0.0 {
                    (-x).exp()
                } else {
                    (1.0 + kappa * x).powf(-1.0 / kappa)
                }
            });
            let c = p[0].map(|x| 1.0 + kappa * x);
            let mut out = vec![a0.clone()];
            if p.len() > 1 {
                // a_t = -a p_t / c
                let a1 = RadialField {
                    samples: (0..a0.len())
                        .map(|j| -a0.samples[j] * p[1].samples[j] / c.samples[j])
                        .collect(),
                    ..a0.clone()
                };
                out.push(a1.clone());
                if p.len() > 2 {
                    // a_tt = -(a_t p_t + a p_tt)/c + kappa a p_t^2 / c^2
                    let a2 = RadialField {
                        samples: (0..a0.len())
                            .map(|j| {
                                let (a, at, pt, ptt, cc) = (
                                    a0.samples[j],
                                    a1.samples[j],
                                    p[1].samples[j],
                                    p[2].samples[j],
                                    c.samples[j],
                                );
                                -(at * pt + a * ptt) / cc + kappa * a * pt * pt / (cc * cc)
                            })
                            .collect(),
                        ..a0.clone()
                    };
                    out.push(a2);
                }
            }
            Ok(out)
        }
    }
}

/// Second time derivatives of `(p, f, g)` from the differentiated equations.
fn second_derivatives(
    eos: &EosSpec,
    s0: [&RadialField; 3],
    s1: [&RadialField; 3],
) -> Result<[RadialField; 3]> {
    let [p, f, g] = s0;
    let [pt, ft, gt] = s1;
    let grid = p.grid;
    let n = grid.n();
    let dp = ddr(p)?;
    let df = ddr(f)?;
    let dg = ddr(g)?;
    let dpt = ddr(pt)?;
    let dft = ddr(ft)?;
    let dgt = ddr(gt)?;
    let divf = div_radial(f)?;
    let divft = div_radial(ft)?;
    let mut ptt = p.grid.zeros(Parity::Even);
    let mut ftt = p.grid.zeros(Parity::Odd);
    let mut gtt = p.grid.zeros(Parity::Odd);
    for j in 0..n {
        let inv_r = 1.0 / grid.r(j);
        let (pv, fv, gv) = (p.samples[j], f.samples[j], g.samples[j]);
        let (ptv, ftv, gtv) = (pt.samples[j], ft.samples[j], gt.samples[j]);
        match *eos {
            EosSpec::Chaplygin { b, .. } => {
                ptt.samples[j] = ptv * divf.samples[j] + (1.0 + pv) * divft.samples[j]
                    - ftv * dp.samples[j]
                    - fv * dpt.samples[j];
                ftt.samples[j] = b * (ptv * dp.samples[j] + (1.0 + pv) * dpt.samples[j])
                    - ftv * df.samples[j]
                    - fv * dft.samples[j]
                    + 2.0 * gv * gtv * inv_r;
            }
            EosSpec::Polytropic { gamma, .. } => {
                let kappa = 0.5 * (gamma - 1.0);
                let c = 1.0 + kappa * pv;
                ptt.samples[j] = -ftv * dp.samples[j] - fv * dpt.samples[j] - kappa * ptv * divf.samples[j]
                    - c * divft.samples[j];
                ftt.samples[j] = -ftv * df.samples[j] - fv * dft.samples[j] - kappa * ptv * dp.samples[j]
                    - c * dpt.samples[j]
                    + 2.0 * gv * gtv * inv_r;
            }
        }
        gtt.samples[j] =
            -ftv * dg.samples[j] - fv * dgt.samples[j] - (ftv * gv + fv * gtv) * inv_r;
    }
    Ok([ptt, ftt, gtt])
}

/// Builds the derivative table of `state` up to `order` (at most [`MAX_ORDER`]).
pub fn build_derivative_table(state: &FieldState, eos: &EosSpec, order: usize) -> Result<DerivativeTable> {
    if order > MAX_ORDER {
        return Err(Error::UnsupportedOrder {
            requested: order,
            available: MAX_ORDER,
        });
    }
    state.validate(eos)?;
    let grid = state.grid();
    let mut pfg: Vec<[RadialField; 3]> = vec![[state.p.clone(), state.f.clone(), state.g.clone()]];
    if order >= 1 {
        let (pt, ft, gt) = rhs(state, eos)?;
        pfg.push([pt, ft, gt]);
    }
    if order >= 2 {
        let s0 = [&pfg[0][0], &pfg[0][1], &pfg[0][2]];
        let s1 = [&pfg[1][0], &pfg[1][1], &pfg[1][2]];
        let second = second_derivatives(eos, s0, s1)?;
        pfg.push(second);
    }

    let p_refs: Vec<&RadialField> = pfg.iter().map(|e| &e[0]).collect();
    let sv = specific_volume_jet(eos, &p_refs)?;

    // vorticity w = a * div g, a = 1/rho
    let divg: Vec<RadialField> = pfg.iter().map(|e| div_radial(&e[2])).collect::<Result<_>>()?;
    let w: Vec<RadialField> = (0..=order)
        .map(|k| {
            let mut acc = grid.zeros(Parity::Even);
            for i in 0..=k {
                let binom = if i == 0 || i == k { 1.0 } else { 2.0 };
                for j in 0..grid.n() {
                    acc.samples[j] += binom * sv[i].samples[j] * divg[k - i].samples[j];
                }
            }
            acc
        })
        .collect();

    // G and its time derivatives from the differentiated integrand
    let big_g: Vec<RadialField> = if eos.is_chaplygin() {
        g_derivatives(&pfg, order)?
    } else {
        vec![grid.zeros(Parity::Even); order + 1]
    };

    let entries = (0..=order)
        .map(|k| {
            let [p, f, g] = pfg[k].clone();
            let vt = p.sub(&big_g[k]);
            [p, f, g, big_g[k].clone(), vt, w[k].clone()]
        })
        .collect();
    Ok(DerivativeTable {
        t: state.t,
        order,
        eos: *eos,
        entries,
    })
}

fn g_derivatives(pfg: &[[RadialField; 3]], order: usize) -> Result<Vec<RadialField>> {
    let grid = pfg[0][0].grid;
    let n = grid.n();
    let mut integrands = vec![vec![0.0; n]; order + 1];
    #[allow(clippy::needless_range_loop)]
    for j in 0..n {
        let inv_r = 1.0 / grid.r(j);
        let a = 1.0 + pfg[0][0].samples[j];
        let g = pfg[0][2].samples[j];
        integrands[0][j] = g * g / a * inv_r;
        if order >= 1 {
            let (vt, gt) = (pfg[1][0].samples[j], pfg[1][2].samples[j]);
            integrands[1][j] = (2.0 * g * gt / a - g * g * vt / (a * a)) * inv_r;
            if order >= 2 {
                let (vtt, gtt) = (pfg[2][0].samples[j], pfg[2][2].samples[j]);
                integrands[2][j] = (2.0 * (gt * gt + g * gtt) / a - 4.0 * g * gt * vt / (a * a)
                    - g * g * vtt / (a * a)
                    + 2.0 * g * g * vt * vt / (a * a * a))
                    * inv_r;
            }
        }
    }
    integrands
        .iter()
        .map(|i| RadialField::new(grid, tail_integral(&grid, i), Parity::Even))
        .collect()
}

/// All multi-indices `(a1, a2)` with `a1 + a2 <= k`.
pub fn multi_indices(k: usize) -> Vec<(usize, usize)> {
    (0..=k)
        .flat_map(|total| (0..=total).map(move |a2| (total - a2, a2)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    fn bump(r: f64) -> f64 {
        if r >= 1.0 {
            0.0
        } else {
            (-1.0 / (1.0 - r * r)).exp()
        }
    }

    #[test]
    fn multi_index_enumeration() {
        assert_eq!(multi_indices(0), vec![(0, 0)]);
        assert_eq!(multi_indices(1).len(), 3);
        assert_eq!(multi_indices(2).len(), 6);
    }

    #[test]
    fn rest_table_is_zero() {
        let grid = make_grid(1.0, 32).unwrap();
        for eos in [EosSpec::default(), EosSpec::polytropic(2.0)] {
            let t = build_derivative_table(&FieldState::rest(grid), &eos, 2).unwrap();
            for k in 1..=2 {
                for q in QUANTITIES {
                    assert!(t.entry(k, q).unwrap().samples.iter().all(|&x| x == 0.0));
                }
            }
            let dt = gamma_apply(&t, Quantity::F, (1, 0)).unwrap();
            assert!(dt.samples.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn zero_swirl_entries_vanish() {
        let grid = make_grid(2.0, 128).unwrap();
        let mut s = FieldState::rest(grid);
        s.p = grid.sample(Parity::Even, |r| 0.05 * bump(r));
        s.f = grid.sample(Parity::Odd, |r| 0.05 * r * bump(r));
        let t = build_derivative_table(&s, &EosSpec::default(), 2).unwrap();
        for k in 0..=2 {
            assert!(t.entry(k, Quantity::Swirl).unwrap().samples.iter().all(|&x| x == 0.0));
            assert!(t.entry(k, Quantity::BigG).unwrap().samples.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn order_limits() {
        let grid = make_grid(1.0, 32).unwrap();
        let s = FieldState::rest(grid);
        assert!(matches!(
            build_derivative_table(&s, &EosSpec::default(), 3),
            Err(Error::UnsupportedOrder { .. })
        ));
        let t = build_derivative_table(&s, &EosSpec::default(), 1).unwrap();
        assert!(gamma_apply(&t, Quantity::P, (1, 1)).is_err());
        assert!(gamma_apply(&t, Quantity::P, (0, 1)).is_ok());
        assert!(t.entry(2, Quantity::P).is_err());
    }

    #[test]
    fn identity_multi_index() {
        let grid = make_grid(2.0, 64).unwrap();
        let mut s = FieldState::rest(grid);
        s.f = grid.sample(Parity::Odd, |r| 0.1 * r * bump(r));
        let t = build_derivative_table(&s, &EosSpec::default(), 2).unwrap();
        assert_eq!(gamma_apply(&t, Quantity::F, (0, 0)).unwrap(), s.f);
    }

    #[test]
    fn self_similar_probe_is_annihilated_by_scaling() {
        // phi(t, r) = psi(r/t) satisfies S phi = 0
        let t0 = 2.0;
        let err = |n: usize| {
            let grid = make_grid(6.0, n).unwrap();
            let psi = |x: f64| (-x * x).exp();
            let dpsi = |x: f64| -2.0 * x * (-x * x).exp();
            let d2psi = |x: f64| (4.0 * x * x - 2.0) * (-x * x).exp();
            let phi0 = grid.sample(Parity::Even, |r| psi(r / t0));
            let phi1 = grid.sample(Parity::Even, |r| -r / (t0 * t0) * dpsi(r / t0));
            let phi2 = grid.sample(Parity::Even, |r| {
                let x = r / t0;
                2.0 * r / t0.powi(3) * dpsi(x) + r * r / t0.powi(4) * d2psi(x)
            });
            let jet = Jet {
                t: t0,
                derivs: vec![phi0, phi1, phi2],
            };
            let s1 = jet.gamma_field((0, 1)).unwrap();
            let s2 = jet.gamma_field((0, 2)).unwrap();
            let ts = jet.gamma_field((1, 1)).unwrap();
            // d_t S phi = (S + 1) d_t phi, with S phi = 0 the first is zero
            let sdt = jet.dt().unwrap();
            let sdt = sdt.gamma_field((0, 1)).unwrap().add(&sdt.derivs[0]);
            [s1, s2, ts.sub(&sdt)]
                .iter()
                .map(|f| f.samples[..n - 40].iter().fold(0.0f64, |m, x| m.max(x.abs())))
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(128), err(256));
        assert!(e2 < 1e-5, "{e2}");
        assert!((e1 / e2).log2() > 3.5, "order {}", (e1 / e2).log2());
    }

    #[test]
    fn commutation_scaling_and_radial_derivative() {
        // (S + 1) d_r psi = d_r S psi for a smooth jet with exact time derivatives
        let t0 = 1.5;
        let err = |n: usize| {
            let grid = make_grid(8.0, n).unwrap();
            let u = |t: f64, r: f64| (-(r - t).powi(2)).exp() + (-(r + t).powi(2)).exp();
            let ut = |t: f64, r: f64| 2.0 * (r - t) * (-(r - t).powi(2)).exp() - 2.0 * (r + t) * (-(r + t).powi(2)).exp();
            let utr = |t: f64, r: f64| {
                (2.0 - 4.0 * (r - t).powi(2)) * (-(r - t).powi(2)).exp()
                    - (2.0 - 4.0 * (r + t).powi(2)) * (-(r + t).powi(2)).exp()
            };
            let ur = |t: f64, r: f64| -2.0 * (r - t) * (-(r - t).powi(2)).exp() - 2.0 * (r + t) * (-(r + t).powi(2)).exp();
            let psi = Jet {
                t: t0,
                derivs: vec![grid.sample(Parity::Even, |r| u(t0, r)), grid.sample(Parity::Even, |r| ut(t0, r))],
            };
            let dpsi = Jet {
                t: t0,
                derivs: vec![grid.sample(Parity::Odd, |r| ur(t0, r)), grid.sample(Parity::Odd, |r| utr(t0, r))],
            };
            let lhs = dpsi.gamma_field((0, 1)).unwrap().add(&dpsi.derivs[0]);
            let rhs = ddr(&psi.gamma_field((0, 1)).unwrap()).unwrap();
            lhs.samples[..n - 80]
                .iter()
                .zip(&rhs.samples)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(256), err(512));
        assert!((e1 / e2).log2() > 3.5, "order {}", (e1 / e2).log2());
    }
}
