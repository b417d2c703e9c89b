//! Weighted energies built from a derivative table.

use crate::analysis::table::{multi_indices, DerivativeTable, Quantity};
use crate::analysis::weights::{bracket, CutoffPair};
use crate::dynamics::FieldState;
use crate::error::{Error, Result};
use crate::grid::{ddr, div_radial, lp_norm, weighted_lp_norm, Norm, Parity, RadialField};

/// Deepest truncation of the data-size functional.
pub const MAX_DATA_ORDER: usize = 2;

fn check_depth(table: &DerivativeTable, k: usize) -> Result<()> {
    if k > table.order {
        Err(Error::UnsupportedOrder {
            requested: k,
            available: table.order,
        })
    } else {
        Ok(())
    }
}

fn gamma(table: &DerivativeTable, q: Quantity, a: (usize, usize)) -> Result<RadialField> {
    crate::analysis::table::gamma_apply(table, q, a)
}

fn l2(field: &RadialField) -> f64 {
    lp_norm(field, Norm::L2)
}

/// `sum_{|a|<=k} |Gamma^a (v, f, g)|_2 + sum_{|b|<=k-1} |div Gamma^b g|_2`.
pub fn energy_e(table: &DerivativeTable, k: usize) -> Result<f64> {
    check_depth(table, k)?;
    let mut total = 0.0;
    for a in multi_indices(k) {
        for q in [Quantity::P, Quantity::F, Quantity::Swirl] {
            total += l2(&gamma(table, q, a)?);
        }
    }
    if k >= 1 {
        for b in multi_indices(k - 1) {
            total += l2(&div_radial(&gamma(table, Quantity::Swirl, b)?)?);
        }
    }
    Ok(total)
}

/// Cone-region energy with weight `<r - t> chi1`, over `|a| <= k-1` and
/// both `d_t` and `d_r` of `Gamma^a v`, `Gamma^a f`.
pub fn energy_y(table: &DerivativeTable, cutoffs: &CutoffPair, k: usize) -> Result<f64> {
    check_depth(table, k)?;
    if k == 0 {
        return Ok(0.0);
    }
    let t = table.t;
    let weight = cutoffs.chi1.map_r(Parity::Even, |r, c| bracket(r - t) * c);
    let mut total = 0.0;
    for a in multi_indices(k - 1) {
        for q in [Quantity::P, Quantity::F] {
            let dt = gamma(table, q, (a.0 + 1, a.1))?;
            let dr = ddr(&gamma(table, q, a)?)?;
            total += weighted_lp_norm(&dt, &weight, Norm::L2)?;
            total += weighted_lp_norm(&dr, &weight, Norm::L2)?;
        }
    }
    Ok(total)
}

/// Interior energy, `<t>` times `chi0`-localized norms of first derivatives
/// of `Gamma^a v_tilde`, `Gamma^a f` (`|a| <= k-1`) and of the second-order
/// combinations `div d_r Gamma^b v_tilde`, `d_r div Gamma^b f` (`|b| <= k-2`).
pub fn energy_x(table: &DerivativeTable, cutoffs: &CutoffPair, k: usize) -> Result<f64> {
    check_depth(table, k)?;
    if k == 0 {
        return Ok(0.0);
    }
    let chi0 = &cutoffs.chi0;
    let mut total = 0.0;
    for a in multi_indices(k - 1) {
        let vt = gamma(table, Quantity::VTilde, a)?;
        let f = gamma(table, Quantity::F, a)?;
        total += weighted_lp_norm(&gamma(table, Quantity::VTilde, (a.0 + 1, a.1))?, chi0, Norm::L2)?;
        total += weighted_lp_norm(&ddr(&vt)?, chi0, Norm::L2)?;
        total += weighted_lp_norm(&gamma(table, Quantity::F, (a.0 + 1, a.1))?, chi0, Norm::L2)?;
        total += weighted_lp_norm(&div_radial(&f)?, chi0, Norm::L2)?;
    }
    if k >= 2 {
        for b in multi_indices(k - 2) {
            let vt = gamma(table, Quantity::VTilde, b)?;
            let f = gamma(table, Quantity::F, b)?;
            total += weighted_lp_norm(&div_radial(&ddr(&vt)?)?, chi0, Norm::L2)?;
            total += weighted_lp_norm(&ddr(&div_radial(&f)?)?, chi0, Norm::L2)?;
        }
    }
    Ok(bracket(table.t) * total)
}

/// `sum_{|a|<=k} |Gamma^a w|_3 + |d_r Gamma^a w|_3`.
pub fn vorticity_w(table: &DerivativeTable, k: usize) -> Result<f64> {
    check_depth(table, k)?;
    let mut total = 0.0;
    for a in multi_indices(k) {
        let w = gamma(table, Quantity::W, a)?;
        total += lp_norm(&w, Norm::L3) + lp_norm(&ddr(&w)?, Norm::L3);
    }
    Ok(total)
}

fn euler_operator_powers(field: &RadialField, k: usize) -> Result<Vec<RadialField>> {
    let mut out = vec![field.clone()];
    for _ in 0..k {
        let next = ddr(out.last().unwrap())?.times_r();
        out.push(next);
    }
    Ok(out)
}

fn vector_l2(components: &[&RadialField], weight: Option<&RadialField>) -> Result<f64> {
    let mut sq = 0.0;
    for c in components {
        let n = match weight {
            Some(w) => weighted_lp_norm(c, w, Norm::L2)?,
            None => l2(c),
        };
        sq += n * n;
    }
    Ok(sq.sqrt())
}

/// Size of initial data truncated at derivative order `n_trunc`: the
/// `(r d_r)^k` norms of `(rho0 - 1, u0)`, the `L^3` norms of
/// `(r d_r)^k d_r^l curl u0`, and the `<r>`-weighted norms of
/// `(r d_r)^k d_r^l (grad rho0, div u0, curl u0)`.
pub fn data_size_epsilon(initial: &FieldState, rho0: &RadialField, n_trunc: usize) -> Result<f64> {
    if n_trunc > MAX_DATA_ORDER {
        return Err(Error::UnsupportedOrder {
            requested: n_trunc,
            available: MAX_DATA_ORDER,
        });
    }
    let grid = initial.grid();
    let drho = rho0.map(|x| x - 1.0);
    let mut total = 0.0;

    let rho_k = euler_operator_powers(&drho, n_trunc)?;
    let f_k = euler_operator_powers(&initial.f, n_trunc)?;
    let g_k = euler_operator_powers(&initial.g, n_trunc)?;
    for k in 0..=n_trunc {
        total += vector_l2(&[&rho_k[k], &f_k[k], &g_k[k]], None)?;
    }

    let curl = div_radial(&initial.g)?;
    if n_trunc >= 2 {
        // k + l <= n_trunc - 2
        for (k, l) in index_pairs(n_trunc - 2) {
            let c = radial_derivs(&curl, l)?;
            let c = euler_operator_powers(&c, k)?.pop().unwrap();
            total += lp_norm(&c, Norm::L3);
        }
    }

    if n_trunc >= 1 {
        let weight = grid.sample(Parity::Even, bracket);
        let grad_rho = ddr(&drho)?;
        let div_u = div_radial(&initial.f)?;
        for (k, l) in index_pairs(n_trunc - 1) {
            let comps = [&grad_rho, &div_u, &curl]
                .iter()
                .map(|c| {
                    let d = radial_derivs(c, l)?;
                    Ok(euler_operator_powers(&d, k)?.pop().unwrap())
                })
                .collect::<Result<Vec<_>>>()?;
            let refs: Vec<&RadialField> = comps.iter().collect();
            total += vector_l2(&refs, Some(&weight))?;
        }
    }
    Ok(total)
}

fn index_pairs(max_sum: usize) -> Vec<(usize, usize)> {
    (0..=max_sum)
        .flat_map(|s| (0..=s).map(move |l| (s - l, l)))
        .collect()
}

fn radial_derivs(field: &RadialField, l: usize) -> Result<RadialField> {
    let mut out = field.clone();
    for _ in 0..l {
        out = ddr(&out)?;
    }
    Ok(out)
}
