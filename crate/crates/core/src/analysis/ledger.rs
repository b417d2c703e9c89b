//! Per-time diagnostic rows collected during a run.

use crate::analysis::audit::ghost_residual_instant;
use crate::analysis::energy::{energy_e, energy_x, energy_y, vorticity_w};
use crate::analysis::table::{build_derivative_table, Quantity};
use crate::analysis::transforms::{angular_momentum_sup, mass_excess};
use crate::analysis::weights::{bracket, cutoffs};
use crate::dynamics::FieldState;
use crate::eos::EosSpec;
use crate::error::{Error, Result};
use crate::grid::ddr;

/// Sup-norm decay probes recorded alongside the energies.
pub const PROBE_NAMES: [&str; 6] = [
    "near_cone",
    "cone_weighted",
    "interior_dt_vtilde",
    "interior_div_f",
    "interior_f",
    "dt_big_g",
];

#[derive(Debug, Clone, PartialEq)]
pub struct LedgerRow {
    pub t: f64,
    /// `E_0 ..= E_K`.
    pub e: Vec<f64>,
    /// `X_1 ..= X_K`.
    pub x: Vec<f64>,
    /// `Y_1 ..= Y_K`.
    pub y: Vec<f64>,
    pub w0: f64,
    pub mass: f64,
    pub rg_sup: f64,
    pub w_sup: f64,
    pub ghost_residual: f64,
    pub probes: [f64; 6],
}

impl LedgerRow {
    pub fn values(&self) -> Vec<f64> {
        let mut out = vec![self.t];
        out.extend(&self.e);
        out.extend(&self.x);
        out.extend(&self.y);
        out.extend([self.w0, self.mass, self.rg_sup, self.w_sup, self.ghost_residual]);
        out.extend(self.probes);
        out
    }

    pub fn probe(&self, name: &str) -> Option<f64> {
        PROBE_NAMES.iter().position(|&p| p == name).map(|i| self.probes[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyLedger {
    order: usize,
    rows: Vec<LedgerRow>,
}

impl EnergyLedger {
    pub fn new(order: usize) -> Self {
        Self { order, rows: Vec::new() }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn columns(&self) -> Vec<String> {
        let mut cols = vec!["t".to_string()];
        cols.extend((0..=self.order).map(|k| format!("E{k}")));
        cols.extend((1..=self.order).map(|k| format!("X{k}")));
        cols.extend((1..=self.order).map(|k| format!("Y{k}")));
        cols.extend(["W0", "mass", "rg_sup", "w_sup", "ghost_residual"].map(String::from));
        cols.extend(PROBE_NAMES.map(String::from));
        cols
    }

    /// Appends a row; times must increase strictly and every entry be finite.
    pub fn push(&mut self, row: LedgerRow) -> Result<()> {
        if row.e.len() != self.order + 1 || row.x.len() != self.order || row.y.len() != self.order {
            return Err(Error::Usage(format!("ledger row does not match order {}", self.order)));
        }
        if let Some(last) = self.rows.last() {
            if !(row.t > last.t) {
                return Err(Error::Usage(format!(
                    "ledger times must increase: {} after {}",
                    row.t, last.t
                )));
            }
        }
        if let Some(bad) = row.values().iter().position(|x| !x.is_finite()) {
            return Err(Error::Usage(format!(
                "non-finite ledger entry {} at t = {}",
                self.columns()[bad],
                row.t
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn rows(&self) -> &[LedgerRow] {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    /// `(t, value)` series of a named column.
    pub fn series(&self, column: &str) -> Option<Vec<(f64, f64)>> {
        let idx = self.columns().iter().position(|c| c == column)?;
        Some(self.rows.iter().map(|r| (r.t, r.values()[idx])).collect())
    }
}

fn sup(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(0.0, |m, x| m.max(x.abs()))
}

/// Evaluates every ledger quantity of `state` with a table of depth `order`.
pub fn evaluate_row(state: &FieldState, eos: &EosSpec, order: usize) -> Result<LedgerRow> {
    let table = build_derivative_table(state, eos, order)?;
    let grid = state.grid();
    let t = state.t;
    let cut = cutoffs(&grid, t);
    let e = (0..=order).map(|k| energy_e(&table, k)).collect::<Result<Vec<_>>>()?;
    let x = (1..=order).map(|k| energy_x(&table, &cut, k)).collect::<Result<Vec<_>>>()?;
    let y = (1..=order).map(|k| energy_y(&table, &cut, k)).collect::<Result<Vec<_>>>()?;
    let w0 = vorticity_w(&table, 0)?;
    let w = table.entry(0, Quantity::W)?;

    // outgoing combination of the acoustic pair
    let sign = if eos.is_chaplygin() { 1.0 } else { -1.0 };
    let outgoing = state.p.zip_with(&state.f, state.p.parity, |a, b| a + sign * b);
    let d_out = ddr(&outgoing)?;
    let df = ddr(&state.f)?;
    let div_f = crate::grid::div_radial(&state.f)?;
    let n = grid.n();
    let chi0 = &cut.chi0.samples;
    let chi1 = &cut.chi1.samples;
    let tb = bracket(t);
    let probes = if order >= 1 {
        let dt_vt = table.entry(1, Quantity::VTilde)?;
        let dt_g = table.entry(1, Quantity::BigG)?;
        [
            sup((0..n).map(|j| chi1[j] * d_out.samples[j])),
            sup((0..n).map(|j| chi1[j] * bracket(grid.r(j) - t).powf(1.5) * df.samples[j])) * tb.sqrt(),
            sup((0..n).map(|j| chi0[j] * dt_vt.samples[j])),
            sup((0..n).map(|j| chi0[j] * div_f.samples[j])),
            sup((0..n).map(|j| chi0[j] * state.f.samples[j])),
            dt_g.sup_norm(),
        ]
    } else {
        [0.0; 6]
    };

    Ok(LedgerRow {
        t,
        e,
        x,
        y,
        w0,
        mass: mass_excess(state, eos)?,
        rg_sup: angular_momentum_sup(state),
        w_sup: w.sup_norm(),
        ghost_residual: ghost_residual_instant(state, eos)?,
        probes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn default_columns() {
        let l = EnergyLedger::new(2);
        let cols = l.columns().join(",");
        assert_eq!(
            cols,
            "t,E0,E1,E2,X1,X2,Y1,Y2,W0,mass,rg_sup,w_sup,ghost_residual,\
             near_cone,cone_weighted,interior_dt_vtilde,interior_div_f,interior_f,dt_big_g"
        );
    }

    #[test]
    fn rest_row_is_zero_and_times_increase() {
        let grid = make_grid(2.0, 64).unwrap();
        let mut ledger = EnergyLedger::new(2);
        let mut s = FieldState::rest(grid);
        let row = evaluate_row(&s, &EosSpec::default(), 2).unwrap();
        assert!(row.values()[1..].iter().all(|&x| x == 0.0));
        ledger.push(row.clone()).unwrap();
        assert!(ledger.push(row).is_err());
        s.t = 1.0;
        ledger.push(evaluate_row(&s, &EosSpec::default(), 2).unwrap()).unwrap();
        assert_eq!(ledger.series("E2").unwrap(), vec![(0.0, 0.0), (1.0, 0.0)]);
        assert!(ledger.series("nope").is_none());
    }

    #[test]
    fn non_finite_rows_are_rejected() {
        let grid = make_grid(2.0, 64).unwrap();
        let mut row = evaluate_row(&FieldState::rest(grid), &EosSpec::default(), 2).unwrap();
        row.mass = f64::NAN;
        assert!(EnergyLedger::new(2).push(row).is_err());
    }
}
