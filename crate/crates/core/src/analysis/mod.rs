//! Diagnostics evaluated on solution snapshots: the swirl correction `G`,
//! vorticity, time-derivative tables and commuting fields, cutoffs and ghost
//! weights, weighted energies, identity audits and decay fits.

pub mod audit;
pub mod energy;
pub mod fit;
pub mod ledger;
pub mod table;
pub mod transforms;
pub mod weights;

pub use audit::{conservation_audit, ghost_energy_audit, DriftReport};
pub use energy::{data_size_epsilon, energy_e, energy_x, energy_y, vorticity_w};
pub use fit::{fit_decay, DecayFit};
pub use ledger::{evaluate_row, EnergyLedger, LedgerRow};
pub use table::{build_derivative_table, gamma_apply, DerivativeTable, Jet, Quantity};
pub use transforms::{compute_g, decompose_v, riemann_invariants, specific_vorticity};
pub use weights::{cutoffs, ghost_weight, CutoffPair, GhostWeight};
