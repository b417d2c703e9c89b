//! Radial compressible Euler simulator for Chaplygin and polytropic gases,
//! with weighted-energy, decay and lifespan diagnostics.

// `!(x > 0.0)` style checks are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod config;
pub mod dynamics;
pub mod eos;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod io;

pub use error::{Error, Result};
