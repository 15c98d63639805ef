//! Dipole-dipole coupled ion strings in a tunable double-well trap.
//!
//! - [`potential`]: quartic axial potential, calibration, well geometry
//! - [`equilibrium`]: N-ion equilibrium positions
//! - [`modes`]: Hessian normal modes, avoided-crossing scans, antenna enhancement
//! - [`coupling`]: closed-form exchange rate, swap and gate times, angular factors
//! - [`dynamics`]: two-mode Fock evolution and the damped exchange trace
//! - [`fitting`]: spectra, crossing and exchange-trace fits
//! - [`config`], [`output`], [`cli`]: trap files, CSV/JSON output, the command line

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod config;
pub mod constants;
pub mod coupling;
pub mod dynamics;
pub mod equilibrium;
pub mod error;
pub mod fitting;
pub mod modes;
pub mod output;
pub mod potential;

pub use error::{Error, Result};
