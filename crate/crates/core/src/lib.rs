//! Desk-scale simulator for parameter estimation with interacting bosons in
//! a tilted double well.
//!
//! The crate prepares localized orbitals from the trap spectrum, evolves the
//! many-body state either self-consistently (coefficients and orbitals
//! coupled) or with frozen orbitals (conventional two-mode interferometry),
//! and turns the resulting states into Fisher information, outcome
//! likelihoods, and maximum-likelihood estimates of the tilt slope.

pub mod error;
pub mod estimation;
pub mod fock;
pub mod grid;
pub mod likelihood;
pub mod mctdh;
pub mod metrology;
pub mod scenario;
pub mod tmi;

pub mod cli;

pub use error::{Error, Result};
