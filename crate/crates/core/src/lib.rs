//! Complete pairs of right solvents for the quadratic pencil
//! `L(lambda) = lambda^2 + lambda B + C`, their condition-number scoring,
//! and the two-exponential solution of `x'' + B x' + C x = f`.

pub mod cli;
pub mod error;
pub mod evolution;
pub mod experiments;
pub mod fsio;
pub mod highprec;
pub mod matcore;
pub mod pencil;
pub mod scoring;
pub mod solvent;
pub mod splitting;

pub use error::{Error, Result};
pub use matcore::{ComplexMatrix, C64};
