//! Column generation over inner approximations of the PSD cone.
//!
//! Diagonally dominant (LP) and scaled diagonally dominant (SOCP) inner
//! approximations are grown iteratively by pricing new atoms from the dual of
//! the current restricted master problem. Applications include polynomial
//! minimization on the sphere and stable-set upper bounds.

pub mod atoms;
pub mod cg;
pub mod cli;
pub mod conic;
pub mod error;
pub mod generate;
pub mod poly;
pub mod stableset;
pub mod symmat;

pub use error::{Error, Result};
