//! Numerical laboratory for the critical fractional Moser-Trudinger setting.

#![allow(clippy::excessive_precision)]

pub mod cli;
pub mod constants;
pub mod error;
pub mod funcspace;
pub mod functionals;
pub mod parallel;
pub mod poincare;
pub mod quadrature;
pub mod verify;

pub use error::{LabError, Result};
