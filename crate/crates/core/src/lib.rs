//! Numerical laboratory for the zeros of entire functions
//! `F(z) = sum xi(n) z^n / n!` built from Wiener sequences.
//!
//! The crate is organized by pipeline stage: [`sequences`] generates the
//! coefficient data, [`spectrum`] estimates its spectral measure,
//! [`evaluator`] computes `F / U` on grids without overflow, [`zeros`]
//! locates and counts zeros, and [`pits`] aggregates everything into a
//! verification report.

pub mod config;
pub mod dd;
pub mod emit;
pub mod error;
pub mod evaluator;
pub mod par;
pub mod pits;
pub mod sequences;
pub mod spectrum;
pub mod sum;
pub mod zeros;

pub use error::{Error, Result};
