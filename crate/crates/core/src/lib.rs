//! Weak values as correlations between two measurement pointers.
//!
//! A finite-dimensional system is probed by two von Neumann pointers that
//! couple impulsively, one after the other, to two observables. The crate
//! evaluates pointer expectations and correlations exactly at any coupling
//! strength, extracts weak values from the weak-coupling limit in either
//! measurement order, and provides the classical phase-space counterpart.

pub mod channel;
pub mod classical;
pub mod error;
pub mod estimators;
pub mod operator;
pub mod pointer;
pub mod random;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
