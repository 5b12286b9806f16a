//! Block-diagonal simulation of spin-boson Rabi models.
//!
//! The library builds truncated Hamiltonians for two coupled qubits, two
//! coupled qutrits and even spin chains sharing one bosonic mode, finds the
//! conserved symmetries that split them into independent blocks, propagates
//! states exactly through a block-wise eigendecomposition and compares the
//! resulting observables against closed-form Jaynes-Cummings predictions.

pub mod analytic;
pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod models;
pub mod symmetry;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
