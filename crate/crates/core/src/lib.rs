//! Symplectic tomograms of oscillator Fock and even/odd coherent states,
//! center-of-mass tomograms of their products, limit-theorem scans, and
//! single-mode state reconstruction.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod clt;
pub mod convolution;
pub mod discrepancy;
pub mod error;
pub mod grid;
pub mod marginals;
pub mod reconstruct;
pub mod special;
pub mod states;

pub use error::{Error, Result};
