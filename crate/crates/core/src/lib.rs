//! Pulsed-diffusion passive scalars on the 2-torus.
//!
//! A scalar is forced by IID Gaussian multiples of a fixed source `b`,
//! advected by a (perturbed) cat map and diffused by the heat semigroup once
//! per step. The modules below compute the exact transfer operator on
//! Fourier modes, the stationary spectrum as a deterministic series, and the
//! statistics it is judged by: cumulative and shell laws, sector sparsity,
//! pulse localization, decay rates, and Monte Carlo cross-checks.

// Negated comparisons reject NaN parameters.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod field;
pub mod maps;
pub mod monte_carlo;
pub mod numerics;
pub mod probes;
pub mod stationary;
pub mod stats;
pub mod transfer;
pub mod validation;

pub use error::{Error, Result};
