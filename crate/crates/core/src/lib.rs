//! Confidence intervals for the Hurst parameter of fractional Brownian
//! motion built from filtered quadratic variations.
//!
//! Non-asymptotic intervals come from concentration bounds for Gaussian
//! quadratic forms, with the constant kappa of the filter as the only
//! filter-dependent input. CLT-based intervals and the second-difference
//! baseline are provided for comparison, together with an exact fBm
//! simulator and the Monte-Carlo harness used to compare them.

pub mod concentration;
pub mod error;
pub mod experiments;
pub mod fbm_sim;
pub mod filter_bank;
pub mod intervals;
pub mod numerics;
pub mod statistics;

pub use error::{Error, Result};
