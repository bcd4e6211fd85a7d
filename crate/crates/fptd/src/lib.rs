//! First-passage-time densities for one-sided barrier crossings of
//! Ornstein-Uhlenbeck and Bessel diffusions.
//!
//! The density of the hitting time is expanded as a drift-perturbation
//! series around Brownian motion. Truncating the series gives closed-form
//! densities built from parabolic cylinder functions (OU) and exponential
//! integrals (Bessel). The crate ships the series evaluators together with
//! the machinery needed to validate them:
//!
//! - [`special`] — scalar special functions (parabolic cylinder D at
//!   integer orders, exponential integral E1, Gamma densities, erfc),
//! - [`coeffs`] — the exact-rational coefficient table behind the OU
//!   series, with a diff-able CSV cache format,
//! - [`ou`], [`bessel`] — the perturbed densities, transforms and the
//!   error-kernel (eta) functions per process,
//! - [`laplace`] — fixed-contour numerical Laplace inversion, an exact
//!   transform via a complex two-point boundary-value solve, and a generic
//!   first-order perturbation engine used as an oracle,
//! - [`mc`] — Euler-Maruyama simulation, the probabilistic
//!   truncation-error estimator and a histogram density estimator,
//! - [`selftest`] — the release acceptance checks, also exposed through
//!   the `fptd selftest` subcommand.

// Validation tests are written as `!(x > 0.0)` throughout so that NaN
// arguments fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bessel;
pub mod cli;
pub mod coeffs;
pub mod curve;
pub mod errors;
pub mod laplace;
pub mod mc;
pub mod ou;
pub mod quad;
pub mod selftest;
pub mod special;

pub use errors::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
