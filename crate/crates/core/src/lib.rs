//! Exact laws, samplers and Monte Carlo verification for volumes of weighted
//! Gaussian simplices.
//!
//! For independent standard Gaussian vectors `X_0, ..., X_l` in `R^d` and
//! positive weights `s_0, ..., s_l`, the `l`-volume of
//! `conv(s_0 X_0, ..., s_l X_l)` has the law
//!
//! ```text
//! (1/l!) * s_0 ... s_l * sqrt(1/s_0^2 + ... + 1/s_l^2) * chi_{d-l+1} ... chi_d
//! ```
//!
//! with independent chi factors. The crate is split into:
//!
//! * [`geometry`]: simplex and parallelotope volumes, the covariance matrix of
//!   the edge vectors and its closed-form determinant, projection factors of
//!   subspaces.
//! * [`distributions`]: chi moments, scaled chi products, their Mellin / log
//!   characteristic functions and a numerical density engine.
//! * [`sampling`]: reproducible counter-based random streams and samplers.
//! * [`verification`]: goodness-of-fit statistics and the experiments that
//!   check every distributional identity.
//! * [`cli`]: argument parsing and dispatch for the `gsimplex` binary.

pub mod cli;
pub mod distributions;
mod error;
pub mod geometry;
pub mod sampling;
pub mod special;
pub mod verification;

pub use error::{Error, Result};
