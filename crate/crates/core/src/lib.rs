//! Estimation and meta-analysis of the time-restricted concordance
//! probability `C(τ)` for right-censored survival data.
//!
//! The crate is organized around the analysis pipeline:
//!
//! - [`survival`] — per-study estimation of `C(τ)` (relative frequency,
//!   Harrell's C, IPCW-weighted Uno's C) with bootstrap variances,
//! - [`transforms`] — scale transformations (identity, logit, arcsine
//!   square root) applied to estimates before pooling,
//! - [`meta`] — random-effects meta-analysis and time-aware meta-regression
//!   (linear, restricted cubic spline, fractional polynomial, exponential
//!   decay) fitted by REML with Hartung-Knapp inference,
//! - [`sim`] — a simulation harness that generates synthetic validation
//!   studies and scores the fitted models against the true `C(τ)` curve,
//! - [`io`] — the CSV formats shared by the library and the CLI.
//!
//! All randomized operations take an explicit seed and derive one stream
//! per work unit, so results are reproducible regardless of thread count.

// Negated comparisons like `!(x > 0.0)` are used deliberately throughout:
// they reject NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod io;
pub mod linalg;
pub mod meta;
pub mod rng;
pub mod sim;
pub mod survival;
pub mod transforms;
