//! Simulation and verification toolkit for the Cox–Ingersoll–Ross process
//!
//! ```text
//! dX = (b - X) dt + σ sqrt(X) dW,   X_0 = x0,
//! ```
//!
//! its truncated variant, and Euler schemes driven by Rademacher (±sqrt(T/n))
//! noise, together with the multiplicative price processes built from them.
//!
//! * [`model`]: parameters, closed-form moments, the noncentral chi-square
//!   marginal law.
//! * [`truncated`]: truncated coefficients, scale function, exit probabilities.
//! * [`engines`]: exact and Euler reference simulators.
//! * [`schemes`]: the additive and truncated Rademacher schemes and their
//!   explicit bounds.
//! * [`prices`]: product and limit price processes.
//! * [`stats`], [`lab`]: CDFs, KS/DKW tests, residual checks and experiments.
//! * [`config`], [`results`], [`tables`]: experiment configuration and output rows.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod engines;
pub mod error;
pub mod grid;
pub mod lab;
pub mod model;
pub mod prices;
pub mod quadrature;
pub mod results;
pub mod rng;
pub mod schemes;
pub mod stats;
pub mod tables;
pub mod truncated;

pub use config::ExperimentConfig;
pub use engines::{exact_cir_path, sample_marginal, ContinuousPath};
pub use error::{Error, Result};
pub use grid::GridSpec;
pub use model::{
    marginal_law, mean_at, second_moment_at, CirParams, NoncentralChiSqSpec, RawParams,
};
pub use results::{OutputFormat, ResultRow, RowDecision};
pub use rng::PathRng;
pub use schemes::{additive_scheme, truncated_scheme, SchemePath, TheoreticalBounds};
pub use stats::{Decision, StatReport};
pub use truncated::TruncationLevel;
