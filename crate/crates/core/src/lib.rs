//! Monte Carlo optimization with the cross-entropy method.
//!
//! This crate implements:
//!
//! - importance-sampling building blocks for Monte Carlo integration and
//!   naive Monte Carlo optimization ([`mc_integration`]),
//! - Gaussian and Gaussian-mixture proposal families with weighted
//!   maximum-likelihood / EM fitting and dynamically damped smoothing
//!   ([`distributions`]),
//! - the cross-entropy (CE) method for continuous multi-extremal
//!   minimization ([`ce_core`]),
//! - per-iteration K-fold cross-validated selection of the elite fraction
//!   and mixture order, scored by an importance-weighted held-out estimate
//!   of the proposal's expected objective ([`crossval`]),
//! - a deterministic benchmark harness over a classical test-function suite
//!   ([`bench`], [`objectives`]).
//!
//! Everything is generic over the floating-point width via [`scalar::Real`]
//! (implemented for `f64` and `f32`); the type aliases at the crate root fix
//! the common `f64` choice.
//!
//! Reproducibility is a first-class contract: every stochastic component
//! draws from a substream derived from `(seed, iteration, purpose)` — see
//! [`rng`] — so runs are bit-for-bit reproducible across reruns and thread
//! counts, and runs that share a seed share their populations.

pub mod bench;
pub mod ce_core;
pub mod crossval;
pub mod distributions;
pub mod error;
mod linalg;
pub mod mc_integration;
pub mod objectives;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub use ce_core::{
    ce_step, draw_population, elite_count, elite_weights, init_state, run_ce, run_ce_with_start,
    select_elite, update_params, WeightMode, WEIGHT_CAP,
};
pub use crossval::{
    cv_evaluate_candidate, cv_select, heldout_score, kfold_partition, plmco_ce_step, run_plmco_ce,
    run_plmco_ce_with_start,
};
pub use distributions::{weighted_gaussian_mle, DistributionId, EmInit, SmoothingConfig};
pub use objectives::{default_dim, make_problem, PROBLEM_NAMES};

/// `f64`-backed aliases: the default precision used by the CLI and
/// benchmarks.
pub mod f64_types {
    pub type Real = f64;
    pub type GaussianParams = crate::distributions::GaussianParams<f64>;
    pub type MixtureParams = crate::distributions::MixtureParams<f64>;
    pub type WeightedPoint = crate::distributions::WeightedPoint<f64>;
    pub type EmFit = crate::distributions::EmFit<f64>;
    pub type Problem = crate::objectives::Problem<f64>;
    pub type Proposal = crate::ce_core::Proposal<f64>;
    pub type TaggedSample = crate::ce_core::TaggedSample<f64>;
    pub type CEState = crate::ce_core::CEState<f64>;
    pub type SharedStart = crate::ce_core::SharedStart<f64>;
    pub type CVReport = crate::crossval::CVReport<f64>;
    pub type TrialResult = crate::bench::TrialResult<f64>;
    pub type SeriesPoint = crate::bench::SeriesPoint<f64>;
    pub type AggregateRow = crate::bench::AggregateRow<f64>;
    pub type ISEstimate = crate::mc_integration::ISEstimate<f64>;
}

/// `f32`-backed aliases for reduced-precision experimentation.
pub mod f32_types {
    pub type Real = f32;
    pub type GaussianParams = crate::distributions::GaussianParams<f32>;
    pub type MixtureParams = crate::distributions::MixtureParams<f32>;
    pub type WeightedPoint = crate::distributions::WeightedPoint<f32>;
    pub type EmFit = crate::distributions::EmFit<f32>;
    pub type Problem = crate::objectives::Problem<f32>;
    pub type Proposal = crate::ce_core::Proposal<f32>;
    pub type TaggedSample = crate::ce_core::TaggedSample<f32>;
    pub type CEState = crate::ce_core::CEState<f32>;
    pub type SharedStart = crate::ce_core::SharedStart<f32>;
    pub type CVReport = crate::crossval::CVReport<f32>;
    pub type TrialResult = crate::bench::TrialResult<f32>;
    pub type SeriesPoint = crate::bench::SeriesPoint<f32>;
    pub type AggregateRow = crate::bench::AggregateRow<f32>;
    pub type ISEstimate = crate::mc_integration::ISEstimate<f32>;
}

pub use f64_types::{
    AggregateRow, CEState, CVReport, GaussianParams, MixtureParams, Problem, Proposal,
    SeriesPoint, SharedStart, TaggedSample, TrialResult, WeightedPoint,
};
