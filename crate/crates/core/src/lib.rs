//! Forecast verification for binary prediction markets.
//!
//! * [`scoring`]: Brier and Alpha scores, real-valued and basis-point exact.
//! * [`murphy`]: uncertainty / reliability / resolution decomposition.
//! * [`power`]: per-market Alpha variance, t-tests and sample-size planning.
//! * [`protocol`]: the commit-reveal round state machine and its event log.
//! * [`simulation`]: deterministic seeded campaigns with agent archetypes.
//! * [`report`]: campaign CSV persistence and leaderboard-style aggregation.
//!
//! The scoring and decomposition routines are generic over [`Scalar`]; the
//! aliases below fix the two instantiations used in practice.

pub mod murphy;
pub mod power;
pub mod protocol;
pub mod report;
pub mod scalar;
pub mod scoring;
pub mod simulation;

pub use scalar::Scalar;
pub use scoring::{Outcome, ProbabilityBp, ScoreFixed};

/// Exact arithmetic for oracle checks and worked examples.
pub type Exact = num_rational::BigRational;

pub type Murphy = murphy::MurphyComponents<f64>;
pub type MurphyExact = murphy::MurphyComponents<Exact>;
pub type Binning = murphy::BinningSpec<f64>;
pub type BinningExact = murphy::BinningSpec<Exact>;
pub type Anatomy = murphy::AlphaAnatomy<f64>;
pub type PowerSpec = power::PowerSpec<f64>;
