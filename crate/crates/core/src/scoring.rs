//! Brier and Alpha scores over binary markets.
//!
//! Two arithmetic paths are provided. The generic path works over any
//! [`Scalar`] (binary64 in production, big rationals in tests). The
//! basis-point path mirrors integer on-chain arithmetic: squared errors are
//! summed as exact integers in units of `bp² = 1e-8` and divided once with
//! round-half-up, so a score is a [`ScoreFixed`] count of `1e-8` units.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{outcome_scalar, square, Scalar};

/// Basis points in a unit probability.
pub const BP_SCALE: u16 = 10_000;

/// Fixed-point units per Brier unit (one unit is `1e-8`).
pub const SCORE_UNITS: i64 = 100_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScoringError {
    #[error("no resolved markets to score")]
    NoResolvedMarkets,
    #[error("length mismatch: {left} forecasts vs {right} outcomes")]
    LengthMismatch { left: usize, right: usize },
    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(String),
    #[error("basis-point value {0} exceeds 10000")]
    BasisPointsOutOfRange(u32),
    #[error("outcome {0} is not 0 or 1")]
    InvalidOutcome(u8),
    #[error("cannot average zero rounds")]
    NoRounds,
}

/// Integer probability in basis points, `0..=10000`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct ProbabilityBp(u16);

impl ProbabilityBp {
    pub const ZERO: ProbabilityBp = ProbabilityBp(0);
    pub const ONE: ProbabilityBp = ProbabilityBp(BP_SCALE);

    pub fn new(value: u32) -> Result<Self, ScoringError> {
        if value > u32::from(BP_SCALE) {
            return Err(ScoringError::BasisPointsOutOfRange(value));
        }
        Ok(ProbabilityBp(value as u16))
    }

    /// Nearest basis-point value to a real probability, clamped into range.
    pub fn from_probability(p: f64) -> Self {
        let scaled = (p * f64::from(BP_SCALE)).round();
        ProbabilityBp(scaled.clamp(0.0, f64::from(BP_SCALE)) as u16)
    }

    pub fn value(self) -> u16 {
        self.0
    }

    pub fn to_real(self) -> f64 {
        f64::from(self.0) / f64::from(BP_SCALE)
    }

    pub fn to_scalar<T: Scalar>(self) -> T {
        T::from_bp(self.0)
    }
}

impl TryFrom<u32> for ProbabilityBp {
    type Error = ScoringError;

    fn try_from(value: u32) -> Result<Self, Self::Error> {
        ProbabilityBp::new(value)
    }
}

impl From<ProbabilityBp> for u32 {
    fn from(p: ProbabilityBp) -> u32 {
        u32::from(p.0)
    }
}

impl fmt::Display for ProbabilityBp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Resolution state of a market. Once resolved, always resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Outcome {
    #[default]
    Unresolved,
    /// Resolved with binary outcome `x ∈ {0, 1}`.
    Resolved(u8),
}

impl Outcome {
    pub fn resolved(x: u8) -> Result<Self, ScoringError> {
        match x {
            0 | 1 => Ok(Outcome::Resolved(x)),
            other => Err(ScoringError::InvalidOutcome(other)),
        }
    }

    pub fn value(self) -> Option<u8> {
        match self {
            Outcome::Unresolved => None,
            Outcome::Resolved(x) => Some(x),
        }
    }

    pub fn is_resolved(self) -> bool {
        matches!(self, Outcome::Resolved(_))
    }
}

/// One market's `(p, b, x)` triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MarketScoreInput {
    pub prediction: ProbabilityBp,
    pub benchmark: ProbabilityBp,
    pub outcome: Outcome,
}

/// A score in fixed-point units of `1e-8`. Alphas may be negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct ScoreFixed(pub i64);

impl ScoreFixed {
    pub const ZERO: ScoreFixed = ScoreFixed(0);

    pub fn units(self) -> i64 {
        self.0
    }

    pub fn to_real(self) -> f64 {
        self.0 as f64 / SCORE_UNITS as f64
    }
}

impl std::ops::Sub for ScoreFixed {
    type Output = ScoreFixed;

    fn sub(self, rhs: ScoreFixed) -> ScoreFixed {
        ScoreFixed(self.0 - rhs.0)
    }
}

impl fmt::Display for ScoreFixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        let scale = SCORE_UNITS as u64;
        write!(f, "{sign}{}.{:08}", abs / scale, abs % scale)
    }
}

fn check_lengths(left: usize, right: usize) -> Result<(), ScoringError> {
    if left != right {
        return Err(ScoringError::LengthMismatch { left, right });
    }
    if left == 0 {
        return Err(ScoringError::NoResolvedMarkets);
    }
    Ok(())
}

fn check_probability<T: Scalar>(p: &T) -> Result<(), ScoringError> {
    if *p < T::zero() || *p > T::one() || p.partial_cmp(p).is_none() {
        return Err(ScoringError::ProbabilityOutOfRange(format!("{p:?}")));
    }
    Ok(())
}

fn check_outcome(x: u8) -> Result<(), ScoringError> {
    if x > 1 {
        return Err(ScoringError::InvalidOutcome(x));
    }
    Ok(())
}

/// Mean squared error `(1/n) Σ (p_i − x_i)²` over resolved markets.
pub fn brier_score<T: Scalar>(predictions: &[T], outcomes: &[u8]) -> Result<T, ScoringError> {
    check_lengths(predictions.len(), outcomes.len())?;
    let mut sum = T::zero();
    for (p, &x) in predictions.iter().zip(outcomes) {
        check_probability(p)?;
        check_outcome(x)?;
        sum += square(p.clone() - outcome_scalar::<T>(x));
    }
    Ok(sum / T::from_count(predictions.len()))
}

/// Baseline Brier minus agent Brier on a shared set of resolved markets.
pub fn alpha_score<T: Scalar>(
    benchmarks: &[T],
    predictions: &[T],
    outcomes: &[u8],
) -> Result<T, ScoringError> {
    check_lengths(benchmarks.len(), predictions.len())?;
    Ok(brier_score(benchmarks, outcomes)? - brier_score(predictions, outcomes)?)
}

/// Per-market Alpha `δ = (b − x)² − (p − x)²`.
pub fn per_market_delta<T: Scalar>(benchmark: T, prediction: T, outcome: u8) -> Result<T, ScoringError> {
    check_probability(&benchmark)?;
    check_probability(&prediction)?;
    check_outcome(outcome)?;
    let x = outcome_scalar::<T>(outcome);
    Ok(square(benchmark - x.clone()) - square(prediction - x))
}

/// Exact integer sum of `(p_bp − 10000·x)²`, in `1e-8` Brier units.
///
/// Each term is at most `10^8`; a `u128` accumulator cannot overflow for
/// any input that fits in memory.
fn squared_error_sum_bp(predictions: &[ProbabilityBp], outcomes: &[u8]) -> Result<u128, ScoringError> {
    check_lengths(predictions.len(), outcomes.len())?;
    let mut sum: u128 = 0;
    for (p, &x) in predictions.iter().zip(outcomes) {
        check_outcome(x)?;
        let target = i64::from(x) * i64::from(BP_SCALE);
        let err = i64::from(p.value()) - target;
        sum += (err * err) as u128;
    }
    Ok(sum)
}

/// `numerator / denominator` rounded half-up to an integer.
fn div_round_half_up(numerator: u128, denominator: u128) -> u128 {
    (2 * numerator + denominator) / (2 * denominator)
}

/// Brier score in basis-point arithmetic, rounded half-up to `1e-8`.
pub fn brier_score_bp(predictions: &[ProbabilityBp], outcomes: &[u8]) -> Result<ScoreFixed, ScoringError> {
    let sum = squared_error_sum_bp(predictions, outcomes)?;
    let mean = div_round_half_up(sum, predictions.len() as u128);
    Ok(ScoreFixed(mean as i64))
}

/// Per-round Brier and Alpha for one agent, computed over resolved markets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundScoreBp {
    pub brier: ScoreFixed,
    pub baseline_brier: ScoreFixed,
    /// `baseline_brier − brier`.
    pub alpha: ScoreFixed,
    pub resolved: usize,
}

/// Scores one agent's round in basis points, dropping unresolved markets.
pub fn score_markets_bp(markets: &[MarketScoreInput]) -> Result<RoundScoreBp, ScoringError> {
    let mut predictions = Vec::with_capacity(markets.len());
    let mut benchmarks = Vec::with_capacity(markets.len());
    let mut outcomes = Vec::with_capacity(markets.len());
    for m in markets {
        if let Outcome::Resolved(x) = m.outcome {
            predictions.push(m.prediction);
            benchmarks.push(m.benchmark);
            outcomes.push(x);
        }
    }
    let brier = brier_score_bp(&predictions, &outcomes)?;
    let baseline_brier = brier_score_bp(&benchmarks, &outcomes)?;
    Ok(RoundScoreBp {
        brier,
        baseline_brier,
        alpha: baseline_brier - brier,
        resolved: outcomes.len(),
    })
}

/// Cumulative score after `R` rounds: the plain mean of per-round values.
pub fn cumulative_scores<T: Scalar>(per_round: &[T]) -> Result<T, ScoringError> {
    if per_round.is_empty() {
        return Err(ScoringError::NoRounds);
    }
    let mut sum = T::zero();
    for v in per_round {
        sum += v.clone();
    }
    Ok(sum / T::from_count(per_round.len()))
}
