//! Murphy decomposition `Brier = UNC + REL − RES` and the Alpha anatomy.
//!
//! Forecasts are grouped into bins `[e_k, e_{k+1})`, the last bin closed
//! at 1. Empty bins are skipped. The identity is exact only when every forecast
//! sits at its bin mean; otherwise the direct Brier differs from the
//! component sum by
//!
//! ```text
//! residual = W + 2C
//! W = (1/N) Σ_k Σ_{i∈k} (p_i − p̄_k)²
//! C = (1/N) Σ_k Σ_{i∈k} (p_i − p̄_k)(ō_k − x_i)
//! ```
//!
//! Both terms are reported so callers can see where the residual comes from.

use std::cmp::Ordering;

use serde::Serialize;
use thiserror::Error;

use crate::scalar::{outcome_scalar, square, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MurphyError {
    #[error("no forecasts to decompose")]
    Empty,
    #[error("length mismatch: {left} forecasts vs {right} outcomes")]
    LengthMismatch { left: usize, right: usize },
    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(String),
    #[error("outcome {0} is not 0 or 1")]
    InvalidOutcome(u8),
    #[error("invalid binning: {0}")]
    InvalidBinning(String),
    #[error("decompositions have different base rates ({agent} vs {baseline})")]
    BaseRateMismatch { agent: String, baseline: String },
}

/// Bin edges over `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinningSpec<T> {
    edges: Vec<T>,
}

impl<T: Scalar> BinningSpec<T> {
    /// `bins` equally spaced bins, edges `k / bins`.
    pub fn uniform(bins: usize) -> Result<Self, MurphyError> {
        if bins == 0 {
            return Err(MurphyError::InvalidBinning("bin count must be at least 1".into()));
        }
        let k = T::from_count(bins);
        let edges = (0..=bins).map(|i| T::from_count(i) / k.clone()).collect();
        Ok(BinningSpec { edges })
    }

    pub fn from_edges(edges: Vec<T>) -> Result<Self, MurphyError> {
        if edges.len() < 2 {
            return Err(MurphyError::InvalidBinning("need at least two edges".into()));
        }
        if edges[0] != T::zero() || edges[edges.len() - 1] != T::one() {
            return Err(MurphyError::InvalidBinning("edges must span exactly [0, 1]".into()));
        }
        if edges.windows(2).any(|w| w[0].partial_cmp(&w[1]) != Some(Ordering::Less)) {
            return Err(MurphyError::InvalidBinning("edges must be strictly increasing".into()));
        }
        Ok(BinningSpec { edges })
    }

    pub fn bins(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn edges(&self) -> &[T] {
        &self.edges
    }

    /// Index of the bin holding `p`; `p = 1` falls in the last bin.
    pub fn bin_of(&self, p: &T) -> usize {
        let above = self.edges.partition_point(|e| e <= p);
        above.saturating_sub(1).min(self.bins() - 1)
    }
}

impl Default for BinningSpec<f64> {
    fn default() -> Self {
        BinningSpec::uniform(10).expect("ten bins")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinStat<T> {
    pub index: usize,
    pub count: usize,
    pub mean_forecast: T,
    pub observed_frequency: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MurphyComponents<T> {
    pub unc: T,
    pub rel: T,
    pub res: T,
    pub brier_direct: T,
    pub base_rate: T,
    /// `W`: mean within-bin variance of forecasts.
    pub within_variance: T,
    /// `C`: within-bin forecast/outcome cross term.
    pub within_covariance: T,
    pub n: usize,
    pub bins: Vec<BinStat<T>>,
}

impl<T: Scalar> MurphyComponents<T> {
    /// `UNC + REL − RES`.
    pub fn reconstructed(&self) -> T {
        self.unc.clone() + self.rel.clone() - self.res.clone()
    }

    /// `brier_direct − (UNC + REL − RES)`; equals `W + 2C` exactly.
    pub fn residual(&self) -> T {
        self.brier_direct.clone() - self.reconstructed()
    }
}

#[derive(Default, Clone)]
struct Acc<T> {
    count: usize,
    sum_p: T,
    sum_x: T,
}

pub fn murphy_decompose<T: Scalar>(
    predictions: &[T],
    outcomes: &[u8],
    binning: &BinningSpec<T>,
) -> Result<MurphyComponents<T>, MurphyError> {
    if predictions.len() != outcomes.len() {
        return Err(MurphyError::LengthMismatch { left: predictions.len(), right: outcomes.len() });
    }
    if predictions.is_empty() {
        return Err(MurphyError::Empty);
    }
    let n = predictions.len();
    let total = T::from_count(n);

    let mut acc: Vec<Acc<T>> =
        vec![Acc { count: 0, sum_p: T::zero(), sum_x: T::zero() }; binning.bins()];
    let mut assignment = Vec::with_capacity(n);
    let mut sum_x = T::zero();
    let mut sum_sq = T::zero();
    for (p, &x) in predictions.iter().zip(outcomes) {
        if *p < T::zero() || *p > T::one() || p.partial_cmp(p).is_none() {
            return Err(MurphyError::ProbabilityOutOfRange(format!("{p:?}")));
        }
        if x > 1 {
            return Err(MurphyError::InvalidOutcome(x));
        }
        let xv = outcome_scalar::<T>(x);
        let k = binning.bin_of(p);
        assignment.push(k);
        let a = &mut acc[k];
        a.count += 1;
        a.sum_p += p.clone();
        a.sum_x += xv.clone();
        sum_x += xv.clone();
        sum_sq += square(p.clone() - xv);
    }

    let base_rate = sum_x / total.clone();
    let unc = base_rate.clone() * (T::one() - base_rate.clone());

    let mut bins = Vec::new();
    let mut means: Vec<Option<(T, T)>> = vec![None; binning.bins()];
    let mut rel = T::zero();
    let mut res = T::zero();
    for (index, a) in acc.into_iter().enumerate() {
        if a.count == 0 {
            continue;
        }
        let nk = T::from_count(a.count);
        let mean_forecast = a.sum_p / nk.clone();
        let observed_frequency = a.sum_x / nk.clone();
        rel += nk.clone() * square(mean_forecast.clone() - observed_frequency.clone());
        res += nk * square(observed_frequency.clone() - base_rate.clone());
        means[index] = Some((mean_forecast.clone(), observed_frequency.clone()));
        bins.push(BinStat { index, count: a.count, mean_forecast, observed_frequency });
    }

    let mut within_variance = T::zero();
    let mut within_covariance = T::zero();
    for ((p, &x), &k) in predictions.iter().zip(outcomes).zip(&assignment) {
        let (pk, ok) = means[k].clone().expect("occupied bin");
        let dp = p.clone() - pk;
        within_variance += square(dp.clone());
        within_covariance += dp * (ok - outcome_scalar::<T>(x));
    }

    Ok(MurphyComponents {
        unc,
        rel: rel / total.clone(),
        res: res / total.clone(),
        brier_direct: sum_sq / total.clone(),
        base_rate,
        within_variance: within_variance / total.clone(),
        within_covariance: within_covariance / total,
        n,
        bins,
    })
}

/// Resolution gain and reliability gap of an agent over a baseline.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaAnatomy<T> {
    /// `RES_agent − RES_base`.
    pub resolution_gain: T,
    /// `REL_base − REL_agent`.
    pub reliability_gap: T,
}

impl<T: Scalar> AlphaAnatomy<T> {
    pub fn total(&self) -> T {
        self.resolution_gain.clone() + self.reliability_gap.clone()
    }
}

/// Splits Alpha into resolution and reliability terms. Both decompositions
/// must come from the same outcome vector (identical base rates).
pub fn alpha_anatomy<T: Scalar>(
    agent: &MurphyComponents<T>,
    baseline: &MurphyComponents<T>,
) -> Result<AlphaAnatomy<T>, MurphyError> {
    if agent.base_rate != baseline.base_rate {
        return Err(MurphyError::BaseRateMismatch {
            agent: format!("{:?}", agent.base_rate),
            baseline: format!("{:?}", baseline.base_rate),
        });
    }
    Ok(AlphaAnatomy {
        resolution_gain: agent.res.clone() - baseline.res.clone(),
        reliability_gap: baseline.rel.clone() - agent.rel.clone(),
    })
}
