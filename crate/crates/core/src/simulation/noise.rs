//! Expected benchmark Brier as a function of market noise, and its inverse.

use serde::{Deserialize, Serialize};

use super::SimulationError;
use crate::power::{normal_cdf, normal_pdf};

/// Latent-probability distribution and clamping bounds of the generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatentModel {
    /// `q` is drawn uniformly from `[q_low, q_high]`.
    pub q_low: f64,
    pub q_high: f64,
    /// Noisy prices are clamped to `[clamp_low, clamp_high]`.
    pub clamp_low: f64,
    pub clamp_high: f64,
}

impl Default for LatentModel {
    fn default() -> Self {
        LatentModel { q_low: 0.05, q_high: 0.95, clamp_low: 0.005, clamp_high: 0.995 }
    }
}

const SIMPSON_PANELS: usize = 2000;

impl LatentModel {
    pub fn validate(&self) -> Result<(), SimulationError> {
        let ok = 0.0 <= self.q_low
            && self.q_low < self.q_high
            && self.q_high <= 1.0
            && 0.0 <= self.clamp_low
            && self.clamp_low < self.clamp_high
            && self.clamp_high <= 1.0;
        if ok {
            Ok(())
        } else {
            Err(SimulationError::InvalidConfig(format!("bad latent model {self:?}")))
        }
    }

    pub fn clamp(&self, p: f64) -> f64 {
        p.clamp(self.clamp_low, self.clamp_high)
    }

    /// `E[q(1 − q)]`, the benchmark Brier of a noiseless market.
    pub fn expected_uncertainty(&self) -> f64 {
        let (a, b) = (self.q_low, self.q_high);
        (a + b) / 2.0 - (a * a + a * b + b * b) / 3.0
    }

    /// `E[(clamp(q + ε) − q)²]` with `ε ~ N(0, sd²)`.
    pub fn expected_price_error(&self, sd: f64) -> f64 {
        let (a, b) = (self.q_low, self.q_high);
        if b - a == 0.0 {
            return self.error_at(a, sd);
        }
        let h = (b - a) / SIMPSON_PANELS as f64;
        let mut sum = self.error_at(a, sd) + self.error_at(b, sd);
        for i in 1..SIMPSON_PANELS {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            sum += w * self.error_at(a + h * i as f64, sd);
        }
        sum * h / 3.0 / (b - a)
    }

    /// `E[(b − x)²] = E[(b − q)²] + E[q(1 − q)]`, since `x` and `b` are
    /// independent given `q`.
    pub fn expected_market_brier(&self, sd: f64) -> f64 {
        self.expected_price_error(sd) + self.expected_uncertainty()
    }

    /// Second moment of a Gaussian error clamped to `[lo − q, hi − q]`.
    fn error_at(&self, q: f64, sd: f64) -> f64 {
        let (lo, hi) = (self.clamp_low - q, self.clamp_high - q);
        if sd == 0.0 {
            let e = 0.0f64.clamp(lo, hi);
            return e * e;
        }
        let (l, u) = (lo / sd, hi / sd);
        let (cl, cu) = (normal_cdf(l), normal_cdf(u));
        let inner = sd * sd * ((cu - cl) - (u * normal_pdf(u) - l * normal_pdf(l)));
        inner + lo * lo * cl + hi * hi * (1.0 - cu)
    }
}

/// Market-noise SD whose expected benchmark Brier is within `tolerance`
/// of `target`, under the default latent model.
pub fn calibrate_noise(target: f64, tolerance: f64) -> Result<f64, SimulationError> {
    calibrate_noise_with(&LatentModel::default(), target, tolerance)
}

pub fn calibrate_noise_with(model: &LatentModel, target: f64, tolerance: f64) -> Result<f64, SimulationError> {
    model.validate()?;
    if tolerance.is_nan() || tolerance <= 0.0 || !target.is_finite() {
        return Err(SimulationError::InvalidConfig(format!("target {target}, tolerance {tolerance}")));
    }
    const SD_MAX: f64 = 10.0;
    let floor = model.expected_market_brier(0.0);
    let ceiling = model.expected_market_brier(SD_MAX);
    if (target - floor).abs() <= tolerance {
        return Ok(0.0);
    }
    if target < floor || target > ceiling {
        return Err(SimulationError::UnreachableTarget { target, min: floor, max: ceiling });
    }
    let (mut lo, mut hi) = (0.0, SD_MAX);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f = model.expected_market_brier(mid);
        if (f - target).abs() <= tolerance {
            return Ok(mid);
        }
        if f < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
