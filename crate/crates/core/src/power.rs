//! Sampling theory for Alpha: per-market variance, standard errors,
//! one-sample t-tests over per-round alphas, and sample-size planning.
//!
//! Two standard-error scales appear here and are kept apart by name:
//! [`se_alpha_markets`] / [`se_alpha_homogeneous`] are per-market
//! (derived from the Bernoulli variance of each delta), while
//! [`alpha_t_test`] works on the empirical spread of per-round alphas.

use num_traits::Float;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::scalar::lit;

fn square<T: Float>(v: T) -> T {
    v * v
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PowerError {
    #[error("value {name} = {value} outside {range}")]
    OutOfRange { name: &'static str, value: String, range: &'static str },
    #[error("sample size must be at least 1")]
    ZeroSamples,
    #[error("at least {needed} rounds required, got {got}")]
    TooFewRounds { needed: usize, got: usize },
    #[error("length mismatch between per-market inputs")]
    LengthMismatch,
}

fn check_unit<T: Float>(name: &'static str, v: T) -> Result<(), PowerError> {
    if !(v >= T::zero() && v <= T::one()) {
        return Err(PowerError::OutOfRange {
            name,
            value: format!("{}", v.to_f64().unwrap_or(f64::NAN)),
            range: "[0, 1]",
        });
    }
    Ok(())
}

fn check_open_unit<T: Float>(name: &'static str, v: T) -> Result<(), PowerError> {
    if !(v > T::zero() && v < T::one()) {
        return Err(PowerError::OutOfRange {
            name,
            value: format!("{}", v.to_f64().unwrap_or(f64::NAN)),
            range: "(0, 1)",
        });
    }
    Ok(())
}

/// `Var(δ) = 4 q (1 − q) (b − p)²` for `δ = (b − X)² − (p − X)²`, `X ~ Bernoulli(q)`.
pub fn var_per_market_delta<T: Float>(benchmark: T, prediction: T, q: T) -> Result<T, PowerError> {
    check_unit("benchmark", benchmark)?;
    check_unit("prediction", prediction)?;
    check_unit("q", q)?;
    Ok(lit::<T>(4.0) * q * (T::one() - q) * square(benchmark - prediction))
}

/// `2 · boldness · sqrt(q̄ (1 − q̄)) / sqrt(n)`, the homogeneous approximation.
pub fn se_alpha_homogeneous<T: Float>(n: usize, boldness: T, q_bar: T) -> Result<T, PowerError> {
    if n == 0 {
        return Err(PowerError::ZeroSamples);
    }
    check_unit("boldness", boldness)?;
    check_unit("q_bar", q_bar)?;
    let n = T::from(n).expect("count as float");
    Ok(lit::<T>(2.0) * boldness * (q_bar * (T::one() - q_bar)).sqrt() / n.sqrt())
}

/// SE of the mean per-market Alpha under independence, without the
/// homogeneity approximation: `sqrt(Σ 4 q_i (1 − q_i)(b_i − p_i)²) / n`.
pub fn se_alpha_markets<T: Float>(benchmarks: &[T], predictions: &[T], qs: &[T]) -> Result<T, PowerError> {
    if benchmarks.len() != predictions.len() || benchmarks.len() != qs.len() {
        return Err(PowerError::LengthMismatch);
    }
    if benchmarks.is_empty() {
        return Err(PowerError::ZeroSamples);
    }
    let mut total = T::zero();
    for ((&b, &p), &q) in benchmarks.iter().zip(predictions).zip(qs) {
        total = total + var_per_market_delta(b, p, q)?;
    }
    let n = T::from(benchmarks.len()).expect("count as float");
    Ok(total.sqrt() / n)
}

/// Standard normal CDF via `erfc`.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Inverse standard normal CDF (Wichura's AS 241, PPND16).
///
/// Relative accuracy about `1e-16` in binary64. Returns `±∞` at 0 and 1.
pub fn inverse_normal_cdf<T: Float>(p: T) -> T {
    if p.is_nan() || p < T::zero() || p > T::one() {
        return T::nan();
    }
    if p == T::zero() {
        return T::neg_infinity();
    }
    if p == T::one() {
        return T::infinity();
    }
    let poly = |coeffs: &[f64], x: T| coeffs.iter().rev().fold(T::zero(), |acc, &c| acc * x + lit::<T>(c));

    let q = p - lit::<T>(0.5);
    if q.abs() <= lit::<T>(0.425) {
        let r = lit::<T>(0.180625) - q * q;
        return q * poly(&AS241_A, r) / poly(&AS241_B, r);
    }
    let tail = if q < T::zero() { p } else { T::one() - p };
    let mut r = (-tail.ln()).sqrt();
    let z = if r <= lit::<T>(5.0) {
        r = r - lit::<T>(1.6);
        poly(&AS241_C, r) / poly(&AS241_D, r)
    } else {
        r = r - lit::<T>(5.0);
        poly(&AS241_E, r) / poly(&AS241_F, r)
    };
    if q < T::zero() {
        -z
    } else {
        z
    }
}

const AS241_A: [f64; 8] = [
    3.387_132_872_796_366_5,
    1.331_416_678_917_843_8e2,
    1.971_590_950_306_551_3e3,
    1.373_169_376_550_946e4,
    4.592_195_393_154_987e4,
    6.726_577_092_700_87e4,
    3.343_057_558_358_813e4,
    2.509_080_928_730_122_7e3,
];
const AS241_B: [f64; 8] = [
    1.0,
    4.231_333_070_160_091e1,
    6.871_870_074_920_579e2,
    5.394_196_021_424_751e3,
    2.121_379_430_158_659_7e4,
    3.930_789_580_009_271e4,
    2.872_908_573_572_194_3e4,
    5.226_495_278_852_545e3,
];
const AS241_C: [f64; 8] = [
    1.423_437_110_749_683_5,
    4.630_337_846_156_546,
    5.769_497_221_460_691,
    3.647_848_324_763_204_5,
    1.270_458_252_452_368_4,
    2.417_807_251_774_506e-1,
    2.272_384_498_926_918_4e-2,
    7.745_450_142_783_414e-4,
];
const AS241_D: [f64; 8] = [
    1.0,
    2.053_191_626_637_759,
    1.676_384_830_183_803_8,
    6.897_673_349_851e-1,
    1.481_039_764_274_800_8e-1,
    1.519_866_656_361_645_7e-2,
    5.475_938_084_995_345e-4,
    1.050_750_071_644_416_9e-9,
];
const AS241_E: [f64; 8] = [
    6.657_904_643_501_103,
    5.463_784_911_164_114,
    1.784_826_539_917_291_3,
    2.965_605_718_285_048_7e-1,
    2.653_218_952_657_612_4e-2,
    1.242_660_947_388_078_4e-3,
    2.711_555_568_743_487_6e-5,
    2.010_334_399_292_288_1e-7,
];
const AS241_F: [f64; 8] = [
    1.0,
    5.998_322_065_558_88e-1,
    1.369_298_809_227_358e-1,
    1.487_536_129_085_061_5e-2,
    7.868_691_311_456_133e-4,
    1.846_318_317_510_054_8e-5,
    1.421_511_758_316_446e-7,
    2.044_263_103_389_939_7e-15,
];

/// How the two normal quantiles in the sample-size bound are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum QuantileRounding {
    /// Full-precision quantiles.
    Exact,
    /// Quantiles rounded to this many decimals before use (`3` gives the
    /// familiar `1.645 + 0.842 = 2.487`).
    Decimals(u32),
}

/// Inputs to the sample-size planner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerSpec<T> {
    /// True edge `α*` to detect.
    pub alpha_star: T,
    /// One-sided significance level.
    pub kappa: T,
    /// Target power.
    pub power: T,
    pub q_bar: T,
    /// Typical `|b − p|`.
    pub boldness: T,
    pub quantiles: QuantileRounding,
}

impl<T: Float> PowerSpec<T> {
    /// `κ = 0.05`, `π = 0.80`, `q̄ = 0.5`, boldness `0.15`, three-decimal quantiles.
    pub fn with_alpha_star(alpha_star: T) -> Self {
        PowerSpec {
            alpha_star,
            kappa: lit(0.05),
            power: lit(0.80),
            q_bar: lit(0.5),
            boldness: lit(0.15),
            quantiles: QuantileRounding::Decimals(3),
        }
    }

    pub fn validate(&self) -> Result<(), PowerError> {
        if self.alpha_star.is_nan() || self.alpha_star <= T::zero() {
            return Err(PowerError::OutOfRange {
                name: "alpha_star",
                value: format!("{}", self.alpha_star.to_f64().unwrap_or(f64::NAN)),
                range: "(0, ∞)",
            });
        }
        check_open_unit("kappa", self.kappa)?;
        check_open_unit("power", self.power)?;
        check_unit("q_bar", self.q_bar)?;
        check_unit("boldness", self.boldness)?;
        Ok(())
    }

    fn quantile(&self, p: T) -> T {
        let z = inverse_normal_cdf(p);
        match self.quantiles {
            QuantileRounding::Exact => z,
            QuantileRounding::Decimals(d) => {
                let scale = lit::<T>(10f64.powi(d as i32));
                (z * scale).round() / scale
            }
        }
    }

    /// `z_{1−κ} + z_π`.
    pub fn z_sum(&self) -> T {
        self.quantile(T::one() - self.kappa) + self.quantile(self.power)
    }

    /// The real-valued lower bound on `n` before ceiling.
    pub fn n_bound(&self) -> T {
        let ratio = self.z_sum() / self.alpha_star;
        ratio * ratio * lit::<T>(4.0) * self.q_bar * (T::one() - self.q_bar) * square(self.boldness)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SampleSize {
    pub n: u64,
    pub rounds: u64,
}

/// Smallest `n` satisfying the normal-theory power bound, and `⌈n / k⌉` rounds.
pub fn required_sample_size<T: Float>(spec: &PowerSpec<T>, markets_per_round: u64) -> Result<SampleSize, PowerError> {
    spec.validate()?;
    if markets_per_round == 0 {
        return Err(PowerError::ZeroSamples);
    }
    let n = spec.n_bound().ceil().to_u64().unwrap_or(u64::MAX);
    Ok(SampleSize { n, rounds: n.div_ceil(markets_per_round) })
}

/// Edge sizes tabulated by [`power_table`] by default.
pub const TABLE_ALPHA_STARS: [f64; 6] = [0.005, 0.010, 0.020, 0.030, 0.050, 0.100];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerRow {
    pub alpha_star: f64,
    pub n_bound: f64,
    pub n: u64,
    pub rounds: u64,
}

/// One row per `α*`, all other parameters taken from `template`.
pub fn power_table(
    template: &PowerSpec<f64>,
    alpha_stars: &[f64],
    markets_per_round: u64,
) -> Result<Vec<PowerRow>, PowerError> {
    alpha_stars
        .iter()
        .map(|&alpha_star| {
            let spec = PowerSpec { alpha_star, ..*template };
            let size = required_sample_size(&spec, markets_per_round)?;
            Ok(PowerRow { alpha_star, n_bound: spec.n_bound(), n: size.n, rounds: size.rounds })
        })
        .collect()
}

/// One-sample t-test of per-round alphas against `H₀: α = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaTestResult {
    pub mean_alpha: f64,
    /// Sample SD (`R − 1` denominator) over `sqrt(R)`.
    pub std_error: f64,
    pub t_stat: f64,
    /// Two-sided, Student t with `R − 1` degrees of freedom.
    pub p_value: f64,
    pub n_rounds: usize,
}

impl AlphaTestResult {
    /// True when every per-round alpha was identical.
    pub fn is_degenerate(&self) -> bool {
        self.std_error == 0.0
    }
}

/// Two-sided p-value of a t statistic with `dof` degrees of freedom.
pub fn t_two_sided_p(t: f64, dof: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, dof).expect("positive degrees of freedom");
    (2.0 * dist.cdf(-t.abs())).min(1.0)
}

/// Identical per-round alphas give `std_error = 0`; the statistic is then
/// `±∞` with `p = 0`, except for an all-zero-mean series, which carries no
/// evidence against the null and reports `t = 0`, `p = 1`.
pub fn alpha_t_test<T: Float>(per_round_alphas: &[T]) -> Result<AlphaTestResult, PowerError> {
    let r = per_round_alphas.len();
    if r < 2 {
        return Err(PowerError::TooFewRounds { needed: 2, got: r });
    }
    let values: Vec<f64> = per_round_alphas.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect();
    let rf = r as f64;
    let (mean, std_error) = if values.iter().all(|v| *v == values[0]) {
        (values[0], 0.0)
    } else {
        let mean = values.iter().sum::<f64>() / rf;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (rf - 1.0);
        (mean, var.sqrt() / rf.sqrt())
    };
    let (t_stat, p_value) = if std_error > 0.0 {
        let t = mean / std_error;
        (t, t_two_sided_p(t, rf - 1.0))
    } else if mean == 0.0 {
        (0.0, 1.0)
    } else {
        (f64::INFINITY.copysign(mean), 0.0)
    };
    Ok(AlphaTestResult { mean_alpha: mean, std_error, t_stat, p_value, n_rounds: r })
}

/// t statistic and two-sided p from a reported mean and SE.
pub fn t_from_summary(mean: f64, std_error: f64, n_rounds: usize) -> (f64, f64) {
    let t = mean / std_error;
    (t, t_two_sided_p(t, n_rounds as f64 - 1.0))
}

/// Share of rounds with strictly positive alpha.
pub fn beat_fraction<T: Float>(per_round_alphas: &[T]) -> Result<f64, PowerError> {
    if per_round_alphas.is_empty() {
        return Err(PowerError::TooFewRounds { needed: 1, got: 0 });
    }
    let wins = per_round_alphas.iter().filter(|a| **a > T::zero()).count();
    Ok(wins as f64 / per_round_alphas.len() as f64)
}
