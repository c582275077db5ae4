//! Seeded campaign generator.
//!
//! Each round draws `k` markets with latent probability `q ~ U[q_low,
//! q_high]`, a benchmark `b = clamp(q + ε)` with `ε ~ N(0, σ_m²)`, and an
//! outcome `x ~ Bernoulli(q)`. Every archetype then predicts every market.
//!
//! Randomness comes from ChaCha20 streams keyed by
//! `keccak256(domain ‖ seed ‖ round ‖ stream)`: stream 0 drives a round's
//! markets and stream `1 + i` drives agent `i`. No stream is shared between
//! rounds, so rounds can be generated in any order or in parallel with the
//! same result.

mod harness;
mod noise;

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::{keccak256, ProtocolError};
use crate::report::{CampaignRecord, CampaignRow, ReportError};
use crate::scoring::{Outcome, ProbabilityBp};

pub use harness::{run_through_protocol, HarnessOptions, LedgerEntry, ScoredLedger, Tamper};
pub use noise::{calibrate_noise, calibrate_noise_with, LatentModel};

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("config parse error: {0}")]
    ConfigParse(#[from] toml::de::Error),
    #[error("target market Brier {target} is outside the reachable range [{min}, {max}]")]
    UnreachableTarget { target: f64, min: f64, max: f64 },
    #[error("campaign is not playable: {0}")]
    InvalidCampaign(String),
    #[error("round {round_id}: protocol score for {agent} disagrees with direct scoring")]
    ScoreMismatch { round_id: u64, agent: String },
    #[error("round {round_id}: {source}")]
    Protocol { round_id: u64, source: ProtocolError },
    #[error(transparent)]
    Report(#[from] ReportError),
}

/// How an agent forms its prediction for one market.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArchetypeKind {
    /// `clamp(b + w(q − b) + N(0, sd²))`; `w = 1` ignores the market entirely.
    TruthAnchored {
        noise_sd: f64,
        #[serde(default = "full_weight")]
        weight: f64,
    },
    /// `clamp(b + N(0, sd²))`.
    MarketTracking { noise_sd: f64 },
    /// Repeats the benchmark.
    ConsensusEcho,
    /// Uniform on `[0, 1]`, ignoring everything.
    UniformRandom,
}

fn full_weight() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentArchetype {
    pub label: String,
    #[serde(flatten)]
    pub kind: ArchetypeKind,
}

impl AgentArchetype {
    pub fn new(label: impl Into<String>, kind: ArchetypeKind) -> Self {
        AgentArchetype { label: label.into(), kind }
    }
}

/// A category and its share of rounds in the schedule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryWeight {
    pub name: String,
    pub weight: u32,
}

/// Generator inputs. Parsed from TOML with [`CampaignConfig::from_toml_str`];
/// omitted keys take the defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub seed: u64,
    pub rounds: u64,
    pub markets_per_round: u32,
    /// Fixed market-noise SD. When absent it is calibrated so the expected
    /// benchmark Brier equals `market_brier_target`.
    pub market_noise_sd: Option<f64>,
    pub market_brier_target: f64,
    pub latent: LatentModel,
    pub archetypes: Vec<AgentArchetype>,
    pub categories: Vec<CategoryWeight>,
}

pub const DEFAULT_SEED: u64 = 137;
const CALIBRATION_TOLERANCE: f64 = 1e-12;

impl Default for CampaignConfig {
    fn default() -> Self {
        use ArchetypeKind::*;
        let cat = |name: &str, weight| CategoryWeight { name: name.into(), weight };
        CampaignConfig {
            seed: DEFAULT_SEED,
            rounds: 50,
            markets_per_round: 7,
            market_noise_sd: None,
            market_brier_target: 0.1995,
            latent: LatentModel::default(),
            archetypes: vec![
                AgentArchetype::new("truth-a", TruthAnchored { weight: 0.25, noise_sd: 0.050 }),
                AgentArchetype::new("truth-b", TruthAnchored { weight: 0.25, noise_sd: 0.058 }),
                AgentArchetype::new("truth-c", TruthAnchored { weight: 0.20, noise_sd: 0.052 }),
                AgentArchetype::new("track-low", MarketTracking { noise_sd: 0.039 }),
                AgentArchetype::new("track-high", MarketTracking { noise_sd: 0.088 }),
                AgentArchetype::new("consensus", ConsensusEcho),
                AgentArchetype::new("random", UniformRandom),
            ],
            categories: vec![
                cat("Crypto", 12),
                cat("Politics", 11),
                cat("Sports", 9),
                cat("Economics", 7),
                cat("Geopolitics", 6),
                cat("Entertainment", 5),
            ],
        }
    }
}

impl CampaignConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, SimulationError> {
        let config: CampaignConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), SimulationError> {
        let bad = |m: String| Err(SimulationError::InvalidConfig(m));
        if self.rounds == 0 {
            return bad("rounds must be positive".into());
        }
        if self.markets_per_round == 0 {
            return bad("markets_per_round must be positive".into());
        }
        if self.archetypes.is_empty() {
            return bad("no archetypes".into());
        }
        if self.categories.is_empty() || self.categories.iter().any(|c| c.weight == 0 || c.name.is_empty()) {
            return bad("categories need non-empty names and positive weights".into());
        }
        self.latent.validate()?;
        let mut labels = HashSet::new();
        for a in &self.archetypes {
            if a.label.is_empty() || !labels.insert(a.label.as_str()) {
                return bad(format!("archetype label {:?} is empty or repeated", a.label));
            }
            let sd_ok = |sd: f64| sd.is_finite() && sd >= 0.0;
            let ok = match a.kind {
                ArchetypeKind::TruthAnchored { noise_sd, weight } => sd_ok(noise_sd) && (0.0..=1.0).contains(&weight),
                ArchetypeKind::MarketTracking { noise_sd } => sd_ok(noise_sd),
                ArchetypeKind::ConsensusEcho | ArchetypeKind::UniformRandom => true,
            };
            if !ok {
                return bad(format!("archetype {:?} has invalid parameters", a.label));
            }
        }
        let mut names = HashSet::new();
        if !self.categories.iter().all(|c| names.insert(c.name.as_str())) {
            return bad("repeated category".into());
        }
        if let Some(sd) = self.market_noise_sd {
            if !(sd.is_finite() && sd >= 0.0) {
                return bad(format!("market_noise_sd {sd}"));
            }
        }
        Ok(())
    }

    /// The configured market-noise SD, calibrating it when absent.
    pub fn resolved_market_noise_sd(&self) -> Result<f64, SimulationError> {
        match self.market_noise_sd {
            Some(sd) => Ok(sd),
            None => calibrate_noise_with(&self.latent, self.market_brier_target, CALIBRATION_TOLERANCE),
        }
    }

    /// Category of every round, in order.
    ///
    /// Smooth weighted round-robin: each step adds every weight to a running
    /// credit and picks the largest credit (earliest on ties), which then pays
    /// back the total weight. Any window of `Σ weights` consecutive rounds
    /// holds each category exactly `weight` times.
    pub fn category_schedule(&self) -> Vec<&str> {
        let total: i64 = self.categories.iter().map(|c| c.weight as i64).sum();
        let mut credit = vec![0i64; self.categories.len()];
        (0..self.rounds)
            .map(|_| {
                for (c, cat) in credit.iter_mut().zip(&self.categories) {
                    *c += cat.weight as i64;
                }
                let pick = (0..credit.len()).fold(0, |best, i| if credit[i] > credit[best] { i } else { best });
                credit[pick] -= total;
                self.categories[pick].name.as_str()
            })
            .collect()
    }
}

/// One generated market.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarketSpec {
    pub latent_q: f64,
    /// Clamped noisy price before rounding.
    pub benchmark_b: f64,
    pub benchmark_bp: ProbabilityBp,
    pub category: String,
    pub outcome: u8,
}

/// Whether rounds are generated on the rayon pool or one after another.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

const MARKET_STREAM: u64 = 0;

pub(crate) fn substream(domain: &[u8], seed: u64, round: u64, stream: u64) -> ChaCha20Rng {
    let mut buf = domain.to_vec();
    buf.extend_from_slice(&seed.to_be_bytes());
    buf.extend_from_slice(&round.to_be_bytes());
    buf.extend_from_slice(&stream.to_be_bytes());
    ChaCha20Rng::from_seed(keccak256(&buf))
}

fn gaussian(sd: f64) -> Normal<f64> {
    Normal::new(0.0, sd).expect("validated noise sd")
}

/// Markets of one round. Draw order per market: `q`, price noise, outcome.
pub fn generate_markets(config: &CampaignConfig, round_id: u64, category: &str, market_sd: f64) -> Vec<MarketSpec> {
    let mut rng = substream(b"markets", config.seed, round_id, MARKET_STREAM);
    let noise = gaussian(market_sd);
    let m = &config.latent;
    (0..config.markets_per_round)
        .map(|_| {
            let latent_q = m.q_low + (m.q_high - m.q_low) * rng.random::<f64>();
            let benchmark_b = m.clamp(latent_q + noise.sample(&mut rng));
            let outcome = u8::from(rng.random::<f64>() < latent_q);
            MarketSpec {
                latent_q,
                benchmark_b,
                benchmark_bp: ProbabilityBp::from_probability(benchmark_b),
                category: category.to_string(),
                outcome,
            }
        })
        .collect()
}

/// One agent's predictions for a round's markets.
pub fn predict(config: &CampaignConfig, agent_index: usize, round_id: u64, markets: &[MarketSpec]) -> Vec<ProbabilityBp> {
    let mut rng = substream(b"agents", config.seed, round_id, 1 + agent_index as u64);
    let clamp = |p: f64| ProbabilityBp::from_probability(config.latent.clamp(p));
    let kind = config.archetypes[agent_index].kind;
    markets
        .iter()
        .map(|m| {
            let b = m.benchmark_bp.to_real();
            match kind {
                ArchetypeKind::TruthAnchored { noise_sd, weight } => {
                    clamp(b + weight * (m.latent_q - b) + gaussian(noise_sd).sample(&mut rng))
                }
                ArchetypeKind::MarketTracking { noise_sd } => clamp(b + gaussian(noise_sd).sample(&mut rng)),
                ArchetypeKind::ConsensusEcho => m.benchmark_bp,
                ArchetypeKind::UniformRandom => ProbabilityBp::from_probability(rng.random::<f64>()),
            }
        })
        .collect()
}

fn round_rows(config: &CampaignConfig, round_id: u64, category: &str, market_sd: f64) -> Vec<CampaignRow> {
    let markets = generate_markets(config, round_id, category, market_sd);
    let mut rows = Vec::with_capacity(markets.len() * config.archetypes.len());
    for (a, archetype) in config.archetypes.iter().enumerate() {
        for (idx, (m, p)) in markets.iter().zip(predict(config, a, round_id, &markets)).enumerate() {
            rows.push(CampaignRow {
                round_id,
                agent: archetype.label.clone(),
                market_idx: idx as u32,
                category: m.category.clone(),
                p_bp: p,
                b_bp: m.benchmark_bp,
                outcome: Outcome::Resolved(m.outcome),
                q: Some(m.latent_q),
            });
        }
    }
    rows
}

pub fn generate_campaign(config: &CampaignConfig) -> Result<CampaignRecord, SimulationError> {
    generate_campaign_with(config, Execution::Parallel)
}

/// Rows are ordered by round, then agent in roster order, then market.
pub fn generate_campaign_with(config: &CampaignConfig, execution: Execution) -> Result<CampaignRecord, SimulationError> {
    config.validate()?;
    let market_sd = config.resolved_market_noise_sd()?;
    let schedule = config.category_schedule();
    let build = |(r, cat): (usize, &&str)| round_rows(config, r as u64 + 1, cat, market_sd);
    let rounds: Vec<Vec<CampaignRow>> = match execution {
        Execution::Parallel => schedule.par_iter().enumerate().map(build).collect(),
        Execution::Sequential => schedule.iter().enumerate().map(build).collect(),
    };
    Ok(CampaignRecord::new(rounds.into_iter().flatten().collect())?)
}
