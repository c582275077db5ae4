//! Campaign records and the statistics derived from them.
//!
//! A [`CampaignRecord`] is the flat table every report is computed from:
//! one row per (round, agent, market). All summaries here are pure
//! functions of the rows, so a record reloaded from CSV reproduces them
//! exactly.

mod csv_io;
mod summary;

use std::collections::{BTreeMap, HashMap, HashSet};

use thiserror::Error;

use crate::murphy::MurphyError;
use crate::power::PowerError;
use crate::scoring::{Outcome, ProbabilityBp, ScoringError};

pub use csv_io::{from_csv_str, load_csv, save_csv, to_csv_string, CSV_HEADER, CSV_VERSION};
pub use summary::{
    category_breakdown, leaderboard, murphy_report, trajectories, CategoryAgent, CategoryBreakdown, CategoryRow,
    CategoryTotal, LeaderboardRow, MurphyRow, Trajectory, TrajectoryPoint, MARKET_LABEL,
};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("unexpected header {found:?}")]
    Header { found: String },
    #[error("unsupported record version {0:?}")]
    Version(String),
    #[error("duplicate row for round {round_id}, agent {agent:?}, market {market_idx}")]
    DuplicateKey { round_id: u64, agent: String, market_idx: u32 },
    #[error("rows disagree on market data for round {round_id}, market {market_idx}")]
    InconsistentMarket { round_id: u64, market_idx: u32 },
    #[error("invalid row: {0}")]
    InvalidRow(String),
    #[error("record has no rows")]
    Empty,
    #[error("agent {agent:?} has {got} scored rounds, need at least {needed}")]
    InsufficientRounds { agent: String, got: usize, needed: usize },
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error(transparent)]
    Murphy(#[from] MurphyError),
    #[error(transparent)]
    Power(#[from] PowerError),
}

/// One agent's prediction on one market.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignRow {
    pub round_id: u64,
    pub agent: String,
    pub market_idx: u32,
    pub category: String,
    pub p_bp: ProbabilityBp,
    pub b_bp: ProbabilityBp,
    pub outcome: Outcome,
    /// Latent YES probability; only simulated campaigns carry it.
    pub q: Option<f64>,
}

/// Market-level fields shared by every agent's row on that market.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct MarketFacts {
    pub category: String,
    pub b_bp: ProbabilityBp,
    pub outcome: Outcome,
    pub q: Option<f64>,
}

/// Validated campaign table.
///
/// Keys `(round_id, agent, market_idx)` are unique, and all rows on the
/// same `(round_id, market_idx)` agree on category, benchmark, outcome and
/// latent probability. Row order is preserved as given.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignRecord {
    rows: Vec<CampaignRow>,
}

impl CampaignRecord {
    pub fn new(rows: Vec<CampaignRow>) -> Result<Self, ReportError> {
        let mut keys = HashSet::with_capacity(rows.len());
        let mut markets: HashMap<(u64, u32), MarketFacts> = HashMap::new();
        for row in &rows {
            validate_row(row)?;
            if !keys.insert((row.round_id, row.agent.as_str(), row.market_idx)) {
                return Err(ReportError::DuplicateKey {
                    round_id: row.round_id,
                    agent: row.agent.clone(),
                    market_idx: row.market_idx,
                });
            }
            let facts = MarketFacts::of(row);
            match markets.get(&(row.round_id, row.market_idx)) {
                Some(existing) if *existing != facts => {
                    return Err(ReportError::InconsistentMarket { round_id: row.round_id, market_idx: row.market_idx })
                }
                Some(_) => {}
                None => {
                    markets.insert((row.round_id, row.market_idx), facts);
                }
            }
        }
        Ok(CampaignRecord { rows })
    }

    pub fn rows(&self) -> &[CampaignRow] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<CampaignRow> {
        self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Agent labels in order of first appearance.
    pub fn agents(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.rows.iter().map(|r| r.agent.as_str()).filter(|a| seen.insert(*a)).collect()
    }

    /// Distinct round ids, ascending.
    pub fn round_ids(&self) -> Vec<u64> {
        let mut ids: Vec<u64> = self.rows.iter().map(|r| r.round_id).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Categories in order of first appearance.
    pub fn categories(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.rows.iter().map(|r| r.category.as_str()).filter(|c| seen.insert(*c)).collect()
    }

    pub(crate) fn markets(&self) -> BTreeMap<(u64, u32), MarketFacts> {
        let mut out = BTreeMap::new();
        for row in &self.rows {
            out.entry((row.round_id, row.market_idx)).or_insert_with(|| MarketFacts::of(row));
        }
        out
    }
}

impl MarketFacts {
    fn of(row: &CampaignRow) -> Self {
        MarketFacts { category: row.category.clone(), b_bp: row.b_bp, outcome: row.outcome, q: row.q }
    }
}

fn validate_row(row: &CampaignRow) -> Result<(), ReportError> {
    if row.agent.is_empty() {
        return Err(ReportError::InvalidRow("empty agent label".into()));
    }
    if row.category.is_empty() {
        return Err(ReportError::InvalidRow("empty category".into()));
    }
    if let Some(q) = row.q {
        if !(0.0..=1.0).contains(&q) {
            return Err(ReportError::InvalidRow(format!("latent probability {q} outside [0, 1]")));
        }
    }
    Ok(())
}
