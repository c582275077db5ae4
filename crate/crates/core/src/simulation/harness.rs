//! Plays a campaign through the commit-reveal protocol.

use std::collections::BTreeMap;

use rand::RngCore;

use super::{substream, SimulationError};
use crate::protocol::{
    compute_commit_hash_with, AgentId, Event, Market, MockOracle, Packing, ProtocolError, Reveal, Round, RoundId,
};
use crate::report::{CampaignRecord, CampaignRow};
use crate::scoring::{alpha_score, score_markets_bp, MarketScoreInput, Outcome, ProbabilityBp, RoundScoreBp};

/// Fault injected by negative tests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tamper {
    /// Reveal with one salt bit flipped.
    Salt { round_id: u64, agent: String },
    /// Reveal with one prediction nudged by 1 bp.
    Prediction { round_id: u64, agent: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HarnessOptions {
    /// Seeds the per-(round, agent) salts.
    pub salt_seed: u64,
    pub packing: Packing,
    /// `(round_id, market_idx)` pairs the oracle leaves unresolved.
    pub force_unresolved: Vec<(u64, u32)>,
    pub tamper: Option<Tamper>,
}

impl Default for HarnessOptions {
    fn default() -> Self {
        HarnessOptions { salt_seed: 0x5a17, packing: Packing::default(), force_unresolved: Vec::new(), tamper: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LedgerEntry {
    pub round_id: u64,
    pub agent: String,
    pub score: RoundScoreBp,
}

/// Final rounds and their scores. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredLedger {
    rounds: Vec<Round>,
    entries: Vec<LedgerEntry>,
    agents: Vec<(String, AgentId)>,
}

impl ScoredLedger {
    pub fn rounds(&self) -> &[Round] {
        &self.rounds
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn agents(&self) -> &[(String, AgentId)] {
        &self.agents
    }

    /// Resolved predictions scored for `agent` across all rounds.
    pub fn scored_predictions(&self, agent: &str) -> usize {
        self.entries.iter().filter(|e| e.agent == agent).map(|e| e.score.resolved).sum()
    }

    /// Every round's event log, in round order.
    pub fn events(&self) -> Vec<Event> {
        self.rounds.iter().flat_map(|r| r.log().iter().cloned()).collect()
    }
}

// Logical clock of every round.
const T_COMMIT: u64 = 1;
const T_COMMIT_DEADLINE: u64 = 10;
const T_REVEAL: u64 = 11;
const T_REVEAL_DEADLINE: u64 = 20;

/// Market id used on the protocol side.
pub fn protocol_market_id(round_id: u64, market_idx: u32) -> u64 {
    (round_id << 32) | market_idx as u64
}

/// Drives each round through commit, benchmark recording, reveal, oracle
/// resolution and scoring, then checks every protocol score against direct
/// evaluation: bit-equal to the basis-point path and within one score unit
/// of the real-valued path.
pub fn run_through_protocol(record: &CampaignRecord, options: &HarnessOptions) -> Result<ScoredLedger, SimulationError> {
    let agents: Vec<(String, AgentId)> =
        record.agents().into_iter().map(|a| (a.to_string(), AgentId::from_label(a))).collect();
    let mut by_round: BTreeMap<u64, BTreeMap<&str, Vec<&CampaignRow>>> = BTreeMap::new();
    for row in record.rows() {
        by_round.entry(row.round_id).or_default().entry(row.agent.as_str()).or_default().push(row);
    }
    let mut rounds = Vec::new();
    let mut entries = Vec::new();
    for (round_id, mut per_agent) in by_round {
        for rows in per_agent.values_mut() {
            rows.sort_by_key(|r| r.market_idx);
        }
        let (round, scored) = play_round(round_id, &per_agent, &agents, options)?;
        rounds.push(round);
        entries.extend(scored);
    }
    Ok(ScoredLedger { rounds, entries, agents })
}

fn play_round(
    round_id: u64,
    per_agent: &BTreeMap<&str, Vec<&CampaignRow>>,
    agents: &[(String, AgentId)],
    options: &HarnessOptions,
) -> Result<(Round, Vec<LedgerEntry>), SimulationError> {
    let wrap = |source| SimulationError::Protocol { round_id, source };
    let template = per_agent.values().next().expect("round has rows");
    let indices: Vec<u32> = template.iter().map(|r| r.market_idx).collect();
    for (agent, rows) in per_agent {
        if rows.iter().map(|r| r.market_idx).ne(indices.iter().copied()) {
            return Err(SimulationError::InvalidCampaign(format!("round {round_id}: {agent} skips markets")));
        }
    }
    let markets: Vec<Market> = template
        .iter()
        .map(|r| Market { id: protocol_market_id(round_id, r.market_idx), category: r.category.clone() })
        .collect();
    let outcomes: Vec<Outcome> = template
        .iter()
        .map(|r| {
            if options.force_unresolved.contains(&(round_id, r.market_idx)) {
                Outcome::Unresolved
            } else {
                r.outcome
            }
        })
        .collect();
    let benchmarks: Vec<_> = template.iter().map(|r| r.b_bp).collect();

    let id = RoundId::from(round_id);
    let mut round =
        Round::with_packing(id, markets.clone(), T_COMMIT_DEADLINE, T_REVEAL_DEADLINE, options.packing).map_err(wrap)?;
    round.open_commits().map_err(wrap)?;

    let mut reveals = Vec::new();
    for (index, (label, agent_id)) in agents.iter().enumerate() {
        let Some(rows) = per_agent.get(label.as_str()) else { continue };
        let predictions: Vec<_> = rows.iter().map(|r| r.p_bp).collect();
        let mut salt = [0u8; 32];
        substream(b"salts", options.salt_seed, round_id, index as u64).fill_bytes(&mut salt);
        let hash = compute_commit_hash_with(&id, &predictions, &salt, options.packing).map_err(wrap)?;
        round.submit_commit(*agent_id, hash, round_id, T_COMMIT).map_err(wrap)?;
        reveals.push(tampered(Reveal { agent: *agent_id, predictions, salt }, round_id, label, options));
    }
    round.record_benchmarks(benchmarks.clone(), T_COMMIT_DEADLINE).map_err(wrap)?;
    for reveal in reveals {
        round.submit_reveal(reveal, T_REVEAL).map_err(wrap)?;
    }
    let mut oracle = MockOracle::new();
    for (m, outcome) in markets.iter().zip(&outcomes) {
        oracle.resolve(m.id, *outcome);
    }
    round.trigger_outcomes(&oracle, T_REVEAL_DEADLINE).map_err(wrap)?;
    round.score_round().map_err(wrap)?;

    let mut entries = Vec::new();
    for (label, agent_id) in agents {
        let Some(rows) = per_agent.get(label.as_str()) else { continue };
        let Some(score) = round.scores().get(agent_id).copied() else { continue };
        let inputs: Vec<MarketScoreInput> = rows
            .iter()
            .zip(&outcomes)
            .map(|(r, o)| MarketScoreInput { prediction: r.p_bp, benchmark: r.b_bp, outcome: *o })
            .collect();
        let direct = score_markets_bp(&inputs).map_err(|e| wrap(ProtocolError::Scoring(e)))?;
        if score != direct || !matches_real_path(&inputs, &score) {
            return Err(SimulationError::ScoreMismatch { round_id, agent: label.clone() });
        }
        entries.push(LedgerEntry { round_id, agent: label.clone(), score });
    }
    Ok((round, entries))
}

fn tampered(mut reveal: Reveal, round_id: u64, label: &str, options: &HarnessOptions) -> Reveal {
    match &options.tamper {
        Some(Tamper::Salt { round_id: r, agent }) if *r == round_id && agent == label => reveal.salt[0] ^= 1,
        Some(Tamper::Prediction { round_id: r, agent }) if *r == round_id && agent == label => {
            let p = &mut reveal.predictions[0];
            let v = p.value() as u32;
            *p = ProbabilityBp::new(if v == 0 { 1 } else { v - 1 }).expect("in range");
        }
        _ => {}
    }
    reveal
}

/// Two half-up roundings separate the fixed-point alpha from the real one.
fn matches_real_path(inputs: &[MarketScoreInput], score: &RoundScoreBp) -> bool {
    let resolved: Vec<_> = inputs.iter().filter_map(|m| m.outcome.value().map(|x| (m, x))).collect();
    let b: Vec<f64> = resolved.iter().map(|(m, _)| m.benchmark.to_real()).collect();
    let p: Vec<f64> = resolved.iter().map(|(m, _)| m.prediction.to_real()).collect();
    let x: Vec<u8> = resolved.iter().map(|(_, x)| *x).collect();
    match alpha_score(&b, &p, &x) {
        Ok(real) => (real - score.alpha.to_real()).abs() <= 1.0e-8 + 1e-15,
        Err(_) => false,
    }
}
