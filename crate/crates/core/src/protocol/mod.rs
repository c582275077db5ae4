//! Commit-reveal round lifecycle.
//!
//! A [`Round`] walks `Created → CommitOpen → RevealOpen → Resolved → Scored`
//! and never moves backward. Every accepted mutation is appended to the
//! round's event log; [`Round::replay`] rebuilds an identical round from it.
//! Time is a caller-supplied logical timestamp. Windows are closed-open: a
//! commit at exactly the commit deadline is late.
//!
//! A `Round` is single-writer. Distinct rounds are independent values and
//! may be driven from different threads.

mod commit;
mod events;
mod fuzz;
mod oracle;
pub mod typed_data;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use commit::{
    commit_preimage, compute_commit_hash, compute_commit_hash_with, keccak256, predictions_from_raw,
    AgentId, Packing, RoundId,
};
pub use events::{parse_event_lines, parse_event_log, write_event_log, Event, EventKind, EVENT_LOG_HEADER};
pub use fuzz::{fuzz_commit_reveal, FuzzReport};
pub use oracle::{MockOracle, OutcomeOracle, PayoutReport};

use crate::scoring::{score_markets_bp, MarketScoreInput, Outcome, ProbabilityBp, RoundScoreBp, ScoringError};

pub type Timestamp = u64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("operation not allowed in phase {actual:?} (expected {expected:?})")]
    WrongPhase { expected: Phase, actual: Phase },
    #[error("commit at {now} is not before the deadline {deadline}")]
    LateCommit { now: Timestamp, deadline: Timestamp },
    #[error("reveal at {now} is not before the deadline {deadline}")]
    LateReveal { now: Timestamp, deadline: Timestamp },
    #[error("too early: {now} is before {opens}")]
    TooEarly { now: Timestamp, opens: Timestamp },
    #[error("agent {0} already committed")]
    DuplicateCommit(AgentId),
    #[error("agent {0} already revealed")]
    DuplicateReveal(AgentId),
    #[error("agent {0} has no commitment")]
    NoCommitment(AgentId),
    #[error("revealed values do not match the commitment of agent {0}")]
    HashMismatch(AgentId),
    #[error("expected {expected} values, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("malformed payout report {0:?}")]
    MalformedReport(PayoutReport),
    #[error("prediction {0} exceeds 10000 bp")]
    PredictionOutOfRange(u32),
    #[error("prediction vector is empty")]
    EmptyPredictions,
    #[error("round needs at least one market")]
    NoMarkets,
    #[error("deadlines out of order: commit {commit} must precede reveal {reveal}")]
    DeadlineOrder { commit: Timestamp, reveal: Timestamp },
    #[error("no resolved markets in round")]
    NoResolvedMarkets,
    #[error("event log: {0}")]
    Decode(String),
    #[error("scoring: {0}")]
    Scoring(ScoringError),
}

/// Lifecycle phase, ordered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Phase {
    Created,
    CommitOpen,
    RevealOpen,
    Resolved,
    Scored,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Market {
    pub id: u64,
    pub category: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Commitment {
    pub agent: AgentId,
    pub hash: [u8; 32],
    pub nonce: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Reveal {
    pub agent: AgentId,
    pub predictions: Vec<ProbabilityBp>,
    pub salt: [u8; 32],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Round {
    id: RoundId,
    markets: Vec<Market>,
    commit_deadline: Timestamp,
    reveal_deadline: Timestamp,
    packing: Packing,
    phase: Phase,
    benchmarks: Option<Vec<ProbabilityBp>>,
    commitments: BTreeMap<AgentId, Commitment>,
    reveals: BTreeMap<AgentId, Vec<ProbabilityBp>>,
    outcomes: Vec<Outcome>,
    scores: BTreeMap<AgentId, RoundScoreBp>,
    log: Vec<Event>,
}

impl Round {
    pub fn new(
        id: RoundId,
        markets: Vec<Market>,
        commit_deadline: Timestamp,
        reveal_deadline: Timestamp,
    ) -> Result<Self, ProtocolError> {
        Self::with_packing(id, markets, commit_deadline, reveal_deadline, Packing::default())
    }

    pub fn with_packing(
        id: RoundId,
        markets: Vec<Market>,
        commit_deadline: Timestamp,
        reveal_deadline: Timestamp,
        packing: Packing,
    ) -> Result<Self, ProtocolError> {
        if markets.is_empty() {
            return Err(ProtocolError::NoMarkets);
        }
        if commit_deadline >= reveal_deadline {
            return Err(ProtocolError::DeadlineOrder { commit: commit_deadline, reveal: reveal_deadline });
        }
        let n = markets.len();
        let create = Event::Create { round_id: id, commit_deadline, reveal_deadline, packing, markets: markets.clone() };
        Ok(Round {
            id,
            markets,
            commit_deadline,
            reveal_deadline,
            packing,
            phase: Phase::Created,
            benchmarks: None,
            commitments: BTreeMap::new(),
            reveals: BTreeMap::new(),
            outcomes: vec![Outcome::Unresolved; n],
            scores: BTreeMap::new(),
            log: vec![create],
        })
    }

    pub fn id(&self) -> RoundId {
        self.id
    }

    pub fn markets(&self) -> &[Market] {
        &self.markets
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn commit_deadline(&self) -> Timestamp {
        self.commit_deadline
    }

    pub fn reveal_deadline(&self) -> Timestamp {
        self.reveal_deadline
    }

    pub fn packing(&self) -> Packing {
        self.packing
    }

    pub fn benchmarks(&self) -> Option<&[ProbabilityBp]> {
        self.benchmarks.as_deref()
    }

    pub fn commitments(&self) -> &BTreeMap<AgentId, Commitment> {
        &self.commitments
    }

    pub fn revealed(&self) -> &BTreeMap<AgentId, Vec<ProbabilityBp>> {
        &self.reveals
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn scores(&self) -> &BTreeMap<AgentId, RoundScoreBp> {
        &self.scores
    }

    /// Agents that committed but never revealed; they receive no score.
    pub fn absent(&self) -> Vec<AgentId> {
        self.commitments.keys().filter(|a| !self.reveals.contains_key(a)).copied().collect()
    }

    pub fn log(&self) -> &[Event] {
        &self.log
    }

    fn expect_phase(&self, expected: Phase) -> Result<(), ProtocolError> {
        if self.phase != expected {
            return Err(ProtocolError::WrongPhase { expected, actual: self.phase });
        }
        Ok(())
    }

    fn commit_layout_hash(&self, predictions: &[ProbabilityBp], salt: &[u8; 32]) -> Result<[u8; 32], ProtocolError> {
        compute_commit_hash_with(&self.id, predictions, salt, self.packing)
    }

    pub fn open_commits(&mut self) -> Result<(), ProtocolError> {
        self.apply(Event::OpenCommits)
    }

    pub fn submit_commit(&mut self, agent: AgentId, hash: [u8; 32], nonce: u64, now: Timestamp) -> Result<(), ProtocolError> {
        self.apply(Event::Commit { agent, hash, nonce, at: now })
    }

    /// Freezes benchmark prices and opens the reveal window.
    pub fn record_benchmarks(&mut self, prices: Vec<ProbabilityBp>, now: Timestamp) -> Result<(), ProtocolError> {
        self.apply(Event::Benchmarks { prices, at: now })
    }

    pub fn submit_reveal(&mut self, reveal: Reveal, now: Timestamp) -> Result<(), ProtocolError> {
        self.apply(Event::Reveal { agent: reveal.agent, predictions: reveal.predictions, salt: reveal.salt, at: now })
    }

    /// Reads every market's payout from `oracle`; unresolved markets stay unresolved.
    pub fn trigger_outcomes(&mut self, oracle: &dyn OutcomeOracle, now: Timestamp) -> Result<(), ProtocolError> {
        let reports = self.markets.iter().map(|m| oracle.payout(m.id)).collect();
        self.apply(Event::Outcomes { reports, at: now })
    }

    /// Scores every revealing agent over the resolved markets.
    pub fn score_round(&mut self) -> Result<&BTreeMap<AgentId, RoundScoreBp>, ProtocolError> {
        self.apply(Event::Score)?;
        Ok(&self.scores)
    }

    /// Applies one event; on error the round is unchanged.
    pub fn apply(&mut self, event: Event) -> Result<(), ProtocolError> {
        match &event {
            Event::Create { .. } => {
                return Err(ProtocolError::WrongPhase { expected: Phase::Created, actual: self.phase });
            }
            Event::OpenCommits => {
                self.expect_phase(Phase::Created)?;
                self.phase = Phase::CommitOpen;
            }
            Event::Commit { agent, hash, nonce, at } => {
                self.expect_phase(Phase::CommitOpen)?;
                if *at >= self.commit_deadline {
                    return Err(ProtocolError::LateCommit { now: *at, deadline: self.commit_deadline });
                }
                if self.commitments.contains_key(agent) {
                    return Err(ProtocolError::DuplicateCommit(*agent));
                }
                self.commitments.insert(*agent, Commitment { agent: *agent, hash: *hash, nonce: *nonce });
            }
            Event::Benchmarks { prices, at } => {
                self.expect_phase(Phase::CommitOpen)?;
                if *at < self.commit_deadline {
                    return Err(ProtocolError::TooEarly { now: *at, opens: self.commit_deadline });
                }
                if prices.len() != self.markets.len() {
                    return Err(ProtocolError::LengthMismatch { expected: self.markets.len(), actual: prices.len() });
                }
                self.benchmarks = Some(prices.clone());
                self.phase = Phase::RevealOpen;
            }
            Event::Reveal { agent, predictions, salt, at } => {
                self.expect_phase(Phase::RevealOpen)?;
                if *at >= self.reveal_deadline {
                    return Err(ProtocolError::LateReveal { now: *at, deadline: self.reveal_deadline });
                }
                let stored = self.commitments.get(agent).ok_or(ProtocolError::NoCommitment(*agent))?;
                if self.reveals.contains_key(agent) {
                    return Err(ProtocolError::DuplicateReveal(*agent));
                }
                if predictions.is_empty() {
                    return Err(ProtocolError::EmptyPredictions);
                }
                if self.commit_layout_hash(predictions, salt)? != stored.hash {
                    return Err(ProtocolError::HashMismatch(*agent));
                }
                if predictions.len() != self.markets.len() {
                    return Err(ProtocolError::LengthMismatch { expected: self.markets.len(), actual: predictions.len() });
                }
                self.reveals.insert(*agent, predictions.clone());
            }
            Event::Outcomes { reports, at } => {
                self.expect_phase(Phase::RevealOpen)?;
                if *at < self.reveal_deadline {
                    return Err(ProtocolError::TooEarly { now: *at, opens: self.reveal_deadline });
                }
                if reports.len() != self.markets.len() {
                    return Err(ProtocolError::LengthMismatch { expected: self.markets.len(), actual: reports.len() });
                }
                let outcomes = reports.iter().map(PayoutReport::outcome).collect::<Result<Vec<_>, _>>()?;
                self.outcomes = outcomes;
                self.phase = Phase::Resolved;
            }
            Event::Score => {
                self.expect_phase(Phase::Resolved)?;
                if !self.outcomes.iter().any(|o| o.is_resolved()) {
                    return Err(ProtocolError::NoResolvedMarkets);
                }
                let benchmarks = self.benchmarks.as_ref().expect("benchmarks recorded before reveal");
                let mut scores = BTreeMap::new();
                for (agent, predictions) in &self.reveals {
                    let inputs: Vec<MarketScoreInput> = predictions
                        .iter()
                        .zip(benchmarks)
                        .zip(&self.outcomes)
                        .map(|((&prediction, &benchmark), &outcome)| MarketScoreInput { prediction, benchmark, outcome })
                        .collect();
                    let score = score_markets_bp(&inputs).map_err(ProtocolError::Scoring)?;
                    scores.insert(*agent, score);
                }
                self.scores = scores;
                self.phase = Phase::Scored;
            }
        }
        self.log.push(event);
        Ok(())
    }

    /// Rebuilds a round from its event log.
    pub fn replay(events: &[Event]) -> Result<Round, ProtocolError> {
        let (first, rest) = events.split_first().ok_or_else(|| ProtocolError::Decode("empty event log".into()))?;
        let Event::Create { round_id, commit_deadline, reveal_deadline, packing, markets } = first else {
            return Err(ProtocolError::Decode("event log must start with a create event".into()));
        };
        let mut round = Round::with_packing(*round_id, markets.clone(), *commit_deadline, *reveal_deadline, *packing)?;
        for event in rest {
            round.apply(event.clone())?;
        }
        Ok(round)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bp(raw: &[u32]) -> Vec<ProbabilityBp> {
        predictions_from_raw(raw).unwrap()
    }

    fn markets(n: usize) -> Vec<Market> {
        (0..n).map(|i| Market { id: 100 + i as u64, category: "Crypto".into() }).collect()
    }

    fn open_round(n: usize) -> Round {
        let mut r = Round::new(RoundId::from(9), markets(n), 10, 20).unwrap();
        r.open_commits().unwrap();
        r
    }

    fn commit(r: &mut Round, label: &str, preds: &[u32], salt: u8, now: Timestamp) -> Reveal {
        let agent = AgentId::from_label(label);
        let predictions = bp(preds);
        let salt = [salt; 32];
        let hash = compute_commit_hash(&r.id(), &predictions, &salt).unwrap();
        r.submit_commit(agent, hash, 0, now).unwrap();
        Reveal { agent, predictions, salt }
    }

    #[test]
    fn commit_window_rules() {
        let mut r = open_round(1);
        let agent = AgentId::from_label("a");
        r.submit_commit(agent, [1; 32], 0, 3).unwrap();
        assert_eq!(r.submit_commit(agent, [2; 32], 1, 4), Err(ProtocolError::DuplicateCommit(agent)));
        let late = AgentId::from_label("late");
        assert_eq!(r.submit_commit(late, [1; 32], 0, 10), Err(ProtocolError::LateCommit { now: 10, deadline: 10 }));
        r.submit_commit(late, [1; 32], 0, 9).unwrap();

        let mut fresh = Round::new(RoundId::from(1), markets(1), 10, 20).unwrap();
        assert!(matches!(fresh.submit_commit(agent, [0; 32], 0, 1), Err(ProtocolError::WrongPhase { .. })));
    }

    #[test]
    fn benchmark_recording_is_set_once() {
        let mut r = open_round(7);
        assert!(matches!(r.record_benchmarks(bp(&[5000; 7]), 9), Err(ProtocolError::TooEarly { .. })));
        assert_eq!(
            r.record_benchmarks(bp(&[5000; 6]), 10),
            Err(ProtocolError::LengthMismatch { expected: 7, actual: 6 })
        );
        r.record_benchmarks(bp(&[5000; 7]), 10).unwrap();
        assert_eq!(r.phase(), Phase::RevealOpen);
        assert!(matches!(r.record_benchmarks(bp(&[4000; 7]), 11), Err(ProtocolError::WrongPhase { .. })));
        assert_eq!(r.benchmarks().unwrap(), &bp(&[5000; 7])[..]);
    }

    #[test]
    fn reveal_rules() {
        let mut r = open_round(2);
        let good = commit(&mut r, "a", &[7000, 3000], 1, 1);
        r.record_benchmarks(bp(&[6000, 4000]), 10).unwrap();

        let mut tweaked = good.clone();
        tweaked.predictions[1] = ProbabilityBp::new(3001).unwrap();
        assert_eq!(r.submit_reveal(tweaked, 11), Err(ProtocolError::HashMismatch(good.agent)));
        let mut wrong_salt = good.clone();
        wrong_salt.salt[0] ^= 1;
        assert_eq!(r.submit_reveal(wrong_salt, 11), Err(ProtocolError::HashMismatch(good.agent)));

        let stranger = Reveal { agent: AgentId::from_label("x"), ..good.clone() };
        assert_eq!(r.submit_reveal(stranger.clone(), 11), Err(ProtocolError::NoCommitment(stranger.agent)));
        assert!(matches!(r.submit_reveal(good.clone(), 20), Err(ProtocolError::LateReveal { .. })));

        r.submit_reveal(good.clone(), 11).unwrap();
        assert_eq!(r.submit_reveal(good.clone(), 12), Err(ProtocolError::DuplicateReveal(good.agent)));
        assert_eq!(r.revealed()[&good.agent], good.predictions);
    }

    #[test]
    fn outcomes_follow_payout_encoding() {
        let mut r = open_round(3);
        r.record_benchmarks(bp(&[5000; 3]), 10).unwrap();
        let mut oracle = MockOracle::new();
        oracle.set(100, PayoutReport { numerators: [0, 1], denominator: 1 });
        oracle.set(101, PayoutReport { numerators: [1, 0], denominator: 1 });
        assert!(matches!(r.trigger_outcomes(&oracle, 19), Err(ProtocolError::TooEarly { .. })));
        r.trigger_outcomes(&oracle, 20).unwrap();
        assert_eq!(r.outcomes(), &[Outcome::Resolved(1), Outcome::Resolved(0), Outcome::Unresolved]);
        assert_eq!(r.phase(), Phase::Resolved);
    }

    #[test]
    fn malformed_report_rejected_without_state_change() {
        let mut r = open_round(1);
        r.record_benchmarks(bp(&[5000]), 10).unwrap();
        let mut oracle = MockOracle::new();
        oracle.set(100, PayoutReport { numerators: [1, 1], denominator: 2 });
        let before = r.clone();
        assert!(matches!(r.trigger_outcomes(&oracle, 20), Err(ProtocolError::MalformedReport(_))));
        assert_eq!(r, before);
    }

    #[test]
    fn worked_example_scores() {
        let mut r = open_round(1);
        let rev = commit(&mut r, "agent", &[8000], 3, 1);
        let echo = commit(&mut r, "echo", &[6000], 4, 2);
        commit(&mut r, "silent", &[1], 5, 3);
        r.record_benchmarks(bp(&[6000]), 10).unwrap();
        r.submit_reveal(rev.clone(), 11).unwrap();
        r.submit_reveal(echo.clone(), 12).unwrap();
        let mut oracle = MockOracle::new();
        oracle.resolve(100, Outcome::Resolved(1));
        r.trigger_outcomes(&oracle, 20).unwrap();
        let scores = r.score_round().unwrap().clone();
        assert_eq!(scores[&rev.agent].brier.to_string(), "0.04000000");
        assert_eq!(scores[&rev.agent].alpha.to_string(), "0.12000000");
        assert_eq!(scores[&echo.agent].alpha.units(), 0);
        assert_eq!(scores.len(), 2);
        assert_eq!(r.absent(), vec![AgentId::from_label("silent")]);
        assert_eq!(r.phase(), Phase::Scored);
        assert!(matches!(r.score_round(), Err(ProtocolError::WrongPhase { .. })));
    }

    #[test]
    fn unresolved_markets_excluded() {
        let preds = [9000, 2000, 5000, 7000, 1000, 6500, 3000];
        let bench = [8000, 3000, 5000, 6000, 2000, 7000, 4000];
        let xs = [Outcome::Resolved(1), Outcome::Unresolved, Outcome::Resolved(0), Outcome::Resolved(1),
                  Outcome::Unresolved, Outcome::Resolved(1), Outcome::Resolved(0)];
        let mut r = open_round(7);
        let rev = commit(&mut r, "a", &preds, 8, 1);
        r.record_benchmarks(bp(&bench), 10).unwrap();
        r.submit_reveal(rev.clone(), 11).unwrap();
        let mut oracle = MockOracle::new();
        for (i, x) in xs.iter().enumerate() {
            oracle.resolve(100 + i as u64, *x);
        }
        r.trigger_outcomes(&oracle, 20).unwrap();
        let got = r.score_round().unwrap()[&rev.agent];

        let keep: Vec<usize> = (0..7).filter(|&i| xs[i].is_resolved()).collect();
        let p: Vec<_> = keep.iter().map(|&i| ProbabilityBp::new(preds[i]).unwrap()).collect();
        let b: Vec<_> = keep.iter().map(|&i| ProbabilityBp::new(bench[i]).unwrap()).collect();
        let x: Vec<u8> = keep.iter().map(|&i| xs[i].value().unwrap()).collect();
        let direct = crate::scoring::brier_score_bp(&p, &x).unwrap();
        let direct_base = crate::scoring::brier_score_bp(&b, &x).unwrap();
        assert_eq!(got.resolved, 5);
        assert_eq!(got.brier, direct);
        assert_eq!(got.alpha, direct_base - direct);
    }

    #[test]
    fn all_unresolved_round_has_no_score() {
        let mut r = open_round(2);
        r.record_benchmarks(bp(&[5000, 5000]), 10).unwrap();
        r.trigger_outcomes(&MockOracle::new(), 25).unwrap();
        assert_eq!(r.score_round().unwrap_err(), ProtocolError::NoResolvedMarkets);
        assert_eq!(r.phase(), Phase::Resolved);
    }

    #[test]
    fn construction_validation() {
        assert_eq!(Round::new(RoundId::from(1), vec![], 1, 2).unwrap_err(), ProtocolError::NoMarkets);
        assert!(matches!(Round::new(RoundId::from(1), markets(1), 5, 5), Err(ProtocolError::DeadlineOrder { .. })));
    }

    #[test]
    fn replay_reproduces_round() {
        let mut r = open_round(2);
        let a = commit(&mut r, "a", &[7000, 2500], 1, 1);
        commit(&mut r, "b", &[100, 9900], 2, 2);
        r.record_benchmarks(bp(&[6000, 3000]), 10).unwrap();
        r.submit_reveal(a, 13).unwrap();
        let mut oracle = MockOracle::new();
        oracle.resolve(100, Outcome::Resolved(1)).resolve(101, Outcome::Resolved(0));
        r.trigger_outcomes(&oracle, 21).unwrap();
        r.score_round().unwrap();
        let again = Round::replay(r.log()).unwrap();
        assert_eq!(again, r);
        let text = write_event_log(r.log());
        assert_eq!(Round::replay(&parse_event_log(&text).unwrap()).unwrap(), r);
    }
}
