//! Randomized commit-reveal checks.
//!
//! Each case draws a 256-bit round id, 1 to 32 predictions and a salt, then
//! plays a round to the reveal. The exact opening must be accepted. Four
//! single-field mutations must each be rejected: another round id, one
//! prediction changed, one salt bit flipped, and one prediction added or
//! removed. Finally the round is resolved and scored, written to text, and
//! replayed; the replay must equal the original.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use super::{
    compute_commit_hash_with, parse_event_log, write_event_log, AgentId, Market, MockOracle, Packing, ProtocolError,
    Reveal, Round, RoundId,
};
use crate::scoring::{Outcome, ProbabilityBp};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FuzzReport {
    pub cases: usize,
    pub verified: usize,
    pub mutations: usize,
    pub mutations_rejected: usize,
    pub replays_identical: usize,
    /// Descriptions of the first few failures.
    pub failures: Vec<String>,
}

impl FuzzReport {
    pub fn passed(&self) -> bool {
        self.verified == self.cases && self.mutations_rejected == self.mutations && self.replays_identical == self.cases
    }

    fn fail(&mut self, case: usize, what: String) {
        if self.failures.len() < 16 {
            self.failures.push(format!("case {case}: {what}"));
        }
    }
}

const MAX_PREDICTIONS: usize = 32;

pub fn fuzz_commit_reveal(cases: usize, seed: u64, packing: Packing) -> FuzzReport {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut report = FuzzReport { cases, ..FuzzReport::default() };
    let agent = AgentId::from_label("fuzz");
    for case in 0..cases {
        let mut id = [0u8; 32];
        rng.fill_bytes(&mut id);
        let round_id = RoundId(id);
        let k = rng.random_range(1..=MAX_PREDICTIONS);
        let predictions: Vec<ProbabilityBp> =
            (0..k).map(|_| ProbabilityBp::new(rng.random_range(0..=10_000)).expect("in range")).collect();
        let mut salt = [0u8; 32];
        rng.fill_bytes(&mut salt);
        let hash = match compute_commit_hash_with(&round_id, &predictions, &salt, packing) {
            Ok(h) => h,
            Err(e) => {
                report.fail(case, format!("hash: {e}"));
                continue;
            }
        };
        let open = |id: RoundId| -> Result<Round, ProtocolError> {
            let markets = (0..k as u64).map(|m| Market { id: m, category: "fuzz".into() }).collect();
            let mut round = Round::with_packing(id, markets, 10, 20, packing)?;
            round.open_commits()?;
            round.submit_commit(agent, hash, case as u64, 1)?;
            round.record_benchmarks(vec![ProbabilityBp::new(5000).expect("in range"); k], 10)?;
            Ok(round)
        };
        let try_reveal = |id: RoundId, predictions: Vec<ProbabilityBp>, salt: [u8; 32]| {
            open(id)?.submit_reveal(Reveal { agent, predictions, salt }, 11)
        };

        // Mutations.
        let mut other_id = id;
        other_id[rng.random_range(0..32)] ^= 1 << rng.random_range(0..8);
        let mut other_preds = predictions.clone();
        let i = rng.random_range(0..k);
        let shift = rng.random_range(1..=10_000u32);
        other_preds[i] = ProbabilityBp::new((other_preds[i].value() as u32 + shift) % 10_001).expect("in range");
        let mut other_salt = salt;
        other_salt[rng.random_range(0..32)] ^= 1 << rng.random_range(0..8);
        let mut resized = predictions.clone();
        if k > 1 && rng.random_bool(0.5) {
            resized.pop();
        } else {
            resized.push(ProbabilityBp::new(rng.random_range(0..=10_000)).expect("in range"));
        }
        let mutations = [
            ("round id", try_reveal(RoundId(other_id), predictions.clone(), salt)),
            ("prediction", try_reveal(round_id, other_preds, salt)),
            ("salt", try_reveal(round_id, predictions.clone(), other_salt)),
            ("length", try_reveal(round_id, resized, salt)),
        ];
        for (name, result) in mutations {
            report.mutations += 1;
            match result {
                Err(ProtocolError::HashMismatch(_)) | Err(ProtocolError::LengthMismatch { .. }) => {
                    report.mutations_rejected += 1
                }
                other => report.fail(case, format!("{name} mutation gave {other:?}")),
            }
        }

        // Exact opening, then the rest of the lifecycle and a replay.
        let played = (|| -> Result<Round, ProtocolError> {
            let mut round = open(round_id)?;
            round.submit_reveal(Reveal { agent, predictions: predictions.clone(), salt }, 11)?;
            let mut oracle = MockOracle::new();
            for m in 0..k as u64 {
                oracle.resolve(m, Outcome::Resolved(rng.random_range(0..=1)));
            }
            round.trigger_outcomes(&oracle, 20)?;
            round.score_round()?;
            Ok(round)
        })();
        let round = match played {
            Ok(r) => r,
            Err(e) => {
                report.fail(case, format!("exact reveal rejected: {e}"));
                continue;
            }
        };
        report.verified += 1;
        match parse_event_log(&write_event_log(round.log())).and_then(|events| Round::replay(&events)) {
            Ok(replayed) if replayed == round => report.replays_identical += 1,
            Ok(_) => report.fail(case, "replay differs".into()),
            Err(e) => report.fail(case, format!("replay failed: {e}")),
        }
    }
    report
}
