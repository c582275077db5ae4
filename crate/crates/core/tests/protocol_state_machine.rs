use forecast_core::protocol::{
    compute_commit_hash_with, parse_event_log, write_event_log, AgentId, Market, MockOracle, Packing, Phase,
    ProtocolError, Reveal, Round, RoundId,
};
use forecast_core::{Outcome, ProbabilityBp};
use proptest::prelude::*;

const MARKETS: usize = 3;

#[derive(Debug, Clone)]
enum Op {
    Open,
    Commit { agent: u8, salt: u8, time: u64 },
    Benchmarks { time: u64 },
    Reveal { agent: u8, salt: u8, tamper: bool, time: u64 },
    Outcomes { resolved: [Option<u8>; MARKETS], time: u64 },
    Score,
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        Just(Op::Open),
        (0u8..4, 0u8..2, 0u64..25).prop_map(|(agent, salt, time)| Op::Commit { agent, salt, time }),
        (0u64..25).prop_map(|time| Op::Benchmarks { time }),
        (0u8..4, 0u8..2, any::<bool>(), 0u64..25).prop_map(|(agent, salt, tamper, time)| Op::Reveal { agent, salt, tamper, time }),
        (prop::array::uniform3(prop::option::of(0u8..=1)), 0u64..25).prop_map(|(resolved, time)| Op::Outcomes { resolved, time }),
        Just(Op::Score),
    ]
}

fn agent(i: u8) -> AgentId {
    AgentId::from_label(&format!("agent-{i}"))
}

fn predictions(i: u8) -> Vec<ProbabilityBp> {
    (0..MARKETS).map(|m| ProbabilityBp::new(1000 * (i as u32 + 1) + m as u32).unwrap()).collect()
}

fn round(packing: Packing) -> Round {
    let markets = (0..MARKETS as u64).map(|id| Market { id, category: "c".into() }).collect();
    Round::with_packing(RoundId::from(77), markets, 10, 20, packing).unwrap()
}

fn step(r: &mut Round, op: &Op) -> Result<(), ProtocolError> {
    match op {
        Op::Open => r.open_commits(),
        Op::Commit { agent: a, salt, time } => {
            let hash = compute_commit_hash_with(&r.id(), &predictions(*a), &[*salt; 32], r.packing())?;
            r.submit_commit(agent(*a), hash, *a as u64, *time)
        }
        Op::Benchmarks { time } => r.record_benchmarks(vec![ProbabilityBp::new(5000).unwrap(); MARKETS], *time),
        Op::Reveal { agent: a, salt, tamper, time } => {
            let mut p = predictions(*a);
            if *tamper {
                p[0] = ProbabilityBp::new(p[0].value() as u32 + 1).unwrap();
            }
            r.submit_reveal(Reveal { agent: agent(*a), predictions: p, salt: [*salt; 32] }, *time)
        }
        Op::Outcomes { resolved, time } => {
            let mut oracle = MockOracle::new();
            for (id, o) in resolved.iter().enumerate() {
                if let Some(x) = o {
                    oracle.resolve(id as u64, Outcome::Resolved(*x));
                }
            }
            r.trigger_outcomes(&oracle, *time)
        }
        Op::Score => r.score_round().map(|_| ()),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn failed_ops_leave_round_unchanged_and_log_replays(ops in prop::collection::vec(op(), 0..40), big in any::<bool>()) {
        let packing = if big { Packing::BigEndian } else { Packing::LittleEndian };
        let mut r = round(packing);
        let mut last_phase = r.phase();
        for op in &ops {
            let before = r.clone();
            match step(&mut r, op) {
                Ok(()) => prop_assert_eq!(r.log().len(), before.log().len() + 1),
                Err(_) => prop_assert_eq!(&r, &before),
            }
            prop_assert!(r.phase() >= last_phase);
            last_phase = r.phase();
        }
        prop_assert_eq!(&Round::replay(r.log()).unwrap(), &r);
        let text = write_event_log(r.log());
        prop_assert_eq!(&Round::replay(&parse_event_log(&text).unwrap()).unwrap(), &r);
    }

    #[test]
    fn only_committed_matching_reveals_are_scored(ops in prop::collection::vec(op(), 0..40)) {
        let mut r = round(Packing::LittleEndian);
        for op in &ops {
            let _ = step(&mut r, op);
        }
        for (a, p) in r.revealed() {
            prop_assert!(r.commitments().contains_key(a));
            let i = (0..4u8).find(|i| agent(*i) == *a).unwrap();
            prop_assert_eq!(p, &predictions(i));
        }
        if r.phase() == Phase::Scored {
            let scored: Vec<_> = r.scores().keys().collect();
            let revealed: Vec<_> = r.revealed().keys().collect();
            prop_assert_eq!(scored, revealed);
        }
    }
}
