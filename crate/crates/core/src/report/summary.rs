use std::collections::BTreeMap;

use serde::Serialize;

use super::{CampaignRecord, CampaignRow, ReportError};
use crate::murphy::{alpha_anatomy, murphy_decompose, BinningSpec};
use crate::power::{alpha_t_test, beat_fraction, AlphaTestResult};
use crate::scoring::{brier_score_bp, cumulative_scores, score_markets_bp, MarketScoreInput, Outcome, RoundScoreBp};
use crate::{Anatomy, Murphy};

/// Label of the benchmark row in [`murphy_report`].
pub const MARKET_LABEL: &str = "market";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeaderboardRow {
    pub agent: String,
    /// Rounds with at least one resolved market.
    pub rounds: usize,
    /// Resolved predictions across those rounds.
    pub predictions: usize,
    pub brier: f64,
    pub brier_se: f64,
    pub alpha: AlphaTestResult,
    pub beat_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    /// Number of scored rounds so far, starting at 1.
    pub r: usize,
    pub round_id: u64,
    pub cumulative_alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub agent: String,
    pub points: Vec<TrajectoryPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategoryAgent {
    pub agent: String,
    pub rounds: usize,
    pub mean_alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategoryRow {
    pub category: String,
    pub rounds: usize,
    pub resolved_markets: usize,
    /// Mean per-round benchmark Brier over the category's markets.
    pub market_brier: f64,
    pub best_agent: String,
    pub best_alpha: f64,
    pub positive_agents: usize,
    pub agents: Vec<CategoryAgent>,
}

/// Round-weighted combination of the category rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategoryTotal {
    pub rounds: usize,
    pub market_brier: f64,
    pub agents: Vec<CategoryAgent>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategoryBreakdown {
    pub rows: Vec<CategoryRow>,
    pub total: CategoryTotal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MurphyRow {
    pub label: String,
    pub components: Murphy,
    /// Alpha split against the market row; absent when base rates differ.
    pub anatomy: Option<Anatomy>,
}

impl MurphyRow {
    pub fn residual(&self) -> f64 {
        self.components.residual()
    }
}

struct AgentSeries {
    agent: String,
    rounds: Vec<(u64, RoundScoreBp)>,
}

impl AgentSeries {
    fn alphas(&self) -> Vec<f64> {
        self.rounds.iter().map(|(_, s)| s.alpha.to_real()).collect()
    }

    fn briers(&self) -> Vec<f64> {
        self.rounds.iter().map(|(_, s)| s.brier.to_real()).collect()
    }
}

/// Per-agent, per-round bp scores over the rows accepted by `keep`. Rounds
/// where none of the agent's kept markets resolved are skipped.
fn agent_series(
    record: &CampaignRecord,
    keep: impl Fn(&CampaignRow) -> bool,
) -> Result<Vec<AgentSeries>, ReportError> {
    let agents = record.agents();
    let index: BTreeMap<&str, usize> = agents.iter().enumerate().map(|(i, a)| (*a, i)).collect();
    let mut groups: BTreeMap<(usize, u64), Vec<(u32, MarketScoreInput)>> = BTreeMap::new();
    for row in record.rows().iter().filter(|r| keep(r)) {
        let input = MarketScoreInput { prediction: row.p_bp, benchmark: row.b_bp, outcome: row.outcome };
        groups.entry((index[row.agent.as_str()], row.round_id)).or_default().push((row.market_idx, input));
    }
    let mut series: Vec<AgentSeries> =
        agents.iter().map(|a| AgentSeries { agent: a.to_string(), rounds: Vec::new() }).collect();
    for ((agent, round_id), mut markets) in groups {
        if !markets.iter().any(|(_, m)| m.outcome.is_resolved()) {
            continue;
        }
        markets.sort_by_key(|(idx, _)| *idx);
        let inputs: Vec<MarketScoreInput> = markets.into_iter().map(|(_, m)| m).collect();
        series[agent].rounds.push((round_id, score_markets_bp(&inputs)?));
    }
    series.retain(|s| !s.rounds.is_empty());
    Ok(series)
}

fn mean_and_se(values: &[f64]) -> Result<(f64, f64), ReportError> {
    let mean = cumulative_scores(values)?;
    let n = values.len() as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Ok((mean, var.sqrt() / n.sqrt()))
}

/// One row per agent, best (lowest) cumulative Brier first.
pub fn leaderboard(record: &CampaignRecord) -> Result<Vec<LeaderboardRow>, ReportError> {
    if record.is_empty() {
        return Err(ReportError::Empty);
    }
    let mut rows = Vec::new();
    for s in agent_series(record, |_| true)? {
        if s.rounds.len() < 2 {
            return Err(ReportError::InsufficientRounds { agent: s.agent, got: s.rounds.len(), needed: 2 });
        }
        let alphas = s.alphas();
        let (brier, brier_se) = mean_and_se(&s.briers())?;
        let mut alpha = alpha_t_test(&alphas)?;
        alpha.mean_alpha = cumulative_scores(&alphas)?;
        rows.push(LeaderboardRow {
            rounds: s.rounds.len(),
            predictions: s.rounds.iter().map(|(_, r)| r.resolved).sum(),
            brier,
            brier_se,
            alpha,
            beat_fraction: beat_fraction(&alphas)?,
            agent: s.agent,
        });
    }
    rows.sort_by(|a, b| a.brier.total_cmp(&b.brier).then_with(|| a.agent.cmp(&b.agent)));
    if rows.is_empty() {
        return Err(ReportError::InsufficientRounds { agent: String::new(), got: 0, needed: 2 });
    }
    Ok(rows)
}

/// Prefix means of per-round alpha, one series per agent.
pub fn trajectories(record: &CampaignRecord) -> Result<Vec<Trajectory>, ReportError> {
    if record.is_empty() {
        return Err(ReportError::Empty);
    }
    agent_series(record, |_| true)?
        .into_iter()
        .map(|s| {
            let alphas = s.alphas();
            let points = s
                .rounds
                .iter()
                .enumerate()
                .map(|(i, (round_id, _))| {
                    Ok(TrajectoryPoint { r: i + 1, round_id: *round_id, cumulative_alpha: cumulative_scores(&alphas[..=i])? })
                })
                .collect::<Result<Vec<_>, ReportError>>()?;
            Ok(Trajectory { agent: s.agent, points })
        })
        .collect()
}

/// Statistics recomputed on each category's markets alone.
///
/// Rows are ordered by round count, largest first. The total row weights
/// each category by the agent's scored rounds in it; when every round holds
/// a single category this reproduces the leaderboard mean alpha.
pub fn category_breakdown(record: &CampaignRecord) -> Result<CategoryBreakdown, ReportError> {
    let markets = record.markets();
    let mut rows = Vec::new();
    for category in record.categories() {
        let mut per_round: BTreeMap<u64, (Vec<_>, Vec<u8>)> = BTreeMap::new();
        for ((round_id, _), m) in markets.iter().filter(|(_, m)| m.category == category) {
            if let Outcome::Resolved(x) = m.outcome {
                let entry = per_round.entry(*round_id).or_default();
                entry.0.push(m.b_bp);
                entry.1.push(x);
            }
        }
        let round_briers = per_round
            .values()
            .map(|(b, x)| Ok(brier_score_bp(b, x)?.to_real()))
            .collect::<Result<Vec<f64>, ReportError>>()?;
        let market_brier = if round_briers.is_empty() { 0.0 } else { cumulative_scores(&round_briers)? };
        let agents = agent_series(record, |r| r.category == category)?
            .into_iter()
            .map(|s| Ok(CategoryAgent { rounds: s.rounds.len(), mean_alpha: cumulative_scores(&s.alphas())?, agent: s.agent }))
            .collect::<Result<Vec<_>, ReportError>>()?;
        let best = agents.iter().fold(None::<&CategoryAgent>, |best, a| match best {
            Some(b) if b.mean_alpha >= a.mean_alpha => Some(b),
            _ => Some(a),
        });
        rows.push(CategoryRow {
            category: category.to_string(),
            rounds: per_round.len(),
            resolved_markets: per_round.values().map(|(_, x)| x.len()).sum(),
            market_brier,
            best_agent: best.map(|b| b.agent.clone()).unwrap_or_default(),
            best_alpha: best.map_or(0.0, |b| b.mean_alpha),
            positive_agents: agents.iter().filter(|a| a.mean_alpha > 0.0).count(),
            agents,
        });
    }
    rows.sort_by(|a, b| b.rounds.cmp(&a.rounds).then_with(|| a.category.cmp(&b.category)));

    let rounds: usize = rows.iter().map(|r| r.rounds).sum();
    let market_brier = if rounds == 0 {
        0.0
    } else {
        rows.iter().map(|r| r.market_brier * r.rounds as f64).sum::<f64>() / rounds as f64
    };
    let mut totals: Vec<CategoryAgent> = Vec::new();
    let mut weighted: Vec<f64> = Vec::new();
    for row in &rows {
        for a in &row.agents {
            let i = match totals.iter().position(|t| t.agent == a.agent) {
                Some(i) => i,
                None => {
                    totals.push(CategoryAgent { agent: a.agent.clone(), rounds: 0, mean_alpha: 0.0 });
                    weighted.push(0.0);
                    totals.len() - 1
                }
            };
            totals[i].rounds += a.rounds;
            weighted[i] += a.mean_alpha * a.rounds as f64;
        }
    }
    for (t, w) in totals.iter_mut().zip(weighted) {
        t.mean_alpha = w / t.rounds as f64;
    }
    let order = record.agents();
    totals.sort_by_key(|t| order.iter().position(|a| *a == t.agent));
    Ok(CategoryBreakdown { rows, total: CategoryTotal { rounds, market_brier, agents: totals } })
}

/// Pooled decomposition of every agent's resolved predictions, followed by
/// the benchmark's own decomposition over the distinct markets.
pub fn murphy_report(record: &CampaignRecord, binning: &BinningSpec<f64>) -> Result<Vec<MurphyRow>, ReportError> {
    let mut pooled: Vec<(String, Vec<f64>, Vec<u8>)> =
        record.agents().into_iter().map(|a| (a.to_string(), Vec::new(), Vec::new())).collect();
    for row in record.rows() {
        if let Outcome::Resolved(x) = row.outcome {
            let entry = pooled.iter_mut().find(|(a, _, _)| *a == row.agent).expect("agent listed");
            entry.1.push(row.p_bp.to_real());
            entry.2.push(x);
        }
    }
    let (mut b, mut x) = (Vec::new(), Vec::new());
    for m in record.markets().values() {
        if let Outcome::Resolved(o) = m.outcome {
            b.push(m.b_bp.to_real());
            x.push(o);
        }
    }
    let market = murphy_decompose(&b, &x, binning)?;
    let mut rows = Vec::new();
    for (label, p, o) in pooled.into_iter().filter(|(_, p, _)| !p.is_empty()) {
        let components = murphy_decompose(&p, &o, binning)?;
        let anatomy = alpha_anatomy(&components, &market).ok();
        rows.push(MurphyRow { label, components, anatomy });
    }
    rows.push(MurphyRow { label: MARKET_LABEL.to_string(), components: market, anatomy: None });
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::ProbabilityBp;

    fn row(round_id: u64, agent: &str, market_idx: u32, category: &str, p: u32, b: u32, x: Option<u8>) -> CampaignRow {
        CampaignRow {
            round_id,
            agent: agent.into(),
            market_idx,
            category: category.into(),
            p_bp: ProbabilityBp::new(p).unwrap(),
            b_bp: ProbabilityBp::new(b).unwrap(),
            outcome: x.map_or(Outcome::Unresolved, Outcome::Resolved),
            q: None,
        }
    }

    #[test]
    fn worked_example_leaderboard() {
        // Two rounds of the single-market example: per-round alpha 0.12.
        let rec = CampaignRecord::new(vec![
            row(1, "agent", 0, "Crypto", 8000, 6000, Some(1)),
            row(2, "agent", 0, "Crypto", 8000, 6000, Some(1)),
        ])
        .unwrap();
        let lb = leaderboard(&rec).unwrap();
        assert_eq!(lb.len(), 1);
        assert_eq!(lb[0].brier, 0.04);
        assert_eq!(lb[0].alpha.mean_alpha, 0.12);
        assert_eq!(lb[0].alpha.t_stat, f64::INFINITY);
        assert_eq!(lb[0].beat_fraction, 1.0);
        assert_eq!(lb[0].predictions, 2);
        let tr = trajectories(&rec).unwrap();
        assert!(tr[0].points.iter().all(|p| p.cumulative_alpha == 0.12));
    }

    #[test]
    fn prefix_means() {
        // Per-round alphas 0.36 − 0.16 = 0.2, then 0.
        let rec = CampaignRecord::new(vec![
            row(1, "a", 0, "Crypto", 6000, 4000, Some(1)),
            row(2, "a", 0, "Crypto", 5000, 5000, Some(1)),
        ])
        .unwrap();
        let tr = trajectories(&rec).unwrap();
        let values: Vec<f64> = tr[0].points.iter().map(|p| p.cumulative_alpha).collect();
        assert_eq!(values, vec![0.2, 0.1]);
        assert_eq!(tr[0].points[1].r, 2);
    }

    #[test]
    fn consensus_alpha_is_exactly_zero() {
        let rows = (1..=3)
            .flat_map(|r| (0..4).map(move |m| row(r, "echo", m, "Sports", 1234 * (m + 1), 1234 * (m + 1), Some((m % 2) as u8))))
            .collect();
        let lb = leaderboard(&CampaignRecord::new(rows).unwrap()).unwrap();
        assert_eq!(lb[0].alpha.mean_alpha, 0.0);
        assert_eq!(lb[0].alpha.p_value, 1.0);
    }

    #[test]
    fn unresolved_rounds_are_skipped_and_too_few_rounds_rejected() {
        let rec = CampaignRecord::new(vec![
            row(1, "a", 0, "Crypto", 8000, 6000, Some(1)),
            row(2, "a", 0, "Crypto", 8000, 6000, None),
        ])
        .unwrap();
        assert!(matches!(leaderboard(&rec), Err(ReportError::InsufficientRounds { got: 1, .. })));
        assert_eq!(trajectories(&rec).unwrap()[0].points.len(), 1);
    }

    #[test]
    fn category_weighted_total_matches_leaderboard() {
        let mut rows = Vec::new();
        let cats = ["Crypto", "Crypto", "Sports", "Politics", "Crypto"];
        for (r, cat) in cats.iter().enumerate() {
            for m in 0..3u32 {
                let b = 3000 + 1000 * m + 100 * r as u32;
                let x = ((r as u32 + m) % 2) as u8;
                rows.push(row(r as u64 + 1, "sharp", m, cat, if x == 1 { b + 500 } else { b - 700 }, b, Some(x)));
                rows.push(row(r as u64 + 1, "noisy", m, cat, b + 900, b, Some(x)));
            }
        }
        let rec = CampaignRecord::new(rows).unwrap();
        let cb = category_breakdown(&rec).unwrap();
        assert_eq!(cb.rows.iter().map(|r| (r.category.as_str(), r.rounds)).collect::<Vec<_>>(),
            vec![("Crypto", 3), ("Politics", 1), ("Sports", 1)]);
        assert_eq!(cb.total.rounds, 5);
        let lb = leaderboard(&rec).unwrap();
        for t in &cb.total.agents {
            let global = lb.iter().find(|r| r.agent == t.agent).unwrap();
            assert!((t.mean_alpha - global.alpha.mean_alpha).abs() < 1e-12);
        }
        assert_eq!(cb.rows[0].best_agent, "sharp");
        assert_eq!(cb.rows[0].positive_agents, 1);
        let global_market = lb[0].brier + lb[0].alpha.mean_alpha;
        assert!((cb.total.market_brier - global_market).abs() < 1e-12);
    }

    #[test]
    fn single_category_row_equals_global() {
        let rows = (1..=4)
            .flat_map(|r| (0..2).map(move |m| row(r, "a", m, "Crypto", 7000 - 500 * m, 6000, Some(((r + m as u64) % 2) as u8))))
            .collect();
        let rec = CampaignRecord::new(rows).unwrap();
        let cb = category_breakdown(&rec).unwrap();
        let lb = leaderboard(&rec).unwrap();
        assert_eq!(cb.rows.len(), 1);
        assert_eq!(cb.rows[0].agents[0].mean_alpha, lb[0].alpha.mean_alpha);
        assert!((cb.rows[0].market_brier - (lb[0].brier + lb[0].alpha.mean_alpha)).abs() < 1e-12);
    }

    #[test]
    fn murphy_rows_for_echo_and_perfect_forecasters() {
        let mut rows = Vec::new();
        for m in 0..8u32 {
            let x = (m % 2) as u8;
            let b = [2000, 7000, 3000, 6000, 4000, 9000, 1000, 8000][m as usize];
            rows.push(row(1, "echo", m, "Crypto", b, b, Some(x)));
            rows.push(row(1, "oracle", m, "Crypto", 10_000 * x as u32, b, Some(x)));
        }
        let rep = murphy_report(&CampaignRecord::new(rows).unwrap(), &BinningSpec::default()).unwrap();
        assert_eq!(rep.iter().map(|r| r.label.as_str()).collect::<Vec<_>>(), vec!["echo", "oracle", MARKET_LABEL]);
        assert_eq!(rep[0].components, rep[2].components);
        let perfect = &rep[1].components;
        assert_eq!((perfect.unc, perfect.rel, perfect.res), (0.25, 0.0, 0.25));
        assert_eq!(rep[0].anatomy.as_ref().unwrap().total(), 0.0);
    }
}
