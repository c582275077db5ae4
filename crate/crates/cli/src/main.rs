mod render;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use forecast_core::power::{power_table, QuantileRounding, TABLE_ALPHA_STARS};
use forecast_core::protocol::{fuzz_commit_reveal, Packing};
use forecast_core::report::{
    category_breakdown, leaderboard, load_csv, murphy_report, to_csv_string, trajectories, CampaignRecord,
};
use forecast_core::simulation::{generate_campaign, run_through_protocol, CampaignConfig, HarnessOptions};
use forecast_core::{Binning, PowerSpec};

use render::{render, text, Cell, Format};

#[derive(Parser)]
#[command(name = "forecast", version, about = "Brier/Alpha scoring, power planning and seeded forecasting campaigns")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a campaign and write it as CSV.
    Simulate(SimulateArgs),
    /// Leaderboard of a campaign CSV.
    Score(ScoreArgs),
    /// Pooled Murphy decomposition per agent plus the market.
    Murphy(MurphyArgs),
    /// Required sample sizes for detecting a given alpha.
    Power(PowerArgs),
    /// Cumulative mean alpha after each round, one series per agent.
    Trajectories(InputArgs),
    /// Statistics recomputed per market category.
    Categories(CategoryArgs),
    /// Randomized commit-reveal verification and replay.
    ProtocolFuzz(FuzzArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Campaign CSV.
    input: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

#[derive(Args)]
struct SimulateArgs {
    /// TOML config; defaults apply to missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    rounds: Option<u64>,
    #[arg(long)]
    markets_per_round: Option<u32>,
    #[arg(long)]
    market_noise_sd: Option<f64>,
    /// Output path; stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Print the effective config as TOML and exit.
    #[arg(long)]
    dump_config: bool,
}

#[derive(Args)]
struct ScoreArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Replay every round through commit-reveal before scoring.
    #[arg(long)]
    via_protocol: bool,
}

#[derive(Args)]
struct MurphyArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Number of equal-width probability bins.
    #[arg(long, default_value_t = 10)]
    bins: usize,
}

#[derive(Args)]
struct CategoryArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Emit one row per (category, agent) instead of the summary.
    #[arg(long)]
    agents: bool,
}

#[derive(Args)]
struct PowerArgs {
    /// Target alpha; all reference targets when omitted.
    #[arg(long)]
    alpha_star: Option<f64>,
    /// One-sided significance level.
    #[arg(long, default_value_t = 0.05)]
    kappa: f64,
    #[arg(long, default_value_t = 0.80)]
    power: f64,
    /// Mean of q over markets.
    #[arg(long, default_value_t = 0.5)]
    q_bar: f64,
    /// Typical |b − p|.
    #[arg(long, default_value_t = 0.15)]
    boldness: f64,
    #[arg(long, default_value_t = 7)]
    markets_per_round: u64,
    /// Use unrounded normal quantiles instead of three-decimal ones.
    #[arg(long)]
    exact_quantiles: bool,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

#[derive(Args)]
struct FuzzArgs {
    #[arg(long, default_value_t = 10_000)]
    cases: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Pack prediction words big-endian.
    #[arg(long)]
    big_endian: bool,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut stdout = std::io::stdout().lock();
    match run(cli.command).and_then(|out| Ok(stdout.write_all(out.as_bytes())?)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<std::io::Error>().is_some_and(|e| e.kind() == std::io::ErrorKind::BrokenPipe) => {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn load(path: &PathBuf) -> Result<CampaignRecord> {
    load_csv(path).with_context(|| format!("reading {}", path.display()))
}

fn run(command: Command) -> Result<String> {
    match command {
        Command::Simulate(a) => simulate(a),
        Command::Score(a) => score(a),
        Command::Murphy(a) => murphy(a),
        Command::Power(a) => power(a),
        Command::Trajectories(a) => trajectory_table(a),
        Command::Categories(a) => categories(a),
        Command::ProtocolFuzz(a) => protocol_fuzz(a),
    }
}

fn simulate(a: SimulateArgs) -> Result<String> {
    let mut config = match &a.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            CampaignConfig::from_toml_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => CampaignConfig::default(),
    };
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    if let Some(rounds) = a.rounds {
        config.rounds = rounds;
    }
    if let Some(k) = a.markets_per_round {
        config.markets_per_round = k;
    }
    if let Some(sd) = a.market_noise_sd {
        config.market_noise_sd = Some(sd);
    }
    config.validate()?;
    if a.dump_config {
        return Ok(config.to_toml_string());
    }
    let csv = to_csv_string(&generate_campaign(&config)?)?;
    match a.out {
        Some(path) => {
            fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?;
            Ok(String::new())
        }
        None => Ok(csv),
    }
}

fn score(a: ScoreArgs) -> Result<String> {
    let record = load(&a.input.input)?;
    if a.via_protocol {
        run_through_protocol(&record, &HarnessOptions::default())?;
    }
    let rows: Vec<Vec<Cell>> = leaderboard(&record)?
        .into_iter()
        .map(|r| {
            vec![
                text(r.agent),
                Cell::Int(r.rounds as u64),
                Cell::Int(r.predictions as u64),
                Cell::Num(r.brier),
                Cell::Num(r.brier_se),
                Cell::Signed(r.alpha.mean_alpha),
                Cell::Num(r.alpha.std_error),
                Cell::Fixed(r.alpha.t_stat, 2),
                Cell::Num(r.alpha.p_value),
                Cell::Fixed(r.beat_fraction, 2),
            ]
        })
        .collect();
    let headers = ["agent", "rounds", "n", "brier", "brier_se", "alpha", "alpha_se", "t", "p", "beat"];
    Ok(render(&headers, &rows, a.input.format))
}

fn murphy(a: MurphyArgs) -> Result<String> {
    let record = load(&a.input.input)?;
    let binning = Binning::uniform(a.bins)?;
    let rows: Vec<Vec<Cell>> = murphy_report(&record, &binning)?
        .into_iter()
        .map(|r| {
            let c = &r.components;
            let (gain, gap) = match &r.anatomy {
                Some(an) => (Cell::Signed(an.resolution_gain), Cell::Signed(an.reliability_gap)),
                None => (text("-"), text("-")),
            };
            vec![
                text(r.label.clone()),
                Cell::Int(c.n as u64),
                Cell::Num(c.unc),
                Cell::Num(c.rel),
                Cell::Num(c.res),
                Cell::Num(c.brier_direct),
                Cell::Num(c.reconstructed()),
                Cell::Signed(r.residual()),
                gain,
                gap,
            ]
        })
        .collect();
    let headers = ["label", "n", "unc", "rel", "res", "brier", "unc_rel_res", "residual", "res_gain", "rel_gap"];
    Ok(render(&headers, &rows, a.input.format))
}

fn power(a: PowerArgs) -> Result<String> {
    let mut template = PowerSpec::with_alpha_star(TABLE_ALPHA_STARS[0]);
    template.kappa = a.kappa;
    template.power = a.power;
    template.q_bar = a.q_bar;
    template.boldness = a.boldness;
    if a.exact_quantiles {
        template.quantiles = QuantileRounding::Exact;
    }
    let alphas: Vec<f64> = match a.alpha_star {
        Some(x) => vec![x],
        None => TABLE_ALPHA_STARS.to_vec(),
    };
    let rows: Vec<Vec<Cell>> = power_table(&template, &alphas, a.markets_per_round)?
        .into_iter()
        .map(|r| vec![Cell::Fixed(r.alpha_star, 3), Cell::Num(r.n_bound), Cell::Int(r.n), Cell::Int(r.rounds)])
        .collect();
    Ok(render(&["alpha_star", "n_bound", "n", "rounds"], &rows, a.format))
}

fn trajectory_table(a: InputArgs) -> Result<String> {
    let record = load(&a.input)?;
    let mut rows = Vec::new();
    for t in trajectories(&record)? {
        for p in t.points {
            rows.push(vec![text(t.agent.clone()), Cell::Int(p.r as u64), Cell::Int(p.round_id), Cell::Signed(p.cumulative_alpha)]);
        }
    }
    Ok(render(&["agent", "r", "round_id", "cumulative_alpha"], &rows, a.format))
}

fn categories(a: CategoryArgs) -> Result<String> {
    let record = load(&a.input.input)?;
    let breakdown = category_breakdown(&record)?;
    if a.agents {
        let mut rows = Vec::new();
        for r in &breakdown.rows {
            for ag in &r.agents {
                rows.push(vec![text(r.category.clone()), text(ag.agent.clone()), Cell::Int(ag.rounds as u64), Cell::Signed(ag.mean_alpha)]);
            }
        }
        for ag in &breakdown.total.agents {
            rows.push(vec![text("total"), text(ag.agent.clone()), Cell::Int(ag.rounds as u64), Cell::Signed(ag.mean_alpha)]);
        }
        return Ok(render(&["category", "agent", "rounds", "mean_alpha"], &rows, a.input.format));
    }
    let mut rows: Vec<Vec<Cell>> = breakdown
        .rows
        .iter()
        .map(|r| {
            vec![
                text(r.category.clone()),
                Cell::Int(r.rounds as u64),
                Cell::Int(r.resolved_markets as u64),
                Cell::Num(r.market_brier),
                text(r.best_agent.clone()),
                Cell::Signed(r.best_alpha),
                text(format!("{}/{}", r.positive_agents, r.agents.len())),
            ]
        })
        .collect();
    let t = &breakdown.total;
    rows.push(vec![
        text("total"),
        Cell::Int(t.rounds as u64),
        Cell::Int(breakdown.rows.iter().map(|r| r.resolved_markets as u64).sum()),
        Cell::Num(t.market_brier),
        text("-"),
        text("-"),
        text("-"),
    ]);
    let headers = ["category", "rounds", "markets", "market_brier", "best_agent", "best_alpha", "positive"];
    Ok(render(&headers, &rows, a.input.format))
}

fn protocol_fuzz(a: FuzzArgs) -> Result<String> {
    let packing = if a.big_endian { Packing::BigEndian } else { Packing::LittleEndian };
    let report = fuzz_commit_reveal(a.cases, a.seed, packing);
    let rows = vec![vec![
        Cell::Int(report.cases as u64),
        Cell::Int(report.verified as u64),
        Cell::Int(report.mutations as u64),
        Cell::Int(report.mutations_rejected as u64),
        Cell::Int(report.replays_identical as u64),
        text(if report.passed() { "pass" } else { "fail" }),
    ]];
    let out = render(&["cases", "verified", "mutations", "rejected", "replays", "status"], &rows, a.format);
    if !report.passed() {
        bail!("{out}{}", report.failures.join("\n"));
    }
    Ok(out)
}
