use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bandit_trust::config::{RunConfig, SigmaSpec};
use bandit_trust::error::{AppError, Result};
use bandit_trust::io::{self, DataFormat, ReportDocument};
use bandit_trust::simulate::{self, Generator, DEFAULT_SEEDS};
use bandit_trust_core::{
    compute_m0, compute_stats, min_samples, run_behavior, run_combined, run_greedy, run_lcb, run_trust, ArmDataset,
    ArmStats, Method, PolicyReport, TrustConfig, TrustOutcome,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "bandit-trust", version, about = "Certified stochastic policies for offline multi-armed bandits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Trust-region policy with its certified lower bound.
    Trust(TrustArgs),
    /// Arm with the largest lower confidence bound.
    Lcb(BaselineArgs),
    /// Arm with the largest empirical mean.
    Greedy(BaselineArgs),
    /// Noise-weighted reference policy.
    Behavior(BaselineArgs),
    /// Trust-region policy or LCB arm, whichever certifies more.
    Combined(TrustArgs),
    /// Synthetic experiments: per-seed results, summary and radius sweeps.
    Simulate(SimulateArgs),
    /// Prints the order-statistic threshold M0 for M samples at level delta'.
    M0 {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        delta_prime: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum InputFormat {
    /// `.csv` files as CSV, anything else as JSON lines.
    Auto,
    Jsonl,
    Csv,
    /// JSON lines of `{"policy_id", "return"}`, one arm per logging policy.
    Returns,
}

#[derive(Args)]
struct DataArgs {
    /// Reward records, one per pull.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    format: InputFormat,
    /// Noise scale: a number, fixed:<s>, per-arm:<s1>,..., empirical-std or bounded-quarter.
    #[arg(long)]
    sigma: SigmaSpec,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// Report destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write every arm's weight instead of the sparse map.
    #[arg(long)]
    dense: bool,
}

#[derive(Args)]
struct BaselineArgs {
    #[command(flatten)]
    data: DataArgs,
}

#[derive(Args)]
struct TrustArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 1.3)]
    alpha: f64,
    #[arg(long, default_value_t = 40)]
    grid_size: usize,
    /// Monte-Carlo samples; raised to the minimum that gives M0 >= 1.
    #[arg(long, default_value_t = 200)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-radius CSV trace.
    #[arg(long)]
    sweep_out: Option<PathBuf>,
    /// Complexity table CSV.
    #[arg(long)]
    table_out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Instance {
    DataStarved,
    LinearMeans,
    StrongSignal,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    instance: Instance,
    /// Arm count; defaults to 500, or the full-scale size with --full-scale.
    #[arg(long)]
    d: Option<usize>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SEEDS)]
    seeds: Vec<u64>,
    /// Full-scale sizes (d = 10000 or 1000, |E| = 40) instead of desk-scale ones.
    #[arg(long)]
    full_scale: bool,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 1.3)]
    alpha: f64,
    #[arg(long)]
    grid_size: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    /// Noise scale of the strong-signal instance.
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

fn load(args: &DataArgs) -> Result<(ArmDataset, ArmStats)> {
    let dataset = match args.format {
        InputFormat::Returns => io::load_trajectory_returns(&args.data)?,
        InputFormat::Jsonl => io::load_dataset(&args.data, DataFormat::Jsonl)?,
        InputFormat::Csv => io::load_dataset(&args.data, DataFormat::Csv)?,
        InputFormat::Auto => io::load_dataset(&args.data, DataFormat::from_path(&args.data))?,
    };
    let stats = compute_stats(&dataset, &args.sigma.0)?;
    Ok((dataset, stats))
}

fn emit(doc: &ReportDocument, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => io::emit_report(doc, path),
        None => {
            println!("{}", serde_json::to_string_pretty(doc)?);
            Ok(())
        }
    }
}

fn run_config(method: Method, data: &DataArgs, trust: Option<&TrustArgs>) -> RunConfig {
    let mut cfg = RunConfig { method: method.as_str().to_owned(), delta: data.delta, sigma: data.sigma.clone(), ..Default::default() };
    if let Some(t) = trust {
        cfg.alpha = t.alpha;
        cfg.grid_size = t.grid_size;
        cfg.m = t.m;
        cfg.seed = t.seed;
    }
    cfg
}

fn baseline(method: Method, args: &BaselineArgs) -> Result<()> {
    let (dataset, stats) = load(&args.data)?;
    let cfg = run_config(method, &args.data, None);
    cfg.validate()?;
    let report = match method {
        Method::Lcb => run_lcb(&stats, cfg.delta)?,
        Method::Greedy => run_greedy(&stats),
        _ => run_behavior(&stats, cfg.delta)?,
    };
    let ids: Vec<String> = dataset.arm_ids().map(str::to_owned).collect();
    emit(&ReportDocument::new(&report, &ids, &stats, &cfg, None, args.data.dense), args.data.out.as_deref())
}

fn trust_side_outputs(args: &TrustArgs, outcome: &TrustOutcome, stats: &ArmStats) -> Result<()> {
    if let Some(path) = &args.sweep_out {
        let rows = simulate::sweep_rows(outcome, stats, None);
        io::write_csv_file(path, |w| io::write_sweep(&rows, w))?;
    }
    if let Some(path) = &args.table_out {
        io::write_csv_file(path, |w| io::write_complexity_table(&outcome.table, w))?;
    }
    Ok(())
}

fn trust(method: Method, args: &TrustArgs) -> Result<()> {
    let (dataset, stats) = load(&args.data)?;
    let cfg = run_config(method, &args.data, Some(args));
    cfg.validate()?;
    let outcome = run_trust(&stats, &cfg.trust())?;
    let trust_report = PolicyReport::from_trust(&outcome, &stats);
    let report = match method {
        Method::Combined => run_combined(&trust_report, &run_lcb(&stats, cfg.delta)?)?,
        _ => trust_report,
    };
    trust_side_outputs(args, &outcome, &stats)?;
    let ids: Vec<String> = dataset.arm_ids().map(str::to_owned).collect();
    let doc = ReportDocument::new(&report, &ids, &stats, &cfg, Some(&outcome), args.data.dense);
    emit(&doc, args.data.out.as_deref())
}

fn simulate_cmd(args: &SimulateArgs) -> Result<()> {
    std::fs::create_dir_all(&args.out).map_err(|e| AppError::Io { path: args.out.clone(), source: e })?;
    let generator = match args.instance {
        Instance::DataStarved => Generator::DataStarved,
        Instance::LinearMeans => Generator::LinearMeans,
        Instance::StrongSignal => Generator::StrongSignal,
    };
    if let Generator::StrongSignal = generator {
        let d_half = args.d.map_or(1000, |d| d / 2);
        let report = simulate::strong_signal_check(d_half, args.sigma, args.delta, &args.seeds)?;
        io::write_json(&report, &args.out.join("strong_signal.json"))?;
        eprintln!("strong signal: {}/{} runs reach {:.3} (pass: {})", report.passes, args.seeds.len(), report.bound, report.pass);
        return Ok(());
    }
    let d = args.d.unwrap_or(match (args.full_scale, generator) {
        (false, _) => 500,
        (true, Generator::DataStarved) => 10_000,
        (true, _) => 1000,
    });
    let config = TrustConfig {
        delta: args.delta,
        alpha: args.alpha,
        grid_size: args.grid_size.unwrap_or(if args.full_scale { 40 } else { 25 }),
        m: args.m.unwrap_or(if args.full_scale { 200 } else { 100 }),
        seed: 0,
    };
    let summary = simulate::run_experiment(generator, d, &args.seeds, &config)?;
    io::write_json(&summary, &args.out.join("summary.json"))?;
    for &seed in &args.seeds {
        let rows = simulate::sweep_radius(generator, d, &TrustConfig { seed, ..config.clone() })?;
        io::write_csv_file(&args.out.join(format!("sweep_{seed}.csv")), |w| io::write_sweep(&rows, w))?;
    }
    for m in &summary.methods {
        eprintln!(
            "{:>9}  mean {:.3}  std {:.3}  min {:.3}  mean lower bound {}",
            m.method,
            m.mean_true_value,
            m.std_true_value,
            m.min_true_value,
            m.mean_lower_bound.map_or("-".to_owned(), |b| format!("{b:.3}"))
        );
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Trust(a) => trust(Method::Trust, a),
        Command::Combined(a) => trust(Method::Combined, a),
        Command::Lcb(a) => baseline(Method::Lcb, a),
        Command::Greedy(a) => baseline(Method::Greedy, a),
        Command::Behavior(a) => baseline(Method::Behavior, a),
        Command::Simulate(a) => simulate_cmd(a),
        Command::M0 { m, delta_prime } => {
            if !(*delta_prime > 0.0 && *delta_prime < 1.0) {
                return Err(AppError::Config(format!("delta-prime must lie in (0, 1), got {delta_prime}")));
            }
            let m0 = compute_m0(*m, *delta_prime);
            println!("{m0}");
            if m0 == 0 {
                eprintln!("M0 = 0: at least {} samples are needed", min_samples(*delta_prime));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
