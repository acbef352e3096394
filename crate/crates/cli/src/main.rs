//! `qmdp`: generate benchmark MDPs, solve quantile queries, evaluate and
//! time policies.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand};
use qmdp_core::{Criterion, Error};

#[derive(Debug, Parser)]
#[command(name = "qmdp", version, about = "Quantile-optimal policies for Markov decision processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a benchmark problem file.
    #[command(subcommand)]
    Generate(Generate),
    /// Find an epsilon-optimal policy for a quantile of final wealth.
    Solve(SolveArgs),
    /// Distribution of final wealth under a policy, as CSV plus a JSON summary.
    #[command(visible_alias = "dist")]
    Eval(EvalArgs),
    /// Time threshold solves over a grid of instance sizes or horizons.
    #[command(subcommand)]
    Bench(Bench),
    /// Compare the solver against exhaustive search on small random instances.
    OracleCheck(OracleArgs),
}

#[derive(Debug, Subcommand)]
enum Generate {
    Garnet(GarnetArgs),
    Datacenter(DatacenterArgs),
}

#[derive(Debug, Args)]
struct GarnetArgs {
    #[arg(long)]
    states: usize,
    #[arg(long)]
    actions: usize,
    /// Successors per state-action pair [default: ceil(log2 states)]
    #[arg(long)]
    branching: Option<usize>,
    #[arg(long, default_value_t = 5)]
    horizon: usize,
    #[arg(long, default_value_t = 0.0)]
    reward_low: f64,
    #[arg(long, default_value_t = 1.0)]
    reward_high: f64,
    /// Pushes rewards toward the low end; 0 keeps them uniform.
    #[arg(long, default_value_t = 0.0)]
    skew: f64,
    /// Discount factor; omit for undiscounted wealth.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, env = "QMDP_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct DatacenterArgs {
    #[arg(long)]
    servers: usize,
    #[arg(long, default_value_t = 5)]
    horizon: usize,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 10.0)]
    beta: f64,
    #[arg(long, default_value_t = 3.0)]
    kappa: f64,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum HorizonArg {
    Finite(usize),
    Infinite,
}

fn parse_horizon(s: &str) -> Result<HorizonArg, String> {
    match s {
        "inf" => Ok(HorizonArg::Infinite),
        _ => match s.parse::<usize>() {
            Ok(0) | Err(_) => Err(format!("expected a positive integer or \"inf\", got {s:?}")),
            Ok(t) => Ok(HorizonArg::Finite(t)),
        },
    }
}

fn parse_bounds(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(',').ok_or("expected lo,hi")?;
    let lo: f64 = lo.trim().parse().map_err(|_| format!("bad lower bound {lo:?}"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| format!("bad upper bound {hi:?}"))?;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(format!("need finite lo <= hi, got {lo},{hi}"));
    }
    Ok((lo, hi))
}

fn parse_criterion(s: &str) -> Result<Criterion, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_probability(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(p) if (0.0..=1.0).contains(&p) => Ok(p),
        _ => Err(format!("expected a probability in [0, 1], got {s:?}")),
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Problem file.
    #[arg(long, short)]
    problem: PathBuf,
    #[arg(long, value_parser = parse_probability, allow_hyphen_values = true)]
    tau: f64,
    #[arg(long, default_value_t = 1e-3)]
    epsilon: f64,
    #[arg(long, value_parser = parse_criterion, default_value = "lower")]
    criterion: Criterion,
    /// Overrides the problem's horizon: a step count or `inf`.
    #[arg(long, value_parser = parse_horizon)]
    horizon: Option<HorizonArg>,
    /// Initial search bracket `lo,hi`; required when wealth is unbounded.
    #[arg(long, value_parser = parse_bounds, allow_hyphen_values = true)]
    bounds: Option<(f64, f64)>,
    #[arg(long, default_value_t = 1e-6)]
    eps_conv: f64,
    #[arg(long, default_value_t = 10_000)]
    max_sweeps: usize,
    /// Policy file to write.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Per-iteration CSV log.
    #[arg(long)]
    log: Option<PathBuf>,
    /// CSV of every value slice at the final threshold.
    #[arg(long)]
    dump_values: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long, short)]
    problem: PathBuf,
    /// Policy file; conflicts with `--standard`.
    #[arg(long, conflicts_with = "standard", required_unless_present = "standard")]
    policy: Option<PathBuf>,
    /// Evaluate the expectation-optimal policy instead of a policy file.
    #[arg(long)]
    standard: bool,
    /// Quantile levels reported in the summary.
    #[arg(long, value_delimiter = ',', value_parser = parse_probability, default_value = "0.1,0.5,0.9")]
    taus: Vec<f64>,
    /// CSV of (wealth, probability, F, G); stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Largest number of (state, wealth) atoms kept for exact evaluation.
    #[arg(long, default_value_t = 10_000_000)]
    atom_cap: usize,
    /// Episodes simulated when the exact distribution is too large.
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, env = "QMDP_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Subcommand)]
enum Bench {
    Garnet(BenchGarnetArgs),
    Datacenter(BenchDatacenterArgs),
}

#[derive(Debug, Args)]
struct BenchGarnetArgs {
    #[arg(long, value_delimiter = ',', default_value = "50,100,250")]
    states: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    actions: usize,
    #[arg(long, default_value_t = 5)]
    horizon: usize,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    #[arg(long, env = "QMDP_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchDatacenterArgs {
    #[arg(long, default_value_t = 10)]
    servers: usize,
    #[arg(long, value_delimiter = ',', default_value = "5,10,15")]
    horizons: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 20)]
    instances: usize,
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    #[arg(long, env = "QMDP_SEED", default_value_t = 0)]
    seed: u64,
}

/// Process exit status for a failed command.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Argument(_) => 2,
        Error::Config(_) | Error::Validation(_) | Error::Precondition(_) | Error::Json(_) => 3,
        Error::Resource(_) => 4,
        Error::NonConvergence { .. } => 5,
        Error::Unsupported(_) | Error::Io(_) => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => {
            let rendered = e.render().to_string();
            eprint!("{rendered}");
            if !rendered.contains("Usage:") {
                eprintln!("\n{}", Cli::command().render_usage());
            }
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Generate(Generate::Garnet(a)) => commands::generate_garnet(&a),
        Command::Generate(Generate::Datacenter(a)) => commands::generate_datacenter(&a),
        Command::Solve(a) => commands::solve(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Bench(Bench::Garnet(a)) => commands::bench_garnet(&a),
        Command::Bench(Bench::Datacenter(a)) => commands::bench_datacenter(&a),
        Command::OracleCheck(a) => commands::oracle_check(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
