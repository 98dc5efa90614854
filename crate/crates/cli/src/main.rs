mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::Failure;

#[derive(Parser, Debug)]
#[command(
    name = "poolcensor",
    version,
    about = "Censorship games and ledger simulation for pooled proof-of-stake"
)]
struct Cli {
    /// Progress messages on stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario and write its trace.
    Simulate(SimulateArgs),
    /// Enumerate pure Nash equilibria, or scan one profile with --profile.
    Nash(GameArgs),
    /// Check a committed multi-round profile for subgame perfection.
    Spne(GameArgs),
    /// Run a theorem verifier on a game file.
    Verify(VerifyArgs),
    /// Chi-square uniformity of the audit beacon's pool selection.
    AuditStats(AuditArgs),
    /// Incentive-consistency class of a pending transaction in a scenario.
    Classify(ClassifyArgs),
    /// Scenario-level experiments.
    #[command(subcommand)]
    Experiment(ExperimentCmd),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum TraceFormat {
    Csv,
    Text,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    Json,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    rounds: u64,
    /// Directory for trace.csv, pools.csv, audits.csv and summary.json.
    #[arg(long)]
    out: Option<PathBuf>,
    /// What goes to stdout: the trace CSV or a text summary.
    #[arg(long, value_enum, default_value = "csv")]
    format: TraceFormat,
}

#[derive(Args, Debug)]
pub struct GameArgs {
    #[arg(long)]
    game: PathBuf,
    #[arg(long)]
    profile: Option<PathBuf>,
    /// Also write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: ReportFormat,
    /// Largest profile space an enumeration may visit.
    #[arg(long, default_value_t = poolcensor_core::equilibrium::DEFAULT_SPACE_LIMIT)]
    limit: u128,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Theorem {
    T2,
    T3,
    T4,
    T5,
    T6,
    Kround,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    theorem: Theorem,
    #[command(flatten)]
    game: GameArgs,
    /// Switch round of the family (t3).
    #[arg(long)]
    l: Option<usize>,
    /// Signal depth, overriding the game file (kround).
    #[arg(long)]
    j: Option<usize>,
    /// Number of rounds, overriding the game file (kround).
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Args, Debug)]
pub struct AuditArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Independent seeds, starting at --seed.
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    #[arg(long, default_value_t = 10)]
    pools: usize,
    #[arg(long, default_value_t = 100_000)]
    draws: u64,
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    /// Fraction of seeds that must pass.
    #[arg(long, default_value_t = 0.95)]
    min_pass: f64,
    #[arg(long, value_enum, default_value = "text")]
    format: ReportFormat,
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Index into the scenario's pending list.
    #[arg(long, default_value_t = 0)]
    tx: usize,
    #[arg(long, default_value_t = 3)]
    horizon: usize,
    #[arg(long, default_value_t = poolcensor_core::incentive::DEFAULT_NODE_LIMIT)]
    node_limit: usize,
    #[arg(long, value_enum, default_value = "text")]
    format: ReportFormat,
}

#[derive(Subcommand, Debug)]
enum ExperimentCmd {
    /// Liveness and postponement gains with a share of Byzantine operators.
    Liveness {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        fraction: f64,
        #[arg(long)]
        rounds: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value = "text")]
        format: ReportFormat,
    },
    /// Whether collective censorship of competitors is an equilibrium.
    Cartel {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        rounds: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value = "text")]
        format: ReportFormat,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let v = cli.verbose;
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(&a, v),
        Command::Nash(a) => commands::nash(&a),
        Command::Spne(a) => commands::spne(&a),
        Command::Verify(a) => commands::verify(&a),
        Command::AuditStats(a) => commands::audit_stats(&a),
        Command::Classify(a) => commands::classify(&a),
        Command::Experiment(ExperimentCmd::Liveness {
            scenario,
            fraction,
            rounds,
            seed,
            format,
        }) => commands::liveness(&scenario, fraction, rounds, seed, format),
        Command::Experiment(ExperimentCmd::Cartel {
            scenario,
            rounds,
            seed,
            format,
        }) => commands::cartel(&scenario, rounds, seed, format),
    };
    match result {
        Ok(code) => code.into(),
        Err(f) => {
            eprintln!("poolcensor: {f}");
            f.code().into()
        }
    }
}

impl From<commands::Outcome> for ExitCode {
    fn from(o: commands::Outcome) -> Self {
        ExitCode::from(o as u8)
    }
}

impl Failure {
    fn code(&self) -> ExitCode {
        ExitCode::from(match self {
            Failure::Usage(_) => 2,
            Failure::Load(_) => 3,
            Failure::Hypothesis(_) => 4,
        })
    }
}
