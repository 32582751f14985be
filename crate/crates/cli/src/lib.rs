//! Command-line front end for the `mofa` optimizer.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mofa::optimizer::FinalStrategy;

pub mod analyze;
pub mod bench;
pub mod metrics;
pub mod run;
pub mod sample;
pub mod study_file;

/// Exit status for configuration, parse and IO errors.
pub const EXIT_CONFIG: i32 = 1;
/// Exit status when a study aborts during evaluation or analysis.
pub const EXIT_ABORTED: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "mofa",
    version,
    about = "Model-free hyperparameter optimization by modular factorial design"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a study described by a TOML file.
    Run(RunArgs),
    /// Emit a Latin hypercube design.
    Sample(SampleArgs),
    /// Replay the analysis of one iteration from a trial log.
    Analyze(AnalyzeArgs),
    /// Design diagnostics.
    #[command(subcommand)]
    Metrics(MetricsCommand),
    /// Run the benchmark suite and print its comparison tables.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Greedy,
    Mean,
    Combined,
}

impl From<StrategyArg> for FinalStrategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Greedy => FinalStrategy::Greedy,
            StrategyArg::Mean => FinalStrategy::Mean,
            StrategyArg::Combined => FinalStrategy::Combined,
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, short)]
    pub config: PathBuf,
    /// Directory receiving the trial log, result and analysis files.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[arg(long)]
    pub budget: Option<usize>,
    /// Overrides `[study] workers`; the `MOFA_WORKERS` environment variable
    /// supplies the default when both are absent.
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, value_enum)]
    pub final_strategy: Option<StrategyArg>,
    #[arg(long, allow_negative_numbers = true)]
    pub quality_target: Option<f64>,
    #[arg(long = "range-size", short = 'R')]
    pub range_size: Option<usize>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long = "q", short = 'Q')]
    pub q: Option<usize>,
    #[arg(long = "p", short = 'P')]
    pub p: Option<usize>,
    #[arg(long)]
    pub samples_per_iteration_min: Option<usize>,
    /// Suppress iteration summaries.
    #[arg(long, short)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// random, centered, maximin, centered-maximin, correlation or orthogonality.
    #[arg(long)]
    pub criterion: String,
    /// Number of runs.
    #[arg(long, conflicts_with = "levels")]
    pub runs: Option<usize>,
    /// Levels per OA column; the design has `levels²` runs.
    #[arg(long)]
    pub levels: Option<usize>,
    #[arg(long)]
    pub factors: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Output file; standard output when absent.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Trial log in JSON lines.
    pub trial_log: PathBuf,
    /// Iteration to replay.
    #[arg(long, default_value_t = 1)]
    pub iteration: usize,
    #[arg(long = "range-size", short = 'R')]
    pub range_size: Option<usize>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long = "q", short = 'Q')]
    pub q: Option<usize>,
    #[arg(long = "p", short = 'P')]
    pub p: Option<usize>,
    /// Write the collapsed range table as CSV.
    #[arg(long)]
    pub table_out: Option<PathBuf>,
    /// Write the analysis outcome as JSON.
    #[arg(long)]
    pub json_out: Option<PathBuf>,
    #[arg(long, short)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum MetricsCommand {
    /// Star discrepancy of the points in a CSV file.
    Discrepancy(DiscrepancyArgs),
    /// Maximum absolute column correlation of a CSV design.
    Correlation(DesignFileArgs),
    /// One-point-per-bin check of every column of a CSV design.
    Uniformity(DesignFileArgs),
    /// Pick-the-best comparison of sampling criteria.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct DesignFileArgs {
    pub csv: PathBuf,
    #[arg(long)]
    pub json_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DiscrepancyArgs {
    pub csv: PathBuf,
    /// Use the snapped-box estimator even when exact enumeration applies.
    #[arg(long)]
    pub estimate: bool,
    #[arg(long, default_value_t = mofa::metrics::DEFAULT_ESTIMATE_BOXES)]
    pub boxes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub json_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Builtin objective.
    #[arg(long, default_value = "branin")]
    pub objective: String,
    #[arg(long, default_value_t = 3)]
    pub factors: usize,
    #[arg(long, default_value_t = 81)]
    pub runs: usize,
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated criteria, or `all`.
    #[arg(long, default_value = "all")]
    pub criteria: String,
    #[arg(long)]
    pub json_out: Option<PathBuf>,
    /// Per-dimension projections of each criterion's first design.
    #[arg(long)]
    pub projections_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 50)]
    pub seeds: u64,
    /// Defaults to `MOFA_WORKERS`, then the hardware parallelism.
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub json_out: Option<PathBuf>,
}

/// Run a parsed command line and return the process exit status.
pub fn execute(cli: Cli) -> i32 {
    let outcome = match cli.command {
        Command::Run(args) => return run::cmd_run(&args),
        Command::Sample(args) => sample::cmd_sample(&args),
        Command::Analyze(args) => analyze::cmd_analyze(&args),
        Command::Metrics(cmd) => metrics::cmd_metrics(&cmd),
        Command::Bench(args) => bench::cmd_bench(&args),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_CONFIG
        }
    }
}

/// Parse `args` (including the program name) and run them.
pub fn execute_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_CONFIG
            } else {
                0
            }
        }
    }
}

pub(crate) fn write_output(path: Option<&std::path::Path>, text: &str) -> anyhow::Result<()> {
    use anyhow::Context;
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
