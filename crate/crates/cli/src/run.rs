use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use mofa::analyzer::AnalysisOutcome;
use mofa::evaluator::{Direction, TrialRecord};
use mofa::optimizer::{
    run_mofa_observed, FinalStrategy, IterationSummary, SeedLog, StopReason, StudyConfig,
    StudyObserver,
};
use mofa::space::{Config, SearchSpace};
use mofa::Error;
use serde::{Deserialize, Serialize};

use crate::study_file::StudyFile;
use crate::{RunArgs, EXIT_ABORTED, EXIT_CONFIG};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "MOFA_WORKERS";

/// Worker count from the environment, else the hardware parallelism.
pub fn env_default_workers() -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .with_context(|| format!("{WORKERS_ENV}={v} is not a worker count")),
        Err(_) => Ok(mofa::evaluator::default_workers()),
    }
}

/// Settings a study ran with, as recorded in the result file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub max_iterations: usize,
    pub samples_per_iteration_min: usize,
    pub range_size: Option<usize>,
    pub beta: Option<f64>,
    pub q: usize,
    pub p: usize,
    pub budget: Option<usize>,
    pub quality_target: Option<f64>,
    pub final_strategy: FinalStrategy,
}

/// Contents of `<name>.result.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub name: String,
    pub direction: Direction,
    pub best_config: Config,
    /// Objective value of `best_config` in the objective's own direction.
    pub best_value: f64,
    /// The same value negated for minimize objectives.
    pub best_value_normalized: f64,
    /// Best design-trial value in the objective's own direction.
    pub greedy_value: f64,
    pub stop_reason: StopReason,
    pub iterations: usize,
    pub trials: usize,
    pub final_space: SearchSpace,
    pub seeds: SeedLog,
    pub settings: RunSettings,
}

pub fn trials_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(format!("{name}.trials.jsonl"))
}

pub fn result_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(format!("{name}.result.json"))
}

pub fn analysis_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(format!("{name}.analysis.json"))
}

fn apply_overrides(file: &mut StudyFile, args: &RunArgs) {
    macro_rules! set {
        ($flag:expr, $field:expr) => {
            if let Some(v) = $flag {
                $field = v;
            }
        };
    }
    set!(args.name.clone(), file.study.name);
    set!(args.seed, file.study.seed);
    set!(args.max_iterations, file.study.max_iterations);
    set!(
        args.final_strategy.map(Into::into),
        file.study.final_strategy
    );
    set!(args.q, file.mofa.q);
    set!(args.p, file.mofa.p);
    set!(
        args.samples_per_iteration_min,
        file.mofa.samples_per_iteration_min
    );
    if args.budget.is_some() {
        file.study.budget = args.budget;
    }
    if args.workers.is_some() {
        file.study.workers = args.workers;
    }
    if args.quality_target.is_some() {
        file.study.quality_target = args.quality_target;
    }
    if args.range_size.is_some() {
        file.mofa.range_size = args.range_size;
    }
    if args.beta.is_some() {
        file.mofa.beta = args.beta;
    }
}

struct Prepared {
    name: String,
    config: StudyConfig,
    settings: RunSettings,
}

fn prepare(args: &RunArgs) -> Result<Prepared> {
    let mut file = StudyFile::load(&args.config)?;
    apply_overrides(&mut file, args);
    let name = file.study.name.clone();
    if name.is_empty() || name.contains(['/', '\\']) {
        anyhow::bail!("study name `{name}` must be non-empty and contain no path separator");
    }
    let config = file
        .study_config(env_default_workers()?)
        .with_context(|| format!("invalid study file {}", args.config.display()))?;
    let settings = RunSettings {
        max_iterations: config.max_iterations,
        samples_per_iteration_min: config.samples_per_iteration_min,
        range_size: config.range_size,
        beta: config.importance_threshold,
        q: config.q,
        p: config.p,
        budget: config.total_budget,
        quality_target: config.quality_target,
        final_strategy: config.final_strategy,
    };
    Ok(Prepared {
        name,
        config,
        settings,
    })
}

/// Appends trials to the log as batches finish and prints summaries.
struct RunObserver {
    log: BufWriter<File>,
    io_error: Option<std::io::Error>,
    direction: Direction,
    quiet: bool,
}

impl RunObserver {
    fn append(&mut self, trials: &[TrialRecord]) -> std::io::Result<()> {
        for t in trials {
            serde_json::to_writer(&mut self.log, t)?;
            self.log.write_all(b"\n")?;
        }
        self.log.flush()
    }
}

impl StudyObserver for RunObserver {
    fn on_trials(&mut self, trials: &[TrialRecord]) {
        if self.io_error.is_none() {
            if let Err(e) = self.append(trials) {
                self.io_error = Some(e);
            }
        }
    }

    fn on_iteration(&mut self, s: &IterationSummary<'_>) {
        if self.quiet {
            return;
        }
        println!(
            "iteration {}: {} trials, best so far {}",
            s.iteration,
            s.runs,
            self.direction.to_objective(s.best_so_far)
        );
        let frozen: Vec<String> = s
            .analysis
            .frozen
            .iter()
            .map(|f| {
                let value = s.next_space.factor(&f.factor).and_then(|d| d.frozen);
                format!(
                    "{} = {}",
                    f.factor,
                    value.map_or("?".into(), |v| v.to_string())
                )
            })
            .collect();
        if !frozen.is_empty() {
            println!("  frozen: {}", frozen.join(", "));
        }
        for f in s.next_space.active_factors() {
            println!("  {} in [{}, {}]", f.name, f.lower, f.upper);
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("cannot write {}", path.display()))
}

fn write_analysis(dir: &Path, name: &str, outcomes: &[AnalysisOutcome]) -> Result<()> {
    write_json(&analysis_path(dir, name), &outcomes)
}

fn exit_code_for(error: &Error) -> i32 {
    match error {
        Error::Config(_) | Error::Bounds(_) | Error::Schema(_) => EXIT_CONFIG,
        _ => EXIT_ABORTED,
    }
}

/// Execute a study file. Returns the process exit status.
pub fn cmd_run(args: &RunArgs) -> i32 {
    let prepared = match prepare(args) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_CONFIG;
        }
    };
    match execute_study(args, prepared) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_CONFIG
        }
    }
}

fn execute_study(args: &RunArgs, p: Prepared) -> Result<i32> {
    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("cannot create {}", args.out_dir.display()))?;
    let log_path = trials_path(&args.out_dir, &p.name);
    let log =
        File::create(&log_path).with_context(|| format!("cannot create {}", log_path.display()))?;
    let direction = p.config.objective.direction;
    let mut observer = RunObserver {
        log: BufWriter::new(log),
        io_error: None,
        direction,
        quiet: args.quiet,
    };

    let outcome = run_mofa_observed(&p.config, &mut observer);
    if let Some(e) = observer.io_error {
        return Err(e).with_context(|| format!("cannot append to {}", log_path.display()));
    }
    let result = match outcome {
        Ok(r) => r,
        Err(e) => {
            write_analysis(&args.out_dir, &p.name, &e.per_iteration)?;
            eprintln!("error: study aborted: {e}");
            return Ok(exit_code_for(&e.error));
        }
    };
    write_analysis(&args.out_dir, &p.name, &result.per_iteration)?;
    let doc = ResultFile {
        name: p.name.clone(),
        direction,
        best_config: result.best_config.clone(),
        best_value: direction.to_objective(result.best_value),
        best_value_normalized: result.best_value,
        greedy_value: direction.to_objective(result.greedy_value),
        stop_reason: result.stop_reason,
        iterations: result.per_iteration.len(),
        trials: result.history.len(),
        final_space: result.final_space.clone(),
        seeds: result.seeds.clone(),
        settings: p.settings,
    };
    write_json(&result_path(&args.out_dir, &p.name), &doc)?;
    if !args.quiet {
        let config: Vec<String> = doc
            .best_config
            .iter()
            .map(|(k, v)| format!("{k} = {v}"))
            .collect();
        println!(
            "stopped: {}; best value {} at {}",
            doc.stop_reason,
            doc.best_value,
            config.join(", ")
        );
    }
    Ok(0)
}

/// Read a trial log written by `run`.
pub fn read_trial_log(path: &Path) -> Result<Vec<TrialRecord>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .with_context(|| format!("{}:{}: invalid trial record", path.display(), i + 1))
        })
        .collect()
}
