use anyhow::{bail, Context, Result};
use mofa::analyzer::{analyze, AnalysisOutcome};
use mofa::evaluator::TrialRecord;
use mofa::optimizer::{default_hyper_hyperparams_with, DEFAULT_P, DEFAULT_Q};
use mofa::sampler::{DesignMatrix, Provenance};
use mofa::transformer::{collapse, max_range_count, CollapsedTable};

use crate::run::read_trial_log;
use crate::{write_output, AnalyzeArgs};

#[derive(Debug, Clone, PartialEq)]
pub struct Replay {
    pub table: CollapsedTable,
    pub outcome: AnalysisOutcome,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplayOptions {
    pub range_size: Option<usize>,
    pub beta: Option<f64>,
    pub q: usize,
    pub p: usize,
}

impl Default for ReplayOptions {
    fn default() -> Self {
        ReplayOptions {
            range_size: None,
            beta: None,
            q: DEFAULT_Q,
            p: DEFAULT_P,
        }
    }
}

/// Rebuild the design of `iteration` from its trials and analyze it the way
/// the study did. Unset options take the study defaults.
pub fn replay_iteration(
    records: &[TrialRecord],
    iteration: usize,
    options: ReplayOptions,
) -> Result<Replay> {
    if iteration == 0 {
        bail!("iteration 0 holds the final-selection trial and has no design");
    }
    let trials: Vec<&TrialRecord> = records
        .iter()
        .filter(|t| t.iteration == iteration)
        .collect();
    let Some(first) = trials.first() else {
        bail!("trial log has no trials for iteration {iteration}");
    };
    let runs = trials.len();
    let levels = max_range_count(runs);
    if levels < 2 || levels * levels != runs {
        bail!("iteration {iteration} is incomplete: {runs} trials do not form an n x n design");
    }
    let names = first.active_factors.clone();
    for t in &trials {
        if t.active_factors != names || t.unit_params.len() != names.len() {
            bail!(
                "trial {} does not match the factor layout of iteration {iteration}",
                t.trial_id
            );
        }
    }
    let cells: Vec<f64> = trials
        .iter()
        .flat_map(|t| t.unit_params.iter().copied())
        .collect();
    let design = DesignMatrix::new(runs, names.len(), cells, Provenance::External, 0)?;
    let perf: Vec<f64> = trials.iter().map(|t| t.value).collect();

    let defaults = default_hyper_hyperparams_with(runs, names.len(), options.q, options.p);
    let range_size = match options.range_size {
        Some(r) => r,
        None => defaults.range_size.min(max_range_count(runs)),
    };
    let beta = options.beta.unwrap_or(defaults.beta);
    let table = collapse(&design, &names, &perf, range_size)?;
    let outcome = analyze(&table, beta, iteration)?;
    Ok(Replay { table, outcome })
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<()> {
    let records = read_trial_log(&args.trial_log)?;
    let options = ReplayOptions {
        range_size: args.range_size,
        beta: args.beta,
        q: args.q.unwrap_or(DEFAULT_Q),
        p: args.p.unwrap_or(DEFAULT_P),
    };
    let replay = replay_iteration(&records, args.iteration, options)
        .with_context(|| format!("cannot analyze {}", args.trial_log.display()))?;
    if !args.quiet {
        println!("Collapsed range table (R = {})", replay.table.range_count);
        print!("{}", replay.table.to_csv());
        println!();
        print!("{}", replay.outcome.render_tables());
    }
    if let Some(path) = &args.table_out {
        write_output(Some(path), &replay.table.to_csv())?;
    }
    if let Some(path) = &args.json_out {
        write_output(
            Some(path),
            &(serde_json::to_string_pretty(&replay.outcome)? + "\n"),
        )?;
    }
    Ok(())
}
