//! MOFA against random search at equal budgets on analytic objectives.

use anyhow::Result;
use mofa::evaluator::{builtin_objective, Benchmark, Direction};
use mofa::metrics::compare_samplers;
use mofa::optimizer::{random_search, run_mofa, FinalStrategy, StudyConfig};
use mofa::sampler::Criterion;
use serde::{Deserialize, Serialize};

use crate::metrics::benchmark_space;
use crate::run::env_default_workers;
use crate::{write_output, BenchArgs};

/// Objectives and dimensions of the suite. Branin's extra two factors are inert.
pub const SUITE: [(&str, usize); 3] = [("branin", 4), ("sphere", 3), ("rosenbrock", 2)];
pub const ITERATIONS: usize = 3;
pub const RUNS_PER_ITERATION: usize = 9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub objective: String,
    pub dimension: usize,
    pub seeds: u64,
    pub direction: Direction,
    /// Median best-found values in the objective's own direction.
    pub mofa_median: f64,
    pub random_median: f64,
    pub mofa_better: bool,
}

fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Median best-found value of MOFA (greedy selection, `3 × 9` trials) and of
/// random search with the same total budget, over seeds `0..seeds`.
pub fn mofa_vs_random(
    name: &str,
    dimension: usize,
    seeds: u64,
    workers: usize,
) -> Result<BenchRow> {
    let objective = builtin_objective(name)?;
    let benchmark: Benchmark = name.parse()?;
    let space = benchmark_space(&benchmark, dimension)?;
    let budget = ITERATIONS * RUNS_PER_ITERATION;
    let mut mofa_best = Vec::new();
    let mut random_best = Vec::new();
    for seed in 0..seeds {
        let mut cfg = StudyConfig::new(space.clone(), objective.clone());
        cfg.max_iterations = ITERATIONS;
        cfg.samples_per_iteration_min = RUNS_PER_ITERATION;
        cfg.final_strategy = FinalStrategy::Greedy;
        cfg.workers = workers;
        cfg.seed = seed;
        let result = run_mofa(&cfg).map_err(|e| anyhow::anyhow!("{name}, seed {seed}: {e}"))?;
        mofa_best.push(result.best_value);

        let trials = random_search(&space, &objective, budget, seed, workers)?;
        let best = trials
            .iter()
            .filter(|t| t.is_ok())
            .map(|t| t.value)
            .fold(f64::NEG_INFINITY, f64::max);
        random_best.push(best);
    }
    let (m, r) = (median(mofa_best), median(random_best));
    Ok(BenchRow {
        objective: name.to_string(),
        dimension,
        seeds,
        direction: objective.direction,
        mofa_median: objective.direction.to_objective(m),
        random_median: objective.direction.to_objective(r),
        mofa_better: m > r,
    })
}

pub fn render_rows(rows: &[BenchRow]) -> String {
    let mut out = format!(
        "MOFA ({ITERATIONS} x {RUNS_PER_ITERATION}) against random search ({} trials), median best-found\n",
        ITERATIONS * RUNS_PER_ITERATION
    );
    out.push_str(&format!(
        "{:<12} {:>3} {:>9} {:>14} {:>14} {:>7}\n",
        "objective", "d", "direction", "mofa", "random", "winner"
    ));
    for r in rows {
        let direction = match r.direction {
            Direction::Maximize => "max",
            Direction::Minimize => "min",
        };
        out.push_str(&format!(
            "{:<12} {:>3} {:>9} {:>14.6} {:>14.6} {:>7}\n",
            r.objective,
            r.dimension,
            direction,
            r.mofa_median,
            r.random_median,
            if r.mofa_better { "mofa" } else { "random" }
        ));
    }
    out
}

pub fn cmd_bench(args: &BenchArgs) -> Result<()> {
    let workers = match args.workers {
        Some(w) => w,
        None => env_default_workers()?,
    };
    let rows = SUITE
        .iter()
        .map(|(name, d)| mofa_vs_random(name, *d, args.seeds, workers))
        .collect::<Result<Vec<_>>>()?;
    print!("{}", render_rows(&rows));
    println!();

    let branin = builtin_objective("branin")?;
    let space = benchmark_space(&"branin".parse()?, 3)?;
    let table = compare_samplers(&branin, &space, &Criterion::ALL, 81, 5, 0)?;
    print!("{}", table.render());

    if let Some(p) = &args.json_out {
        let doc = serde_json::json!({ "mofa_vs_random": rows, "samplers": table });
        write_output(Some(p), &(serde_json::to_string_pretty(&doc)? + "\n"))?;
    }
    Ok(())
}
