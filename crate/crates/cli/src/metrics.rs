use anyhow::{Context, Result};
use mofa::evaluator::{builtin_objective, Benchmark};
use mofa::metrics::{
    compare_samplers, max_column_correlation, projection_uniformity_check, star_discrepancy_with,
    DiscrepancyOptions,
};
use mofa::sampler::{Criterion, DesignMatrix};
use mofa::space::{FactorDef, SearchSpace};
use serde_json::json;

use crate::sample::read_design_csv;
use crate::{write_output, CompareArgs, MetricsCommand};

fn load(path: &std::path::Path) -> Result<DesignMatrix> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    read_design_csv(&text).with_context(|| format!("invalid design {}", path.display()))
}

fn emit_json(path: Option<&std::path::Path>, value: &serde_json::Value) -> Result<()> {
    write_output(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

/// Search space of a builtin objective at dimension `d`, named `x1..xd`.
pub fn benchmark_space(benchmark: &Benchmark, d: usize) -> Result<SearchSpace> {
    let factors = benchmark
        .default_bounds(d)
        .into_iter()
        .enumerate()
        .map(|(i, (lo, hi))| FactorDef::continuous(format!("x{}", i + 1), lo, hi))
        .collect();
    Ok(SearchSpace::new(factors)?)
}

pub fn parse_criteria(list: &str) -> Result<Vec<Criterion>> {
    if list.trim() == "all" {
        return Ok(Criterion::ALL.to_vec());
    }
    list.split(',')
        .map(|c| Ok(c.trim().parse::<Criterion>()?))
        .collect()
}

fn cmd_compare(args: &CompareArgs) -> Result<()> {
    let objective = builtin_objective(&args.objective)?;
    let benchmark: Benchmark = args.objective.parse()?;
    let space = benchmark_space(&benchmark, args.factors)?;
    let criteria = parse_criteria(&args.criteria)?;
    let table = compare_samplers(
        &objective, &space, &criteria, args.runs, args.reps, args.seed,
    )?;
    print!("{}", table.render());
    if let Some(p) = &args.json_out {
        write_output(Some(p), &(serde_json::to_string_pretty(&table)? + "\n"))?;
    }
    if let Some(p) = &args.projections_out {
        write_output(Some(p), &table.projections_csv())?;
    }
    Ok(())
}

pub fn cmd_metrics(cmd: &MetricsCommand) -> Result<()> {
    match cmd {
        MetricsCommand::Discrepancy(a) => {
            let design = load(&a.csv)?;
            let points: Vec<Vec<f64>> = design.rows().map(<[f64]>::to_vec).collect();
            let options = DiscrepancyOptions {
                force_estimate: a.estimate,
                boxes: a.boxes,
                seed: a.seed,
            };
            let report = star_discrepancy_with(&points, options)?;
            println!(
                "D* = {} ({:?}, {} points, d = {}, {} boxes)",
                report.value, report.method, report.points, report.dimension, report.boxes_checked
            );
            if let Some(p) = &a.json_out {
                emit_json(Some(p), &serde_json::to_value(&report)?)?;
            }
        }
        MetricsCommand::Correlation(a) => {
            let design = load(&a.csv)?;
            let value = max_column_correlation(&design)?;
            println!("max |column correlation| = {value}");
            if let Some(p) = &a.json_out {
                emit_json(Some(p), &json!({ "max_abs_correlation": value }))?;
            }
        }
        MetricsCommand::Uniformity(a) => {
            let design = load(&a.csv)?;
            let report = projection_uniformity_check(&design);
            if report.is_uniform() {
                println!("uniform: every column has one point per bin");
            } else {
                for v in &report.violations {
                    println!("column {} bin {}: {} points", v.column + 1, v.bin, v.count);
                }
            }
            if let Some(p) = &a.json_out {
                emit_json(Some(p), &serde_json::to_value(&report)?)?;
            }
        }
        MetricsCommand::Compare(a) => cmd_compare(a)?,
    }
    Ok(())
}
