//! Collapse a continuous design into a range-indexed factorial table.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::DesignMatrix;

/// Design levels grouped into `range_count` equal-width ranges per factor,
/// together with the performance of each run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapsedTable {
    pub runs: usize,
    pub factors: usize,
    pub range_count: usize,
    pub factor_names: Vec<String>,
    /// Row-major `runs × factors` range indices in `1..=range_count`.
    pub levels: Vec<usize>,
    /// Maximize-normalized performance per run; NaN marks a failed trial.
    pub perf: Vec<f64>,
    /// `factors × range_count` occupancy counts (all runs, failed included).
    pub counts: Vec<Vec<usize>>,
}

impl CollapsedTable {
    pub fn level(&self, run: usize, factor: usize) -> usize {
        self.levels[run * self.factors + factor]
    }

    /// Range-index table as CSV: one column per factor plus `perf`.
    pub fn to_csv(&self) -> String {
        let mut out = self.factor_names.join(",");
        out.push_str(",perf\n");
        for r in 0..self.runs {
            for f in 0..self.factors {
                out.push_str(&self.level(r, f).to_string());
                out.push(',');
            }
            if self.perf[r].is_finite() {
                out.push_str(&self.perf[r].to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// Largest admissible range count for `runs` trials: `⌊√runs⌋`.
pub fn max_range_count(runs: usize) -> usize {
    let mut r = (runs as f64).sqrt() as usize;
    while r * r > runs {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= runs {
        r += 1;
    }
    r
}

/// Range index of unit value `u`: `⌊u·R⌋ + 1`, with `u = 1` mapped to `R`.
pub fn range_index(u: f64, range_count: usize) -> usize {
    ((u * range_count as f64).floor() as usize + 1).min(range_count)
}

pub fn collapse(
    design: &DesignMatrix,
    factor_names: &[String],
    perf: &[f64],
    range_count: usize,
) -> Result<CollapsedTable> {
    let runs = design.runs();
    let factors = design.factors();
    if perf.len() != runs {
        return Err(Error::Schema(format!(
            "performance vector has {} entries for {runs} runs",
            perf.len()
        )));
    }
    if factor_names.len() != factors {
        return Err(Error::Schema(format!(
            "{} factor names for {factors} design columns",
            factor_names.len()
        )));
    }
    if range_count < 1 {
        return Err(Error::Config("range size must be at least 1".into()));
    }
    let cap = max_range_count(runs);
    if range_count > cap {
        return Err(Error::Config(format!(
            "range size {range_count} exceeds floor(sqrt({runs})) = {cap}"
        )));
    }

    let mut levels = Vec::with_capacity(runs * factors);
    let mut counts = vec![vec![0; range_count]; factors];
    for row in design.rows() {
        for (f, &u) in row.iter().enumerate() {
            let r = range_index(u, range_count);
            counts[f][r - 1] += 1;
            levels.push(r);
        }
    }
    Ok(CollapsedTable {
        runs,
        factors,
        range_count,
        factor_names: factor_names.to_vec(),
        levels,
        perf: perf.to_vec(),
        counts,
    })
}
