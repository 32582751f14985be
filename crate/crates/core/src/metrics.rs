//! Uniformity and orthogonality diagnostics for designs, and a
//! pick-the-best comparison of sampling criteria.
//!
//! For a point set `X` in `[0,1]^d` and an integrand of bounded variation
//! `V(f)`, the error of the design mean is bounded by `V(f)·D*(X)`. For i.i.d.
//! uniform points `P(D* ≤ c·√(d/N)) ≥ 1 − exp(−(1.6741c² − 11.7042)d)`, while
//! Latin hypercubes admit tighter constants (5.7 and 4.9 in place of the above
//! at equal confidence). These bounds are loose at small `N`; the functions
//! here compute the quantities themselves so orderings can be compared.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluator::{evaluate_batch, ObjectiveSpec, TrialRequest};
use crate::sampler::{sample_lhs, Criterion, DesignMatrix};
use crate::seed::sub_seed;
use crate::space::SearchSpace;
use crate::stats::pearson;

/// Largest dimension handled by exact enumeration.
pub const EXACT_MAX_DIMENSION: usize = 3;
/// Boxes drawn by the snapped-box estimator.
pub const DEFAULT_ESTIMATE_BOXES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiscrepancyMethod {
    Exact,
    Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    pub value: f64,
    pub method: DiscrepancyMethod,
    pub points: usize,
    pub dimension: usize,
    pub boxes_checked: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscrepancyOptions {
    pub force_estimate: bool,
    pub boxes: usize,
    pub seed: u64,
}

impl Default for DiscrepancyOptions {
    fn default() -> Self {
        DiscrepancyOptions {
            force_estimate: false,
            boxes: DEFAULT_ESTIMATE_BOXES,
            seed: 0,
        }
    }
}

/// Star discrepancy of the rows of `points`: exact for `d ≤ 3`, otherwise a
/// seeded lower-bound estimate.
pub fn star_discrepancy(points: &[Vec<f64>]) -> Result<DiscrepancyReport> {
    star_discrepancy_with(points, DiscrepancyOptions::default())
}

pub fn star_discrepancy_with(
    points: &[Vec<f64>],
    options: DiscrepancyOptions,
) -> Result<DiscrepancyReport> {
    let n = points.len();
    if n == 0 {
        return Err(Error::Bounds("discrepancy needs at least one point".into()));
    }
    let d = points[0].len();
    if d == 0 {
        return Err(Error::Bounds("points have no coordinates".into()));
    }
    for (i, p) in points.iter().enumerate() {
        if p.len() != d {
            return Err(Error::Schema(format!(
                "point {i} has {} coordinates, expected {d}",
                p.len()
            )));
        }
        if let Some(x) = p.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::Bounds(format!(
                "coordinate {x} of point {i} is outside [0, 1]"
            )));
        }
    }

    // Per-dimension corner grid: sorted distinct coordinates plus 1.
    let grids: Vec<Vec<f64>> = (0..d)
        .map(|k| {
            let mut g: Vec<f64> = points.iter().map(|p| p[k]).collect();
            g.push(1.0);
            g.sort_by(f64::total_cmp);
            g.dedup();
            g
        })
        .collect();

    if d <= EXACT_MAX_DIMENSION && !options.force_estimate {
        let (value, boxes) = exact_discrepancy(points, &grids);
        return Ok(DiscrepancyReport {
            value,
            method: DiscrepancyMethod::Exact,
            points: n,
            dimension: d,
            boxes_checked: boxes,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let nf = n as f64;
    let mut value: f64 = 0.0;
    let mut corner = vec![0.0; d];
    for _ in 0..options.boxes {
        for (c, g) in corner.iter_mut().zip(&grids) {
            *c = g[rng.random_range(0..g.len())];
        }
        let volume: f64 = corner.iter().product();
        let (mut open, mut closed) = (0usize, 0usize);
        for p in points {
            if p.iter().zip(&corner).all(|(x, c)| x <= c) {
                closed += 1;
                if p.iter().zip(&corner).all(|(x, c)| x < c) {
                    open += 1;
                }
            }
        }
        value = value
            .max(volume - open as f64 / nf)
            .max(closed as f64 / nf - volume);
    }
    Ok(DiscrepancyReport {
        value,
        method: DiscrepancyMethod::Estimate,
        points: n,
        dimension: d,
        boxes_checked: options.boxes,
    })
}

/// Exhaustive evaluation over all grid corners using a d-dimensional prefix
/// count of points below each corner.
fn exact_discrepancy(points: &[Vec<f64>], grids: &[Vec<f64>]) -> (f64, usize) {
    let d = grids.len();
    let dims: Vec<usize> = grids.iter().map(Vec::len).collect();
    let mut strides = vec![1usize; d];
    for k in (0..d.saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    let total: usize = dims.iter().product();

    // closed[idx] = #points with every coordinate ≤ the corner at idx.
    let mut closed = vec![0usize; total];
    for p in points {
        let idx: usize = (0..d)
            .map(|k| grids[k].partition_point(|g| *g < p[k]) * strides[k])
            .sum();
        closed[idx] += 1;
    }
    for k in 0..d {
        for idx in 0..total {
            if !(idx / strides[k]).is_multiple_of(dims[k]) {
                closed[idx] += closed[idx - strides[k]];
            }
        }
    }

    let nf = points.len() as f64;
    let mut value: f64 = 0.0;
    let mut pos = vec![0usize; d];
    for idx in 0..total {
        let mut rem = idx;
        for k in 0..d {
            pos[k] = rem / strides[k];
            rem %= strides[k];
        }
        let volume: f64 = (0..d).map(|k| grids[k][pos[k]]).product();
        // Points strictly below the corner sit at the previous grid index.
        let open = if pos.iter().all(|&i| i > 0) {
            closed[idx - strides.iter().sum::<usize>()]
        } else {
            0
        };
        value = value
            .max(volume - open as f64 / nf)
            .max(closed[idx] as f64 / nf - volume);
    }
    (value, total)
}

/// Maximum absolute Pearson correlation over all column pairs.
pub fn max_column_correlation(design: &DesignMatrix) -> Result<f64> {
    if design.factors() < 2 {
        return Err(Error::Correlation(
            "correlation needs at least two columns".into(),
        ));
    }
    if design.runs() < 3 {
        return Err(Error::Correlation(
            "correlation needs at least three runs".into(),
        ));
    }
    let columns: Vec<Vec<f64>> = (0..design.factors()).map(|c| design.column(c)).collect();
    let mut worst: f64 = 0.0;
    for a in 0..columns.len() {
        for b in (a + 1)..columns.len() {
            let r = pearson(&columns[a], &columns[b])
                .ok_or_else(|| Error::Correlation(format!("column {a} or {b} is constant")))?;
            worst = worst.max(r.abs());
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectionViolation {
    pub column: usize,
    /// Bin `[bin/N, (bin+1)/N)`.
    pub bin: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectionReport {
    pub runs: usize,
    pub factors: usize,
    pub violations: Vec<ProjectionViolation>,
}

impl ProjectionReport {
    pub fn is_uniform(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check that every column has exactly one point in each of the `N` bins.
pub fn projection_uniformity_check(design: &DesignMatrix) -> ProjectionReport {
    let n = design.runs();
    let mut violations = Vec::new();
    for c in 0..design.factors() {
        let mut counts = vec![0usize; n];
        for u in design.column(c) {
            counts[((u * n as f64).floor() as usize).min(n - 1)] += 1;
        }
        violations.extend(counts.into_iter().enumerate().filter(|(_, k)| *k != 1).map(
            |(bin, count)| ProjectionViolation {
                column: c,
                bin,
                count,
            },
        ));
    }
    ProjectionReport {
        runs: n,
        factors: design.factors(),
        violations,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub criterion: Criterion,
    /// Mean over repetitions of the best maximize-normalized value found.
    pub mean_best: Option<f64>,
    pub best_per_rep: Vec<f64>,
    pub mean_discrepancy: Option<f64>,
    pub mean_correlation: Option<f64>,
    pub error: Option<String>,
    /// Design of the first repetition.
    #[serde(skip)]
    pub example: Option<DesignMatrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub runs: usize,
    pub factors: usize,
    pub repetitions: usize,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    pub fn render(&self) -> String {
        let mut out = format!(
            "Pick-the-best comparison (N = {}, d = {}, repetitions = {})\n",
            self.runs, self.factors, self.repetitions
        );
        out.push_str(&format!(
            "{:<18} {:>14} {:>12} {:>12}\n",
            "criterion", "mean best", "D*", "max |corr|"
        ));
        let cell = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.6}"));
        for row in &self.rows {
            match &row.error {
                Some(e) => out.push_str(&format!("{:<18} error: {e}\n", row.criterion.as_str())),
                None => out.push_str(&format!(
                    "{:<18} {:>14} {:>12} {:>12}\n",
                    row.criterion.as_str(),
                    cell(row.mean_best),
                    cell(row.mean_discrepancy),
                    cell(row.mean_correlation)
                )),
            }
        }
        out
    }

    /// Per-dimension projections of each criterion's first design as CSV.
    pub fn projections_csv(&self) -> String {
        let mut out = String::from("criterion,run,factor,value\n");
        for row in &self.rows {
            if let Some(design) = &row.example {
                for (r, point) in design.rows().enumerate() {
                    for (f, u) in point.iter().enumerate() {
                        out.push_str(&format!("{},{r},{f},{u}\n", row.criterion.as_str()));
                    }
                }
            }
        }
        out
    }
}

struct RepOutcome {
    best: f64,
    discrepancy: f64,
    correlation: Option<f64>,
    design: DesignMatrix,
}

fn run_rep(
    objective: &ObjectiveSpec,
    space: &SearchSpace,
    criterion: Criterion,
    runs: usize,
    seed: u64,
) -> Result<RepOutcome> {
    let active = space.active_names();
    let design = sample_lhs(runs, active.len(), criterion, seed)?;
    let requests = design
        .rows()
        .enumerate()
        .map(|(i, row)| {
            Ok(TrialRequest {
                trial_id: i as u64,
                iteration: 1,
                raw_params: space.denormalize_slice(row)?,
                active_factors: active.clone(),
                unit_params: row.to_vec(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = evaluate_batch(requests, objective, 1)?
        .iter()
        .filter(|t| t.is_ok())
        .map(|t| t.value)
        .fold(f64::NEG_INFINITY, f64::max);
    let points: Vec<Vec<f64>> = design.rows().map(<[f64]>::to_vec).collect();
    let discrepancy = star_discrepancy(&points)?.value;
    let correlation = max_column_correlation(&design).ok();
    Ok(RepOutcome {
        best,
        discrepancy,
        correlation,
        design,
    })
}

/// Sample `runs` configurations with each criterion, evaluate them, and
/// average the best value over `repetitions`. Repetitions run in parallel.
pub fn compare_samplers(
    objective: &ObjectiveSpec,
    space: &SearchSpace,
    criteria: &[Criterion],
    runs: usize,
    repetitions: usize,
    seed: u64,
) -> Result<ComparisonTable> {
    if repetitions == 0 {
        return Err(Error::Config("repetitions must be at least 1".into()));
    }
    objective.validate()?;
    objective.check_dimension(space.factors().len())?;
    let factors = space.active_count();
    let mut rows = Vec::with_capacity(criteria.len());
    for &criterion in criteria {
        let outcomes: Result<Vec<RepOutcome>> = (0..repetitions)
            .into_par_iter()
            .map(|rep| {
                let s = sub_seed(seed, criterion.as_str(), rep as u64);
                run_rep(objective, space, criterion, runs, s)
            })
            .collect();
        let row = match outcomes {
            Ok(outs) => {
                let reps = outs.len() as f64;
                let correlations: Option<Vec<f64>> = outs.iter().map(|o| o.correlation).collect();
                ComparisonRow {
                    criterion,
                    mean_best: Some(outs.iter().map(|o| o.best).sum::<f64>() / reps),
                    best_per_rep: outs.iter().map(|o| o.best).collect(),
                    mean_discrepancy: Some(outs.iter().map(|o| o.discrepancy).sum::<f64>() / reps),
                    mean_correlation: correlations.map(|c| c.iter().sum::<f64>() / reps),
                    error: None,
                    example: outs.into_iter().next().map(|o| o.design),
                }
            }
            Err(Error::Construction { message, .. }) => ComparisonRow {
                criterion,
                mean_best: None,
                best_per_rep: Vec::new(),
                mean_discrepancy: None,
                mean_correlation: None,
                error: Some(message),
                example: None,
            },
            Err(e) => return Err(e),
        };
        rows.push(row);
    }
    Ok(ComparisonTable {
        runs,
        factors,
        repetitions,
        rows,
    })
}
