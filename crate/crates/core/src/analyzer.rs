//! Factorial performance and importance analysis of a collapsed table.
//!
//! Performance analysis averages the performance of every run sharing a
//! (factor, range) cell and picks the best range per factor. Importance is
//! the population variance of a factor's range means, normalized so the
//! importances of all analyzed factors sum to one. Factors whose importance
//! falls below the threshold β are frozen at the median of their best range.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transformer::CollapsedTable;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrozenFactor {
    pub factor: String,
    /// Position inside the factor's current interval, in `[0, 1]`.
    pub unit_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOutcome {
    pub iteration: usize,
    pub factors: Vec<String>,
    pub range_count: usize,
    /// `factors × range_count` marginal mean performance.
    pub marginal_means: Vec<Vec<f64>>,
    /// Best range per factor, 1-based.
    pub best_range: Vec<usize>,
    pub importance: Vec<f64>,
    pub frozen: Vec<FrozenFactor>,
    pub beta: f64,
}

impl AnalysisOutcome {
    pub fn is_frozen(&self, factor: &str) -> bool {
        self.frozen.iter().any(|f| f.factor == factor)
    }

    /// Aligned text rendering of the performance and importance tables.
    pub fn render_tables(&self) -> String {
        let width = self
            .factors
            .iter()
            .map(String::len)
            .max()
            .unwrap_or(6)
            .max(6);
        let mut out = String::from("Factorial performance analysis\n");
        out.push_str(&format!("{:<width$}", "factor"));
        for r in 1..=self.range_count {
            out.push_str(&format!(" {:>12}", format!("range {r}")));
        }
        out.push_str(&format!(" {:>6}\n", "best"));
        for (f, name) in self.factors.iter().enumerate() {
            out.push_str(&format!("{name:<width$}"));
            for m in &self.marginal_means[f] {
                out.push_str(&format!(" {m:>12.6}"));
            }
            out.push_str(&format!(" {:>6}\n", self.best_range[f]));
        }
        out.push_str(&format!(
            "\nFactorial importance analysis (beta = {})\n",
            self.beta
        ));
        out.push_str(&format!(
            "{:<width$} {:>10} {:>8}\n",
            "factor", "importance", "action"
        ));
        for (f, name) in self.factors.iter().enumerate() {
            let action = match self.frozen.iter().find(|z| &z.factor == name) {
                Some(z) => format!("freeze@{:.4}", z.unit_value),
                None => "search".to_string(),
            };
            out.push_str(&format!(
                "{name:<width$} {:>10.4} {action:>8}\n",
                self.importance[f]
            ));
        }
        out
    }
}

/// Marginal mean per (factor, range) and the best range of each factor.
///
/// Runs with non-finite performance are skipped. Ties go to the lowest range.
pub fn performance_analysis(table: &CollapsedTable) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
    let ok: Vec<usize> = (0..table.runs)
        .filter(|&r| table.perf[r].is_finite())
        .collect();
    if ok.is_empty() {
        return Err(Error::Analysis("no successful trials to analyze".into()));
    }
    // Work on deviations from the grand mean so a constant column yields
    // exactly equal range means.
    let grand = ok.iter().map(|&r| table.perf[r]).sum::<f64>() / ok.len() as f64;

    let mut means = Vec::with_capacity(table.factors);
    let mut best = Vec::with_capacity(table.factors);
    for f in 0..table.factors {
        let mut sums = vec![0.0; table.range_count];
        let mut counts = vec![0usize; table.range_count];
        for &r in &ok {
            let level = table.level(r, f) - 1;
            sums[level] += table.perf[r] - grand;
            counts[level] += 1;
        }
        let mut row = Vec::with_capacity(table.range_count);
        for (level, (s, c)) in sums.iter().zip(&counts).enumerate() {
            if *c == 0 {
                return Err(Error::Analysis(format!(
                    "factor `{}` range {} has no successful trial",
                    table.factor_names[f],
                    level + 1
                )));
            }
            row.push(s / *c as f64);
        }
        let mut arg = 0;
        for (i, v) in row.iter().enumerate() {
            if *v > row[arg] {
                arg = i;
            }
        }
        best.push(arg + 1);
        means.push(row.into_iter().map(|d| grand + d).collect());
    }
    Ok((means, best))
}

/// Normalized variance of each factor's range means. All zeros when no
/// factor's means vary.
pub fn importance_analysis(marginal_means: &[Vec<f64>]) -> Vec<f64> {
    let variances: Vec<f64> = marginal_means
        .iter()
        .map(|row| {
            // Shifting by the first entry keeps equal means at exactly zero.
            let shifted: Vec<f64> = row.iter().map(|v| v - row[0]).collect();
            crate::stats::population_variance(&shifted)
        })
        .collect();
    let total: f64 = variances.iter().sum();
    if total <= 0.0 || !total.is_finite() {
        return vec![0.0; variances.len()];
    }
    variances.iter().map(|v| v / total).collect()
}

/// Full analysis: best ranges, importances, and freeze decisions under `beta`.
pub fn analyze(table: &CollapsedTable, beta: f64, iteration: usize) -> Result<AnalysisOutcome> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Config(format!(
            "beta must satisfy 0 < beta < 1, got {beta}"
        )));
    }
    let (marginal_means, best_range) = performance_analysis(table)?;
    let importance = importance_analysis(&marginal_means);
    let range_count = table.range_count as f64;
    let frozen = table
        .factor_names
        .iter()
        .zip(&importance)
        .zip(&best_range)
        .filter(|((_, imp), _)| **imp < beta)
        .map(|((name, _), &best)| FrozenFactor {
            factor: name.clone(),
            unit_value: (best as f64 - 0.5) / range_count,
        })
        .collect();
    Ok(AnalysisOutcome {
        iteration,
        factors: table.factor_names.clone(),
        range_count: table.range_count,
        marginal_means,
        best_range,
        importance,
        frozen,
        beta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `OA(9, 3, 3, 2)` levels in 1..=3: columns y, x, x + y (mod 3).
    fn oa9() -> Vec<[usize; 3]> {
        let mut rows = Vec::new();
        for y in 0..3 {
            for x in 0..3 {
                rows.push([y + 1, x + 1, (x + y) % 3 + 1]);
            }
        }
        rows
    }

    fn table(perf: Vec<f64>) -> CollapsedTable {
        let rows = oa9();
        CollapsedTable {
            runs: 9,
            factors: 3,
            range_count: 3,
            factor_names: vec!["lr".into(), "lam".into(), "units".into()],
            levels: rows.iter().flatten().copied().collect(),
            perf,
            counts: vec![vec![3, 3, 3]; 3],
        }
    }

    #[test]
    fn perf_equal_to_first_level() {
        let perf: Vec<f64> = oa9().iter().map(|r| r[0] as f64).collect();
        let (means, best) = performance_analysis(&table(perf)).unwrap();
        assert_eq!(means[0], vec![1.0, 2.0, 3.0]);
        assert_eq!(best[0], 3);
        assert_eq!(means[1], vec![2.0, 2.0, 2.0]);
        assert_eq!(means[2], vec![2.0, 2.0, 2.0]);
        let imp = importance_analysis(&means);
        assert_eq!(imp, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn constant_perf() {
        let t = table(vec![0.7; 9]);
        let (means, best) = performance_analysis(&t).unwrap();
        assert!(means.iter().flatten().all(|m| *m == means[0][0]));
        assert_eq!(best, vec![1, 1, 1]);
        assert_eq!(importance_analysis(&means), vec![0.0; 3]);
        let out = analyze(&t, 0.1, 1).unwrap();
        assert_eq!(out.frozen.len(), 3);
        assert!(out
            .frozen
            .iter()
            .all(|f| (f.unit_value - 1.0 / 6.0).abs() < 1e-15));
    }

    #[test]
    fn best_range_selected() {
        // Range-1 mean of lr is the largest.
        let perf: Vec<f64> = oa9()
            .iter()
            .map(|r| [0.819, 0.7, 0.6][r[0] - 1] + 0.01 * r[1] as f64)
            .collect();
        let (means, best) = performance_analysis(&table(perf)).unwrap();
        assert_eq!(best[0], 1);
        assert!((means[0][0] - 0.839).abs() < 1e-12);
    }

    #[test]
    fn empty_cell_is_reported() {
        let mut perf = vec![1.0; 9];
        for (i, r) in oa9().iter().enumerate() {
            if r[0] == 2 {
                perf[i] = f64::NAN;
            }
        }
        match performance_analysis(&table(perf)) {
            Err(Error::Analysis(msg)) => assert!(msg.contains("`lr` range 2"), "{msg}"),
            other => panic!("{other:?}"),
        }
        assert!(performance_analysis(&table(vec![f64::NAN; 9])).is_err());
    }

    #[test]
    fn freezing_threshold() {
        let perf: Vec<f64> = oa9()
            .iter()
            .map(|r| [3.0, 0.0, 0.0][r[0] - 1] + [0.0, 0.1, 0.0][r[2] - 1])
            .collect();
        let t = table(perf);
        let out = analyze(&t, 0.1, 1).unwrap();
        let frozen: Vec<&str> = out.frozen.iter().map(|f| f.factor.as_str()).collect();
        assert_eq!(frozen, vec!["lam", "units"]);
        let units = out.frozen.iter().find(|f| f.factor == "units").unwrap();
        assert_eq!(units.unit_value, 0.5);

        let none = analyze(&t, 1e-9, 1).unwrap();
        assert!(none.frozen.iter().all(|f| f.factor != "lr"));
        assert!(matches!(analyze(&t, 0.0, 1), Err(Error::Config(_))));
    }

    #[test]
    fn tables_render() {
        let perf: Vec<f64> = oa9().iter().map(|r| r[0] as f64).collect();
        let text = analyze(&table(perf), 0.1, 1).unwrap().render_tables();
        assert!(text.contains("Factorial performance analysis"));
        assert!(text.contains("freeze@"));
    }
}
