use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::olh::construct_olh;
use super::{Criterion, DesignMatrix};
use crate::error::{Error, Result};
use crate::seed::sub_seed;
use crate::stats::pearson;

/// Candidate designs scored by the maximin criteria.
pub const MAXIMIN_CANDIDATES: usize = 200;
/// Swap attempts made by the minimum-correlation search.
pub const MINCORR_SWAPS: usize = 1000;

/// Sample an `runs × factors` Latin hypercube under `criterion`.
///
/// `Orthogonality` requires `runs = n²` for an `n` whose orthogonal Latin
/// hypercube can hold `factors` columns.
pub fn sample_lhs(
    runs: usize,
    factors: usize,
    criterion: Criterion,
    seed: u64,
) -> Result<DesignMatrix> {
    if runs < 2 || factors == 0 {
        return Err(Error::Config(format!(
            "a Latin hypercube needs at least 2 runs and 1 factor (got {runs} x {factors})"
        )));
    }
    let (levels, cells) = match criterion {
        Criterion::Random => (None, random_lhs(runs, factors, false, seed)),
        Criterion::Centered => (None, random_lhs(runs, factors, true, seed)),
        Criterion::Maximin => (None, best_maximin(runs, factors, false, seed)),
        Criterion::CenteredMaximin => (None, best_maximin(runs, factors, true, seed)),
        Criterion::Correlation => (None, min_correlation(runs, factors, seed)),
        Criterion::Orthogonality => {
            let n = (runs as f64).sqrt().round() as usize;
            if n * n != runs {
                return Err(Error::construction(format!(
                    "orthogonality sampling needs a square run count, got {runs}"
                )));
            }
            (Some(n as u32), Vec::new())
        }
    };
    match levels {
        Some(n) => construct_olh(n, factors, seed),
        None => DesignMatrix::new(runs, factors, cells, criterion.provenance(), seed),
    }
}

fn random_lhs(runs: usize, factors: usize, centered: bool, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_lhs_with(runs, factors, centered, &mut rng)
}

fn random_lhs_with<R: Rng>(runs: usize, factors: usize, centered: bool, rng: &mut R) -> Vec<f64> {
    let mut cells = vec![0.0; runs * factors];
    let mut perm: Vec<usize> = (0..runs).collect();
    for c in 0..factors {
        perm.shuffle(rng);
        for (r, &bin) in perm.iter().enumerate() {
            let offset = if centered { 0.5 } else { rng.random::<f64>() };
            cells[r * factors + c] = (bin as f64 + offset) / runs as f64;
        }
    }
    cells
}

fn min_pairwise_distance(cells: &[f64], runs: usize, factors: usize) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..runs {
        let a = &cells[i * factors..(i + 1) * factors];
        for j in (i + 1)..runs {
            let b = &cells[j * factors..(j + 1) * factors];
            let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
            best = best.min(d2);
        }
    }
    best.sqrt()
}

/// Best of [`MAXIMIN_CANDIDATES`] random designs. Candidate 0 is exactly the
/// design the corresponding non-maximin criterion produces for `seed`.
fn best_maximin(runs: usize, factors: usize, centered: bool, seed: u64) -> Vec<f64> {
    let mut best = random_lhs(runs, factors, centered, seed);
    let mut best_score = min_pairwise_distance(&best, runs, factors);
    for k in 1..MAXIMIN_CANDIDATES {
        let cand = random_lhs(runs, factors, centered, sub_seed(seed, "maximin", k as u64));
        let score = min_pairwise_distance(&cand, runs, factors);
        if score > best_score {
            best = cand;
            best_score = score;
        }
    }
    best
}

fn max_abs_correlation(cells: &[f64], runs: usize, factors: usize) -> f64 {
    let columns: Vec<Vec<f64>> = (0..factors)
        .map(|c| (0..runs).map(|r| cells[r * factors + c]).collect())
        .collect();
    let mut worst: f64 = 0.0;
    for a in 0..factors {
        for b in (a + 1)..factors {
            let rho = pearson(&columns[a], &columns[b]).unwrap_or(1.0);
            worst = worst.max(rho.abs());
        }
    }
    worst
}

/// Within-column swap search starting from the random design for `seed`.
fn min_correlation(runs: usize, factors: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cells = random_lhs_with(runs, factors, false, &mut rng);
    if factors < 2 {
        return cells;
    }
    let mut current = max_abs_correlation(&cells, runs, factors);
    for _ in 0..MINCORR_SWAPS {
        let c = rng.random_range(0..factors);
        let i = rng.random_range(0..runs);
        let j = rng.random_range(0..runs);
        if i == j {
            continue;
        }
        cells.swap(i * factors + c, j * factors + c);
        let score = max_abs_correlation(&cells, runs, factors);
        if score < current {
            current = score;
        } else {
            cells.swap(i * factors + c, j * factors + c);
        }
    }
    cells
}

#[cfg(test)]
mod tests {
    use super::*;

    fn is_latin(d: &DesignMatrix) -> bool {
        let n = d.runs();
        (0..d.factors()).all(|c| {
            let mut seen = vec![false; n];
            d.column(c).iter().all(|&u| {
                let bin = ((u * n as f64).floor() as usize).min(n - 1);
                !std::mem::replace(&mut seen[bin], true)
            })
        })
    }

    #[test]
    fn centered_columns_are_midpoints() {
        let d = sample_lhs(9, 2, Criterion::Centered, 4).unwrap();
        for c in 0..2 {
            let mut col: Vec<i64> = d
                .column(c)
                .iter()
                .map(|u| (u * 18.0).round() as i64)
                .collect();
            col.sort_unstable();
            assert_eq!(col, vec![1, 3, 5, 7, 9, 11, 13, 15, 17]);
        }
    }

    #[test]
    fn maximin_not_worse_than_random() {
        for seed in 0..10 {
            let r = sample_lhs(9, 2, Criterion::Random, seed).unwrap();
            let m = sample_lhs(9, 2, Criterion::Maximin, seed).unwrap();
            assert!(
                min_pairwise_distance(m.cells(), 9, 2) >= min_pairwise_distance(r.cells(), 9, 2)
            );
            let r = sample_lhs(9, 2, Criterion::Centered, seed).unwrap();
            let m = sample_lhs(9, 2, Criterion::CenteredMaximin, seed).unwrap();
            assert!(
                min_pairwise_distance(m.cells(), 9, 2) >= min_pairwise_distance(r.cells(), 9, 2)
            );
        }
    }

    #[test]
    fn mincorr_not_worse_than_start() {
        let r = sample_lhs(25, 3, Criterion::Random, 9).unwrap();
        let m = sample_lhs(25, 3, Criterion::Correlation, 9).unwrap();
        assert!(max_abs_correlation(m.cells(), 25, 3) <= max_abs_correlation(r.cells(), 25, 3));
        assert!(is_latin(&m));
    }

    #[test]
    fn orthogonality_delegates() {
        let a = sample_lhs(9, 3, Criterion::Orthogonality, 5).unwrap();
        let b = construct_olh(3, 3, 5).unwrap();
        assert_eq!(a, b);
        assert!(sample_lhs(80, 3, Criterion::Orthogonality, 5).is_err());
        assert!(sample_lhs(81, 4, Criterion::Orthogonality, 5).is_ok());
    }

    #[test]
    fn all_criteria_latin() {
        for crit in Criterion::ALL {
            let d = sample_lhs(25, 4, crit, 3).unwrap();
            assert!(is_latin(&d), "{crit} violates the Latin property");
        }
    }

    #[test]
    fn rejects_degenerate_sizes() {
        assert!(sample_lhs(1, 2, Criterion::Random, 0).is_err());
        assert!(sample_lhs(4, 0, Criterion::Random, 0).is_err());
    }
}
