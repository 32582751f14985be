//! Orthogonal Latin hypercubes from strength-2 orthogonal arrays.
//!
//! Symbols of an `OA(n², 2f, n, 2)` are relabelled through a base column (a
//! permutation of the centered levels `-(n-1)/2, …, (n-1)/2`) and each
//! consecutive column pair `(a, b)` is rotated to `(a - n·b, n·a + b)`. Every
//! output column is then a permutation of the centered levels of `N = n²`
//! runs and all columns are mutually uncorrelated.
//!
//! Centered values are half-integers when `n` is even, so this module works
//! with doubled integers throughout.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::oa::{construct_cyclic_oa, cyclic_max_columns, is_prime};
use super::{DesignMatrix, Provenance};
use crate::error::{Error, Result};

/// Largest prime considered when searching for a design size.
pub const MAX_LEVELS: u32 = 997;

/// Permutation of the `n` centered levels used to relabel OA symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaseColumn {
    levels: u32,
    /// Twice the centered value assigned to each symbol.
    doubled: Vec<i64>,
}

impl BaseColumn {
    /// Symbol `s` maps to the `s`-th smallest centered level.
    pub fn identity(n: u32) -> Self {
        Self::from_permutation(n, (0..n as usize).collect())
    }

    pub fn random<R: Rng + ?Sized>(n: u32, rng: &mut R) -> Self {
        let mut perm: Vec<usize> = (0..n as usize).collect();
        perm.shuffle(rng);
        Self::from_permutation(n, perm)
    }

    fn from_permutation(n: u32, perm: Vec<usize>) -> Self {
        let doubled = perm
            .into_iter()
            .map(|rank| 2 * rank as i64 - (i64::from(n) - 1))
            .collect();
        BaseColumn { levels: n, doubled }
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    /// Centered value assigned to each symbol `0..n`.
    pub fn values(&self) -> Vec<f64> {
        self.doubled.iter().map(|&v| v as f64 / 2.0).collect()
    }
}

/// Largest factor count an OLH with `n` levels per OA column can carry.
pub fn olh_capacity(n: u32) -> usize {
    2 * (cyclic_max_columns(n) / 2)
}

fn smallest_prime_supporting(d: usize) -> Option<u32> {
    (2..=MAX_LEVELS).find(|&n| is_prime(n) && olh_capacity(n) >= d)
}

/// Smallest prime `n` with `n² ≥ min_runs` whose OLH can hold `d` factors.
pub fn choose_olh_size(d: usize, min_runs: usize) -> Result<u32> {
    if d == 0 || min_runs == 0 {
        return Err(Error::Config(
            "factor count and run count must be positive".into(),
        ));
    }
    (2..=MAX_LEVELS)
        .find(|&n| is_prime(n) && (n as usize).pow(2) >= min_runs && olh_capacity(n) >= d)
        .ok_or_else(|| {
            Error::construction(format!(
                "no prime n <= {MAX_LEVELS} gives n^2 >= {min_runs} runs for {d} factors"
            ))
        })
}

/// Build an `n² × d` orthogonal Latin hypercube with a seeded random base column.
///
/// Cells sit at bin midpoints `(2i + 1) / 2N`.
pub fn construct_olh(n: u32, d: usize, seed: u64) -> Result<DesignMatrix> {
    construct_olh_with(n, d, seed, false)
}

/// As [`construct_olh`]; with `jitter` each cell is drawn uniformly inside its
/// bin instead of sitting at the midpoint (the Latin property is kept, exact
/// orthogonality is not).
pub fn construct_olh_with(n: u32, d: usize, seed: u64, jitter: bool) -> Result<DesignMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    check_feasible(n, d)?;
    let base = BaseColumn::random(n, &mut rng);
    let levels = olh_levels(&base, d)?;
    let runs = (n as usize).pow(2);
    let cells = levels
        .into_iter()
        .map(|i| {
            let offset = if jitter { rng.random::<f64>() } else { 0.5 };
            (i as f64 + offset) / runs as f64
        })
        .collect();
    DesignMatrix::new(runs, d, cells, Provenance::Olh, seed)
}

fn check_feasible(n: u32, d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::construction("an OLH needs at least one factor"));
    }
    if n < 2 {
        return Err(Error::construction(format!(
            "need at least 2 levels, got {n}"
        )));
    }
    let capacity = olh_capacity(n);
    if d > capacity {
        let min = smallest_prime_supporting(d);
        return Err(Error::Construction {
            message: format!(
                "an OLH with n = {n} supports at most {capacity} factors, requested {d}"
            ),
            min_feasible_levels: min,
        });
    }
    Ok(())
}

/// Row-major bin indices `0..N` of the OLH built from `base`.
pub fn olh_levels(base: &BaseColumn, d: usize) -> Result<Vec<usize>> {
    let n = base.levels();
    check_feasible(n, d)?;
    let pairs = d.div_ceil(2);
    let oa = construct_cyclic_oa(n, 2 * pairs)?;
    let scale = i64::from(n);
    let runs = oa.runs() as i64;
    let mut out = Vec::with_capacity(oa.runs() * d);
    for r in 0..oa.runs() {
        let row = oa.row(r);
        for c in 0..d {
            let a = base.doubled[row[2 * (c / 2)] as usize];
            let b = base.doubled[row[2 * (c / 2) + 1] as usize];
            let doubled = if c % 2 == 0 {
                a - scale * b
            } else {
                scale * a + b
            };
            out.push(((doubled + runs - 1) / 2) as usize);
        }
    }
    Ok(out)
}
