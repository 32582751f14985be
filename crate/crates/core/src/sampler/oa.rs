//! Strength-2 orthogonal arrays with `n²` runs.
//!
//! Rows are indexed by `(x, y) ∈ Z_n²` with `x` varying fastest. Column 1 is
//! `y`, column 2 is `x` and column `j ≥ 3` is `(x + (j - 2)·y) mod n`. Two
//! columns `x + a·y` and `x + b·y` form every symbol pair exactly once iff
//! `a - b` is a unit modulo `n`, so the construction yields `p + 1` columns
//! where `p` is the smallest prime factor of `n` (all `n + 1` when `n` is prime).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An `n² × k` table over the symbols `0..n` with strength 2.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrthogonalArray {
    levels: u32,
    columns: usize,
    cells: Vec<u32>,
}

impl OrthogonalArray {
    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn runs(&self) -> usize {
        (self.levels as usize).pow(2)
    }

    pub fn columns(&self) -> usize {
        self.columns
    }

    pub fn strength(&self) -> u32 {
        2
    }

    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.cells[row * self.columns + col]
    }

    pub fn row(&self, row: usize) -> &[u32] {
        &self.cells[row * self.columns..(row + 1) * self.columns]
    }

    pub fn column(&self, col: usize) -> Vec<u32> {
        (0..self.runs()).map(|r| self.get(r, col)).collect()
    }
}

pub fn is_prime(n: u32) -> bool {
    n >= 2 && smallest_prime_factor(n) == n
}

/// Smallest prime dividing `n` (`n` itself when prime). Requires `n ≥ 2`.
pub fn smallest_prime_factor(n: u32) -> u32 {
    debug_assert!(n >= 2);
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            return p;
        }
        p += 1;
    }
    n
}

/// Number of strength-2 columns available from the cyclic construction over `Z_n`.
pub fn cyclic_max_columns(n: u32) -> usize {
    if n < 2 {
        0
    } else {
        smallest_prime_factor(n) as usize + 1
    }
}

/// Linear construction over the prime field `GF(n)`.
pub fn construct_oa(n: u32, k: usize) -> Result<OrthogonalArray> {
    if !is_prime(n) {
        return Err(Error::construction(format!("{n} is not prime")));
    }
    construct_cyclic_oa(n, k)
}

/// Cyclic construction over `Z_n` for any `n ≥ 2`; `k` may not exceed
/// [`cyclic_max_columns`]. Identical to [`construct_oa`] when `n` is prime.
pub fn construct_cyclic_oa(n: u32, k: usize) -> Result<OrthogonalArray> {
    if n < 2 {
        return Err(Error::construction(format!(
            "need at least 2 levels, got {n}"
        )));
    }
    let max = cyclic_max_columns(n);
    if k < 2 || k > max {
        return Err(Error::construction(format!(
            "an OA({}, k, {n}, 2) needs 2 <= k <= {max}, got k = {k}",
            n * n
        )));
    }
    let mut cells = Vec::with_capacity((n * n) as usize * k);
    for y in 0..n {
        for x in 0..n {
            cells.push(y);
            cells.push(x);
            for j in 1..(k as u32 - 1) {
                cells.push((x + j * y) % n);
            }
        }
    }
    Ok(OrthogonalArray {
        levels: n,
        columns: k,
        cells,
    })
}
