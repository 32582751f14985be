//! Experimental designs on the unit hypercube: orthogonal arrays, orthogonal
//! Latin hypercubes and the Latin-hypercube comparison criteria.

mod lhs;
mod oa;
mod olh;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use lhs::{sample_lhs, MAXIMIN_CANDIDATES, MINCORR_SWAPS};
pub use oa::{
    construct_cyclic_oa, construct_oa, cyclic_max_columns, is_prime, smallest_prime_factor,
    OrthogonalArray,
};
pub use olh::{
    choose_olh_size, construct_olh, construct_olh_with, olh_capacity, olh_levels, BaseColumn,
    MAX_LEVELS,
};

/// How a design was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Olh,
    LhsRandom,
    LhsCentered,
    LhsMaximin,
    LhsCenteredMaximin,
    LhsMincorr,
    /// Points supplied from outside (CSV files, i.i.d. draws).
    External,
}

/// Latin-hypercube construction criteria available to [`sample_lhs`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    Random,
    Centered,
    Maximin,
    CenteredMaximin,
    Correlation,
    Orthogonality,
}

impl Criterion {
    pub const ALL: [Criterion; 6] = [
        Criterion::Random,
        Criterion::Centered,
        Criterion::Maximin,
        Criterion::CenteredMaximin,
        Criterion::Correlation,
        Criterion::Orthogonality,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Criterion::Random => "random",
            Criterion::Centered => "centered",
            Criterion::Maximin => "maximin",
            Criterion::CenteredMaximin => "centered-maximin",
            Criterion::Correlation => "correlation",
            Criterion::Orthogonality => "orthogonality",
        }
    }

    pub fn provenance(self) -> Provenance {
        match self {
            Criterion::Random => Provenance::LhsRandom,
            Criterion::Centered => Provenance::LhsCentered,
            Criterion::Maximin => Provenance::LhsMaximin,
            Criterion::CenteredMaximin => Provenance::LhsCenteredMaximin,
            Criterion::Correlation => Provenance::LhsMincorr,
            Criterion::Orthogonality => Provenance::Olh,
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Criterion::Random),
            "centered" | "centralized" => Ok(Criterion::Centered),
            "maximin" | "distance" => Ok(Criterion::Maximin),
            "centered-maximin" => Ok(Criterion::CenteredMaximin),
            "correlation" | "mincorr" => Ok(Criterion::Correlation),
            "orthogonality" | "olh" => Ok(Criterion::Orthogonality),
            other => Err(Error::Config(format!(
                "unknown sampling criterion `{other}`"
            ))),
        }
    }
}

/// An `N × d` table of unit-interval samples, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignMatrix {
    runs: usize,
    factors: usize,
    cells: Vec<f64>,
    provenance: Provenance,
    seed: u64,
}

impl DesignMatrix {
    pub fn new(
        runs: usize,
        factors: usize,
        cells: Vec<f64>,
        provenance: Provenance,
        seed: u64,
    ) -> Result<Self> {
        if cells.len() != runs * factors {
            return Err(Error::Schema(format!(
                "design of {runs} x {factors} needs {} cells, got {}",
                runs * factors,
                cells.len()
            )));
        }
        if let Some(v) = cells.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Bounds(format!("design cell {v} outside [0, 1]")));
        }
        Ok(DesignMatrix {
            runs,
            factors,
            cells,
            provenance,
            seed,
        })
    }

    /// Build an externally supplied design from rows of equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let factors = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != factors) {
            return Err(Error::Schema("design rows have unequal lengths".into()));
        }
        let cells = rows.iter().flatten().copied().collect();
        Self::new(rows.len(), factors, cells, Provenance::External, 0)
    }

    pub fn runs(&self) -> usize {
        self.runs
    }

    pub fn factors(&self) -> usize {
        self.factors
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.cells[row * self.factors + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.cells[row * self.factors..(row + 1) * self.factors]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.runs).map(move |r| self.row(r))
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.runs).map(|r| self.get(r, col)).collect()
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }
}
