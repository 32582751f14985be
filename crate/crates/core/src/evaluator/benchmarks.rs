//! Analytic test functions used as stand-in objectives.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Built-in objectives. All except [`Benchmark::AdditivePlusBilinear`] are
/// minimization problems.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Benchmark {
    /// `Σ xᵢ²`, minimum 0 at the origin.
    Sphere,
    /// `Σ 100 (xᵢ₊₁ − xᵢ²)² + (1 − xᵢ)²`, minimum 0 at `(1, …, 1)`.
    Rosenbrock,
    /// Branin–Hoo on its first two coordinates; any further coordinates are
    /// inert. Minimum 0.397887 at `(−π, 12.275)`, `(π, 2.275)`, `(9.42478, 2.475)`.
    Branin,
    /// Six-dimensional Hartmann function on `[0, 1]⁶`, minimum −3.32237.
    Hartmann6,
    /// `Σ xᵢ + γ·x₁x₂`.
    AdditivePlusBilinear { gamma: f64 },
}

const HARTMANN_ALPHA: [f64; 4] = [1.0, 1.2, 3.0, 3.2];
const HARTMANN_A: [[f64; 6]; 4] = [
    [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
    [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
    [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
    [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
];
const HARTMANN_P: [[f64; 6]; 4] = [
    [0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886],
    [0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991],
    [0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650],
    [0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381],
];

impl Benchmark {
    pub const NAMES: [&'static str; 5] = [
        "sphere",
        "rosenbrock",
        "branin",
        "hartmann6",
        "additive-plus-bilinear",
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Benchmark::Sphere => "sphere",
            Benchmark::Rosenbrock => "rosenbrock",
            Benchmark::Branin => "branin",
            Benchmark::Hartmann6 => "hartmann6",
            Benchmark::AdditivePlusBilinear { .. } => "additive-plus-bilinear",
        }
    }

    pub fn minimizes(&self) -> bool {
        !matches!(self, Benchmark::AdditivePlusBilinear { .. })
    }

    pub fn min_dimension(&self) -> usize {
        match self {
            Benchmark::Sphere => 1,
            Benchmark::Rosenbrock | Benchmark::Branin | Benchmark::AdditivePlusBilinear { .. } => 2,
            Benchmark::Hartmann6 => 6,
        }
    }

    /// Conventional domain for a `dim`-dimensional instance.
    pub fn default_bounds(&self, dim: usize) -> Vec<(f64, f64)> {
        match self {
            Benchmark::Sphere => vec![(-5.0, 5.0); dim],
            Benchmark::Rosenbrock => vec![(-5.0, 10.0); dim],
            Benchmark::Branin => {
                let mut b = vec![(-5.0, 10.0), (0.0, 15.0)];
                b.resize(dim.max(2), (0.0, 1.0));
                b.truncate(dim);
                b
            }
            Benchmark::Hartmann6 | Benchmark::AdditivePlusBilinear { .. } => vec![(0.0, 1.0); dim],
        }
    }

    /// Best attainable value, where known.
    pub fn optimum(&self) -> Option<f64> {
        match self {
            Benchmark::Sphere | Benchmark::Rosenbrock => Some(0.0),
            Benchmark::Branin => Some(0.397_887_357_729_738),
            Benchmark::Hartmann6 => Some(-3.322_368_011_415_51),
            Benchmark::AdditivePlusBilinear { .. } => None,
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        match *self {
            Benchmark::Sphere => x.iter().map(|v| v * v).sum(),
            Benchmark::Rosenbrock => x
                .windows(2)
                .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
                .sum(),
            Benchmark::Branin => {
                let (x1, x2) = (x[0], x[1]);
                let b = 5.1 / (4.0 * PI * PI);
                let c = 5.0 / PI;
                let t = 1.0 / (8.0 * PI);
                (x2 - b * x1 * x1 + c * x1 - 6.0).powi(2) + 10.0 * (1.0 - t) * x1.cos() + 10.0
            }
            Benchmark::Hartmann6 => -HARTMANN_ALPHA
                .iter()
                .zip(HARTMANN_A.iter().zip(HARTMANN_P.iter()))
                .map(|(alpha, (a, p))| {
                    let inner: f64 = (0..6).map(|j| a[j] * (x[j] - p[j]).powi(2)).sum();
                    alpha * (-inner).exp()
                })
                .sum::<f64>(),
            Benchmark::AdditivePlusBilinear { gamma } => {
                x.iter().sum::<f64>() + gamma * x[0] * x[1]
            }
        }
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Benchmark {
    type Err = Error;

    /// Parses a registered name; `additive-plus-bilinear` gets `γ = 1`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sphere" => Ok(Benchmark::Sphere),
            "rosenbrock" => Ok(Benchmark::Rosenbrock),
            "branin" => Ok(Benchmark::Branin),
            "hartmann6" => Ok(Benchmark::Hartmann6),
            "additive-plus-bilinear" => Ok(Benchmark::AdditivePlusBilinear { gamma: 1.0 }),
            other => Err(Error::Config(format!(
                "unknown builtin objective `{other}` (expected one of {})",
                Benchmark::NAMES.join(", ")
            ))),
        }
    }
}
