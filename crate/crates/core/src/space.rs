//! Search spaces and the mapping between raw hyperparameter values and the
//! unit hypercube.
//!
//! Every factor is handled in a *transformed coordinate*: the raw value for
//! linear factors and its natural logarithm for log-scaled ones. Normalization,
//! denormalization and range shrinking are all affine in that coordinate.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A configuration in raw units, keyed by factor name in search-space order.
pub type Config = IndexMap<String, f64>;

/// Relative slack accepted when checking a raw value against its bounds.
const BOUNDS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorKind {
    Continuous,
    Integer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

/// One hyperparameter dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorDef {
    pub name: String,
    pub kind: FactorKind,
    pub lower: f64,
    pub upper: f64,
    #[serde(default)]
    pub scale: Scale,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frozen: Option<f64>,
}

impl FactorDef {
    pub fn continuous(name: impl Into<String>, lower: f64, upper: f64) -> Self {
        FactorDef {
            name: name.into(),
            kind: FactorKind::Continuous,
            lower,
            upper,
            scale: Scale::Linear,
            frozen: None,
        }
    }

    pub fn integer(name: impl Into<String>, lower: f64, upper: f64) -> Self {
        FactorDef {
            kind: FactorKind::Integer,
            ..FactorDef::continuous(name, lower, upper)
        }
    }

    /// Switch the factor to log scale.
    pub fn log(mut self) -> Self {
        self.scale = Scale::Log;
        self
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen.is_some()
    }

    fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::Schema("factor name must not be empty".into()));
        }
        if !self.lower.is_finite() || !self.upper.is_finite() {
            return Err(Error::Bounds(format!(
                "factor `{}` has non-finite bounds",
                self.name
            )));
        }
        if self.frozen.is_none() && self.lower >= self.upper {
            return Err(Error::Bounds(format!(
                "factor `{}` requires lower < upper (got {} >= {})",
                self.name, self.lower, self.upper
            )));
        }
        if self.scale == Scale::Log && self.lower <= 0.0 {
            return Err(Error::Bounds(format!(
                "log-scaled factor `{}` requires lower > 0 (got {})",
                self.name, self.lower
            )));
        }
        Ok(())
    }

    fn to_transformed(&self, x: f64) -> f64 {
        match self.scale {
            Scale::Linear => x,
            Scale::Log => x.ln(),
        }
    }

    fn untransform(&self, t: f64) -> f64 {
        match self.scale {
            Scale::Linear => t,
            Scale::Log => t.exp(),
        }
    }

    fn transformed_bounds(&self) -> (f64, f64) {
        (
            self.to_transformed(self.lower),
            self.to_transformed(self.upper),
        )
    }

    /// Width of the interval in the transformed coordinate.
    pub fn transformed_width(&self) -> f64 {
        let (lo, hi) = self.transformed_bounds();
        hi - lo
    }

    fn normalize_value(&self, x: f64) -> Result<f64> {
        let slack = BOUNDS_TOLERANCE * (self.upper - self.lower).abs().max(1.0);
        if !x.is_finite() || x < self.lower - slack || x > self.upper + slack {
            return Err(Error::Bounds(format!(
                "value {x} for factor `{}` is outside [{}, {}]",
                self.name, self.lower, self.upper
            )));
        }
        let x = x.clamp(self.lower, self.upper);
        let (lo, hi) = self.transformed_bounds();
        Ok(((self.to_transformed(x) - lo) / (hi - lo)).clamp(0.0, 1.0))
    }

    fn denormalize_value(&self, u: f64) -> f64 {
        let (lo, hi) = self.transformed_bounds();
        let x = self
            .untransform(lo + u * (hi - lo))
            .clamp(self.lower, self.upper);
        match self.kind {
            FactorKind::Continuous => x,
            FactorKind::Integer => round_integer_within(x, self.lower, self.upper),
        }
    }
}

fn round_half_up(x: f64) -> f64 {
    (x + 0.5).floor()
}

/// Round half-up, then pull the result back inside `[lower, upper]` if the
/// interval contains an integer at all.
fn round_integer_within(x: f64, lower: f64, upper: f64) -> f64 {
    let r = round_half_up(x);
    let (lo, hi) = (lower.ceil(), upper.floor());
    if lo <= hi {
        r.clamp(lo, hi)
    } else {
        r
    }
}

/// A point of the unit hypercube, one coordinate per active factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitConfig {
    pub values: Vec<f64>,
}

impl UnitConfig {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Bounds(format!("unit coordinate {v} outside [0, 1]")));
        }
        Ok(UnitConfig { values })
    }
}

/// Ordered collection of factors plus the index of the iteration it belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    factors: Vec<FactorDef>,
    iteration: usize,
}

impl SearchSpace {
    pub fn new(factors: Vec<FactorDef>) -> Result<Self> {
        for (i, f) in factors.iter().enumerate() {
            f.validate()?;
            if f.kind == FactorKind::Integer && f.frozen.is_none() && f.upper - f.lower < 1.0 {
                return Err(Error::Bounds(format!(
                    "integer factor `{}` needs upper - lower >= 1",
                    f.name
                )));
            }
            if factors[..i].iter().any(|g| g.name == f.name) {
                return Err(Error::Schema(format!("duplicate factor name `{}`", f.name)));
            }
        }
        Ok(SearchSpace {
            factors,
            iteration: 0,
        })
    }

    pub fn factors(&self) -> &[FactorDef] {
        &self.factors
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn factor(&self, name: &str) -> Option<&FactorDef> {
        self.factors.iter().find(|f| f.name == name)
    }

    pub fn active_factors(&self) -> impl Iterator<Item = &FactorDef> {
        self.factors.iter().filter(|f| !f.is_frozen())
    }

    pub fn active_names(&self) -> Vec<String> {
        self.active_factors().map(|f| f.name.clone()).collect()
    }

    pub fn active_count(&self) -> usize {
        self.active_factors().count()
    }

    fn index_of(&self, name: &str) -> Result<usize> {
        self.factors
            .iter()
            .position(|f| f.name == name)
            .ok_or_else(|| Error::Schema(format!("unknown factor `{name}`")))
    }

    fn active_index_of(&self, name: &str) -> Result<usize> {
        let idx = self.index_of(name)?;
        if self.factors[idx].is_frozen() {
            return Err(Error::State(format!("factor `{name}` is frozen")));
        }
        Ok(idx)
    }

    /// Map a raw configuration onto the unit hypercube of the active factors.
    pub fn normalize(&self, raw: &Config) -> Result<UnitConfig> {
        if let Some(unknown) = raw.keys().find(|k| self.factor(k).is_none()) {
            return Err(Error::Schema(format!("unknown factor `{unknown}`")));
        }
        let values = self
            .active_factors()
            .map(|f| {
                let x = raw
                    .get(&f.name)
                    .ok_or_else(|| Error::Schema(format!("missing factor `{}`", f.name)))?;
                f.normalize_value(*x)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(UnitConfig { values })
    }

    /// Map a unit-hypercube point back to raw units. Frozen factors emit their
    /// frozen value; integer factors are rounded half-up.
    pub fn denormalize(&self, u: &UnitConfig) -> Result<Config> {
        self.denormalize_slice(&u.values)
    }

    pub fn denormalize_slice(&self, u: &[f64]) -> Result<Config> {
        let active = self.active_count();
        if u.len() != active {
            return Err(Error::Schema(format!(
                "expected {active} unit coordinates, got {}",
                u.len()
            )));
        }
        if let Some(v) = u.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Bounds(format!("unit coordinate {v} outside [0, 1]")));
        }
        let mut coords = u.iter();
        Ok(self
            .factors
            .iter()
            .map(|f| {
                let x = match f.frozen {
                    Some(v) => v,
                    None => f.denormalize_value(*coords.next().expect("length checked")),
                };
                (f.name.clone(), x)
            })
            .collect())
    }

    fn shrink_factor(&mut self, idx: usize, range: usize, range_count: usize) -> Result<()> {
        if range_count == 0 || range == 0 || range > range_count {
            return Err(Error::Bounds(format!(
                "range index {range} outside 1..={range_count}"
            )));
        }
        let f = &mut self.factors[idx];
        let (lo, hi) = f.transformed_bounds();
        let width = hi - lo;
        let r = range as f64;
        let count = range_count as f64;
        let new_lo = f.untransform(lo + width * (r - 1.0) / count);
        let new_hi = if range == range_count {
            f.upper
        } else {
            f.untransform(lo + width * r / count)
        };
        let new_lo = if range == 1 { f.lower } else { new_lo };
        f.lower = new_lo;
        f.upper = new_hi;

        if f.kind == FactorKind::Integer {
            let first = new_lo.ceil();
            let last = new_hi.floor();
            if last <= first {
                let value = if first == last {
                    first
                } else {
                    let (tlo, thi) = f.transformed_bounds();
                    round_half_up(f.untransform(0.5 * (tlo + thi)))
                };
                f.frozen = Some(value);
            }
        }
        Ok(())
    }

    /// Restrict `factor` to its `range`-th of `range_count` equal slices
    /// (in the transformed coordinate). Returns the next iteration's space.
    pub fn shrink_to_range(&self, factor: &str, range: usize, range_count: usize) -> Result<Self> {
        let idx = self.active_index_of(factor)?;
        let mut next = self.clone();
        next.shrink_factor(idx, range, range_count)?;
        next.iteration += 1;
        Ok(next)
    }

    /// Fix `factor` at a raw `value` inside its current bounds.
    pub fn freeze(&self, factor: &str, value: f64) -> Result<Self> {
        let idx = self.index_of(factor)?;
        let f = &self.factors[idx];
        if f.is_frozen() {
            return Err(Error::State(format!("factor `{factor}` is already frozen")));
        }
        f.normalize_value(value)?;
        let value = match f.kind {
            FactorKind::Continuous => value,
            FactorKind::Integer => round_integer_within(value, f.lower, f.upper),
        };
        let mut next = self.clone();
        next.factors[idx].frozen = Some(value);
        Ok(next)
    }

    /// Fix `factor` at the raw value corresponding to unit coordinate `u` of
    /// its current interval.
    pub fn freeze_at_unit(&self, factor: &str, u: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::Bounds(format!("unit coordinate {u} outside [0, 1]")));
        }
        let idx = self.index_of(factor)?;
        let value = self.factors[idx].denormalize_value(u);
        self.freeze(factor, value)
    }

    /// Apply one iteration's worth of range shrinking and freezing at once.
    ///
    /// `ranges` pairs active factors with their selected range index; `freezes`
    /// pairs factors with a unit coordinate of their current interval.
    pub fn reshape(
        &self,
        ranges: &[(String, usize)],
        range_count: usize,
        freezes: &[(String, f64)],
    ) -> Result<Self> {
        let mut next = self.clone();
        for (name, u) in freezes {
            next = next.freeze_at_unit(name, *u)?;
        }
        for (name, r) in ranges {
            let idx = next.active_index_of(name)?;
            next.shrink_factor(idx, *r, range_count)?;
        }
        next.iteration += 1;
        Ok(next)
    }
}
