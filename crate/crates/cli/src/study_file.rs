//! TOML study files.
//!
//! ```toml
//! [study]
//! name = "branin"
//! seed = 7
//! max_iterations = 3
//!
//! [objective]
//! kind = "builtin"
//! name = "branin"
//!
//! [[space]]
//! name = "x1"
//! lower = -5.0
//! upper = 10.0
//!
//! [[space]]
//! name = "x2"
//! lower = 0.0
//! upper = 15.0
//!
//! [mofa]
//! samples_per_iteration_min = 9
//! ```

use std::path::Path;

use anyhow::{bail, Context, Result};
use mofa::evaluator::{external_objective, Benchmark, Direction, ObjectiveSpec, DEFAULT_TIMEOUT_S};
use mofa::optimizer::{FinalStrategy, StudyConfig, DEFAULT_P, DEFAULT_Q};
use mofa::space::{FactorDef, FactorKind, Scale, SearchSpace};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyFile {
    pub study: StudySection,
    pub objective: ObjectiveSection,
    pub space: Vec<FactorEntry>,
    #[serde(default)]
    pub mofa: MofaSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_iterations")]
    pub max_iterations: usize,
    pub budget: Option<usize>,
    pub workers: Option<usize>,
    #[serde(default)]
    pub final_strategy: FinalStrategy,
    /// Compared against the maximize-normalized value (negated for
    /// minimize objectives).
    pub quality_target: Option<f64>,
}

fn default_iterations() -> usize {
    3
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveKindEntry {
    Builtin,
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveSection {
    pub kind: ObjectiveKindEntry,
    pub name: Option<String>,
    pub command: Option<String>,
    pub direction: Option<Direction>,
    pub timeout_s: Option<f64>,
    /// Interaction weight of `additive-plus-bilinear`.
    pub gamma: Option<f64>,
    pub noise_sd: Option<f64>,
    pub noise_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorEntry {
    pub name: String,
    #[serde(rename = "type", default = "default_kind")]
    pub kind: FactorKind,
    pub lower: f64,
    pub upper: f64,
    #[serde(default)]
    pub scale: Scale,
}

fn default_kind() -> FactorKind {
    FactorKind::Continuous
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MofaSection {
    #[serde(rename = "R")]
    pub range_size: Option<usize>,
    pub beta: Option<f64>,
    #[serde(rename = "Q", default = "default_q")]
    pub q: usize,
    #[serde(rename = "P", default = "default_p")]
    pub p: usize,
    #[serde(default = "default_min_samples")]
    pub samples_per_iteration_min: usize,
}

fn default_q() -> usize {
    DEFAULT_Q
}

fn default_p() -> usize {
    DEFAULT_P
}

fn default_min_samples() -> usize {
    9
}

impl Default for MofaSection {
    fn default() -> Self {
        MofaSection {
            range_size: None,
            beta: None,
            q: DEFAULT_Q,
            p: DEFAULT_P,
            samples_per_iteration_min: default_min_samples(),
        }
    }
}

impl StudyFile {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read study file {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("invalid study file {}", path.display()))
    }

    pub fn search_space(&self) -> Result<SearchSpace> {
        let factors = self
            .space
            .iter()
            .map(|f| {
                let def = match f.kind {
                    FactorKind::Continuous => FactorDef::continuous(&f.name, f.lower, f.upper),
                    FactorKind::Integer => FactorDef::integer(&f.name, f.lower, f.upper),
                };
                match f.scale {
                    Scale::Linear => def,
                    Scale::Log => def.log(),
                }
            })
            .collect();
        Ok(SearchSpace::new(factors)?)
    }

    pub fn objective_spec(&self) -> Result<ObjectiveSpec> {
        let o = &self.objective;
        let timeout = o.timeout_s.unwrap_or(DEFAULT_TIMEOUT_S);
        let mut spec = match o.kind {
            ObjectiveKindEntry::Builtin => {
                if o.command.is_some() {
                    bail!("[objective] `command` is only valid with kind = \"external\"");
                }
                let name = o
                    .name
                    .as_deref()
                    .context("[objective] kind = \"builtin\" requires `name`")?;
                let mut benchmark: Benchmark = name.parse()?;
                if let Some(g) = o.gamma {
                    match &mut benchmark {
                        Benchmark::AdditivePlusBilinear { gamma } => *gamma = g,
                        _ => bail!("[objective] `gamma` only applies to additive-plus-bilinear"),
                    }
                }
                ObjectiveSpec::builtin(benchmark).with_timeout(timeout)
            }
            ObjectiveKindEntry::External => {
                if o.gamma.is_some() || o.name.is_some() {
                    bail!("[objective] kind = \"external\" takes `command`, not `name` or `gamma`");
                }
                let command = o
                    .command
                    .as_deref()
                    .context("[objective] kind = \"external\" requires `command`")?;
                external_objective(command, timeout)?
            }
        };
        if let Some(d) = o.direction {
            spec = spec.with_direction(d);
        }
        if let Some(sd) = o.noise_sd {
            spec.noise_sd = sd;
            spec.noise_seed = o.noise_seed;
        }
        spec.validate()?;
        Ok(spec)
    }

    /// The study configuration described by this file, with defaults for
    /// unset keys. `default_workers` applies when `[study] workers` is absent.
    pub fn study_config(&self, default_workers: usize) -> Result<StudyConfig> {
        let mut cfg = StudyConfig::new(self.search_space()?, self.objective_spec()?);
        cfg.max_iterations = self.study.max_iterations;
        cfg.samples_per_iteration_min = self.mofa.samples_per_iteration_min;
        cfg.range_size = self.mofa.range_size;
        cfg.importance_threshold = self.mofa.beta;
        cfg.quality_target = self.study.quality_target;
        cfg.total_budget = self.study.budget;
        cfg.workers = self.study.workers.unwrap_or(default_workers);
        cfg.seed = self.study.seed;
        cfg.final_strategy = self.study.final_strategy;
        cfg.q = self.mofa.q;
        cfg.p = self.mofa.p;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BRANIN: &str = r#"
[study]
name = "branin"
seed = 3

[objective]
kind = "builtin"
name = "branin"

[[space]]
name = "x1"
lower = -5.0
upper = 10.0

[[space]]
name = "x2"
lower = 0.0
upper = 15.0
"#;

    #[test]
    fn parses_defaults() {
        let f = StudyFile::parse(BRANIN).unwrap();
        let cfg = f.study_config(2).unwrap();
        assert_eq!(cfg.max_iterations, 3);
        assert_eq!(cfg.samples_per_iteration_min, 9);
        assert_eq!(cfg.workers, 2);
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.objective.direction, Direction::Minimize);
        assert_eq!(cfg.final_strategy, FinalStrategy::Combined);
    }

    #[test]
    fn unknown_key_named() {
        let text = BRANIN.replace("upper = 15.0", "uper = 15.0");
        let err = format!("{:#}", StudyFile::parse(&text).unwrap_err());
        assert!(err.contains("uper"), "{err}");
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn log_and_integer_factors() {
        let text = format!(
            "{BRANIN}\n[[space]]\nname = \"units\"\ntype = \"integer\"\nlower = 16\nupper = 512\nscale = \"log\"\n"
        );
        let space = StudyFile::parse(&text).unwrap().search_space().unwrap();
        let units = space.factor("units").unwrap();
        assert_eq!(units.kind, FactorKind::Integer);
        assert_eq!(units.scale, Scale::Log);
    }

    #[test]
    fn invalid_values_rejected() {
        let text = BRANIN.replace("upper = 15.0", "upper = -1.0");
        assert!(StudyFile::parse(&text).unwrap().study_config(1).is_err());
        let text = format!("{BRANIN}\n[mofa]\nbeta = 1.5\n");
        assert!(StudyFile::parse(&text).unwrap().study_config(1).is_err());
        let text = BRANIN.replace("kind = \"builtin\"", "kind = \"external\"");
        assert!(StudyFile::parse(&text).unwrap().objective_spec().is_err());
    }
}
