//! The iterative study loop: sample, evaluate, collapse, analyze, reshape.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analyzer::{analyze, AnalysisOutcome};
use crate::error::{Error, Result};
use crate::evaluator::{evaluate_batch, ObjectiveSpec, TrialRecord, TrialRequest};
use crate::sampler::{choose_olh_size, construct_olh, DesignMatrix};
use crate::seed::sub_seed;
use crate::space::{Config, SearchSpace};
use crate::transformer::{collapse, max_range_count};

/// Default divisor `Q` in `R = ⌊√(N/Q)⌋`.
pub const DEFAULT_Q: usize = 1;
/// Default multiplier `P` in the bound `β < 1/(F·P)`.
pub const DEFAULT_P: usize = 3;
/// Fraction of the open bound `1/(F·P)` used as the default β.
const BETA_BOUND_FRACTION: f64 = 0.999;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FinalStrategy {
    Greedy,
    Mean,
    #[default]
    Combined,
}

impl FromStr for FinalStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(FinalStrategy::Greedy),
            "mean" => Ok(FinalStrategy::Mean),
            "combined" => Ok(FinalStrategy::Combined),
            other => Err(Error::Config(format!("unknown final strategy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    QualityReached,
    BudgetExhausted,
    AllFrozen,
    MaxIterations,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::QualityReached => "quality_reached",
            StopReason::BudgetExhausted => "budget_exhausted",
            StopReason::AllFrozen => "all_frozen",
            StopReason::MaxIterations => "max_iterations",
        })
    }
}

#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub space: SearchSpace,
    pub objective: ObjectiveSpec,
    pub max_iterations: usize,
    pub samples_per_iteration_min: usize,
    pub range_size: Option<usize>,
    pub importance_threshold: Option<f64>,
    /// Stop once the best maximize-normalized value reaches this target.
    pub quality_target: Option<f64>,
    /// Maximum number of design trials.
    pub total_budget: Option<usize>,
    pub workers: usize,
    pub seed: u64,
    pub final_strategy: FinalStrategy,
    pub q: usize,
    pub p: usize,
}

impl StudyConfig {
    pub fn new(space: SearchSpace, objective: ObjectiveSpec) -> Self {
        StudyConfig {
            space,
            objective,
            max_iterations: 3,
            samples_per_iteration_min: 9,
            range_size: None,
            importance_threshold: None,
            quality_target: None,
            total_budget: None,
            workers: crate::evaluator::default_workers(),
            seed: 0,
            final_strategy: FinalStrategy::default(),
            q: DEFAULT_Q,
            p: DEFAULT_P,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        if self.samples_per_iteration_min == 0 {
            return Err(Error::Config(
                "samples_per_iteration_min must be at least 1".into(),
            ));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if self.range_size == Some(0) {
            return Err(Error::Config("range size must be at least 1".into()));
        }
        if let Some(beta) = self.importance_threshold {
            if !(beta > 0.0 && beta < 1.0) {
                return Err(Error::Config(format!(
                    "beta must satisfy 0 < beta < 1, got {beta}"
                )));
            }
        }
        if self.total_budget == Some(0) {
            return Err(Error::Config("budget must be positive".into()));
        }
        if self.q == 0 || self.p == 0 {
            return Err(Error::Config("Q and P must be positive".into()));
        }
        if self.space.active_count() == 0 {
            return Err(Error::Config(
                "the search space has no active factor".into(),
            ));
        }
        self.objective.validate()?;
        self.objective.check_dimension(self.space.factors().len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperDefaults {
    pub range_size: usize,
    pub beta: f64,
}

/// `R = ⌊√(N/Q)⌋` and `β` just below `1/(F·P)`, with `Q = 1`, `P = 3`.
pub fn default_hyper_hyperparams(runs: usize, factors: usize) -> HyperDefaults {
    default_hyper_hyperparams_with(runs, factors, DEFAULT_Q, DEFAULT_P)
}

pub fn default_hyper_hyperparams_with(
    runs: usize,
    factors: usize,
    q: usize,
    p: usize,
) -> HyperDefaults {
    HyperDefaults {
        range_size: max_range_count(runs / q.max(1)).max(1),
        beta: BETA_BOUND_FRACTION / (factors.max(1) * p.max(1)) as f64,
    }
}

/// All sub-seeds used by a study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedLog {
    pub study: u64,
    pub sampler: Vec<u64>,
    pub noise: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub best_config: Config,
    /// Maximize-normalized value of `best_config`.
    pub best_value: f64,
    /// Best maximize-normalized value among design trials.
    pub greedy_value: f64,
    pub history: Vec<TrialRecord>,
    pub per_iteration: Vec<AnalysisOutcome>,
    pub stop_reason: StopReason,
    pub final_space: SearchSpace,
    pub seeds: SeedLog,
}

/// A study that stopped on an error, with whatever it had completed.
#[derive(Debug, Clone)]
pub struct StudyError {
    pub error: Error,
    pub history: Vec<TrialRecord>,
    pub per_iteration: Vec<AnalysisOutcome>,
}

impl fmt::Display for StudyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (after {} trials)", self.error, self.history.len())
    }
}

impl std::error::Error for StudyError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// Progress of one completed iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationSummary<'a> {
    pub iteration: usize,
    pub runs: usize,
    pub best_so_far: f64,
    pub analysis: &'a AnalysisOutcome,
    pub next_space: &'a SearchSpace,
}

/// Hooks invoked as a study progresses.
pub trait StudyObserver {
    fn on_trials(&mut self, _trials: &[TrialRecord]) {}
    fn on_iteration(&mut self, _summary: &IterationSummary<'_>) {}
}

impl StudyObserver for () {}

pub fn run_mofa(config: &StudyConfig) -> std::result::Result<StudyResult, StudyError> {
    run_mofa_observed(config, &mut ())
}

struct Study {
    objective: ObjectiveSpec,
    history: Vec<TrialRecord>,
    per_iteration: Vec<AnalysisOutcome>,
    spaces: Vec<SearchSpace>,
}

impl Study {
    fn fail(self, error: Error) -> StudyError {
        StudyError {
            error,
            history: self.history,
            per_iteration: self.per_iteration,
        }
    }

    fn greedy_best(&self) -> Option<usize> {
        greedy_index(&self.history)
    }
}

fn greedy_index(history: &[TrialRecord]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, t) in history.iter().enumerate() {
        if t.is_ok() && best.is_none_or(|b| t.value > history[b].value) {
            best = Some(i);
        }
    }
    best
}

pub fn run_mofa_observed(
    config: &StudyConfig,
    observer: &mut dyn StudyObserver,
) -> std::result::Result<StudyResult, StudyError> {
    let mut objective = config.objective.clone();
    let noise_seed = (objective.noise_sd > 0.0).then(|| {
        objective
            .noise_seed
            .unwrap_or_else(|| sub_seed(config.seed, "noise", 0))
    });
    objective.noise_seed = noise_seed;

    let mut study = Study {
        objective,
        history: Vec::new(),
        per_iteration: Vec::new(),
        spaces: vec![config.space.clone()],
    };
    if let Err(e) = config.validate() {
        return Err(study.fail(e));
    }

    let mut sampler_seeds = Vec::new();
    let mut space = config.space.clone();
    let mut stop = StopReason::MaxIterations;
    let mut next_trial_id: u64 = 0;
    // Mean and combined selection spend one more evaluation after the loop.
    let final_reserve = usize::from(config.final_strategy != FinalStrategy::Greedy);

    for iteration in 1..=config.max_iterations {
        let active = space.active_names();
        let levels = match choose_olh_size(active.len(), config.samples_per_iteration_min) {
            Ok(n) => n,
            Err(e) => return Err(study.fail(e)),
        };
        let runs = (levels as usize).pow(2);
        if let Some(budget) = config.total_budget {
            if study.history.len() + runs + final_reserve > budget {
                if iteration == 1 {
                    return Err(study.fail(Error::Config(format!(
                        "budget {budget} is smaller than one iteration of {runs} trials plus {final_reserve} final"
                    ))));
                }
                stop = StopReason::BudgetExhausted;
                break;
            }
        }

        let seed = sub_seed(config.seed, "sampler", iteration as u64);
        sampler_seeds.push(seed);
        let design = match construct_olh(levels, active.len(), seed) {
            Ok(d) => d,
            Err(e) => return Err(study.fail(e)),
        };
        let requests = match design_requests(&space, &design, iteration, next_trial_id) {
            Ok(r) => r,
            Err(e) => return Err(study.fail(e)),
        };
        next_trial_id += requests.len() as u64;
        let trials = match evaluate_batch(requests, &study.objective, config.workers) {
            Ok(t) => t,
            Err(e) => return Err(study.fail(e)),
        };
        observer.on_trials(&trials);
        let failed = trials.iter().filter(|t| !t.is_ok()).count();
        let perf: Vec<f64> = trials.iter().map(|t| t.value).collect();
        study.history.extend(trials);
        if 2 * failed > runs {
            return Err(study.fail(Error::BatchAborted {
                iteration,
                failed,
                total: runs,
            }));
        }

        let defaults = default_hyper_hyperparams_with(runs, active.len(), config.q, config.p);
        let cap = max_range_count(runs);
        let mut range_size = config.range_size.unwrap_or(defaults.range_size);
        if range_size > cap {
            log::warn!("range size {range_size} exceeds floor(sqrt({runs})); clamped to {cap}");
            range_size = cap;
        }
        let beta = config.importance_threshold.unwrap_or(defaults.beta);
        if beta * (active.len() * config.p) as f64 >= 1.0 {
            log::warn!(
                "beta = {beta} is not below 1/(F*P) = {:.4}",
                1.0 / (active.len() * config.p) as f64
            );
        }

        let outcome = match collapse(&design, &active, &perf, range_size)
            .and_then(|table| analyze(&table, beta, iteration))
        {
            Ok(o) => o,
            Err(e) => return Err(study.fail(e)),
        };
        let ranges: Vec<(String, usize)> = outcome
            .factors
            .iter()
            .zip(&outcome.best_range)
            .filter(|(name, _)| !outcome.is_frozen(name))
            .map(|(name, &r)| (name.clone(), r))
            .collect();
        let freezes: Vec<(String, f64)> = outcome
            .frozen
            .iter()
            .map(|f| (f.factor.clone(), f.unit_value))
            .collect();
        space = match space.reshape(&ranges, range_size, &freezes) {
            Ok(s) => s,
            Err(e) => return Err(study.fail(e)),
        };

        let best = study
            .greedy_best()
            .map_or(f64::NEG_INFINITY, |i| study.history[i].value);
        observer.on_iteration(&IterationSummary {
            iteration,
            runs,
            best_so_far: best,
            analysis: &outcome,
            next_space: &space,
        });
        study.per_iteration.push(outcome);
        study.spaces.push(space.clone());

        if config.quality_target.is_some_and(|q| best >= q) {
            stop = StopReason::QualityReached;
            break;
        }
        if space.active_count() == 0 {
            stop = StopReason::AllFrozen;
            break;
        }
    }

    // spaces[i] is the space analyzed in iteration i + 1.
    let analyzed = study
        .per_iteration
        .last()
        .map(|o| (&study.spaces[study.per_iteration.len() - 1], o));
    let analyzed = analyzed.map(|(s, o)| (s.clone(), o.clone()));
    let greedy_value = study
        .greedy_best()
        .map_or(f64::NAN, |i| study.history[i].value);
    let selection = select_final(
        &mut study.history,
        analyzed.as_ref().map(|(s, o)| (s, o)),
        config.final_strategy,
        &study.objective,
        next_trial_id,
    );
    let (best_config, best_value) = match selection {
        Ok(s) => s,
        Err(e) => return Err(study.fail(e)),
    };
    if let Some(last) = study.history.last() {
        if last.iteration == 0 {
            observer.on_trials(std::slice::from_ref(last));
        }
    }
    Ok(StudyResult {
        best_config,
        best_value,
        greedy_value,
        history: study.history,
        per_iteration: study.per_iteration,
        stop_reason: stop,
        final_space: space,
        seeds: SeedLog {
            study: config.seed,
            sampler: sampler_seeds,
            noise: noise_seed,
        },
    })
}

fn design_requests(
    space: &SearchSpace,
    design: &DesignMatrix,
    iteration: usize,
    first_id: u64,
) -> Result<Vec<TrialRequest>> {
    let active = space.active_names();
    design
        .rows()
        .enumerate()
        .map(|(i, row)| {
            Ok(TrialRequest {
                trial_id: first_id + i as u64,
                iteration,
                raw_params: space.denormalize_slice(row)?,
                active_factors: active.clone(),
                unit_params: row.to_vec(),
            })
        })
        .collect()
}

/// Unit coordinates at the median of each factor's best range.
pub fn mean_strategy_units(outcome: &AnalysisOutcome) -> Vec<f64> {
    let r = outcome.range_count as f64;
    outcome
        .best_range
        .iter()
        .map(|&b| (b as f64 - 0.5) / r)
        .collect()
}

/// Pick the final configuration.
///
/// `analyzed` is the last analysis together with the space it was computed
/// on. The mean and combined strategies evaluate the mean-strategy
/// configuration once, appending it to `history` with iteration 0.
pub fn select_final(
    history: &mut Vec<TrialRecord>,
    analyzed: Option<(&SearchSpace, &AnalysisOutcome)>,
    strategy: FinalStrategy,
    objective: &ObjectiveSpec,
    next_trial_id: u64,
) -> Result<(Config, f64)> {
    let greedy = greedy_index(history)
        .ok_or_else(|| Error::Selection("no successful trial in history".into()))?;
    let greedy = (history[greedy].raw_params.clone(), history[greedy].value);
    let (space, outcome) = match (strategy, analyzed) {
        (FinalStrategy::Greedy, _) | (_, None) => return Ok(greedy),
        (_, Some(pair)) => pair,
    };

    let units = mean_strategy_units(outcome);
    let request = TrialRequest {
        trial_id: next_trial_id,
        iteration: 0,
        raw_params: space.denormalize_slice(&units)?,
        active_factors: outcome.factors.clone(),
        unit_params: units,
    };
    let record = evaluate_batch(vec![request], objective, 1)?
        .pop()
        .expect("one request yields one record");
    let mean = (record.raw_params.clone(), record.value);
    let mean_ok = record.is_ok();
    history.push(record);

    match strategy {
        FinalStrategy::Mean if mean_ok => Ok(mean),
        FinalStrategy::Combined if mean_ok && mean.1 > greedy.1 => Ok(mean),
        _ => Ok(greedy),
    }
}

/// Baseline: `budget` i.i.d. uniform configurations over `space`.
pub fn random_search(
    space: &SearchSpace,
    objective: &ObjectiveSpec,
    budget: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<TrialRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let active = space.active_names();
    let requests = (0..budget)
        .map(|i| {
            let u: Vec<f64> = (0..active.len()).map(|_| rng.random::<f64>()).collect();
            Ok(TrialRequest {
                trial_id: i as u64,
                iteration: 1,
                raw_params: space.denormalize_slice(&u)?,
                active_factors: active.clone(),
                unit_params: u,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    evaluate_batch(requests, objective, workers)
}
