//! Parallel evaluation of configuration batches.
//!
//! Every value leaving this module is *maximize-normalized*: objectives that
//! are minimized are negated here so downstream code always maximizes.

mod benchmarks;
mod external;

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{mpsc, Arc};
use std::thread;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::sub_seed;
use crate::space::Config;

pub use benchmarks::Benchmark;
use external::{run_external, ExternalOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[default]
    Maximize,
    Minimize,
}

impl Direction {
    /// Convert an objective value to the internal maximize convention.
    pub fn to_internal(self, v: f64) -> f64 {
        match self {
            Direction::Maximize => v,
            Direction::Minimize => -v,
        }
    }

    /// Inverse of [`Direction::to_internal`].
    pub fn to_objective(self, v: f64) -> f64 {
        self.to_internal(v)
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "maximize" => Ok(Direction::Maximize),
            "minimize" => Ok(Direction::Minimize),
            other => Err(Error::Config(format!("unknown direction `{other}`"))),
        }
    }
}

/// In-process objective: raw configuration in, objective value (or failure
/// message) out.
pub type ObjectiveFn = Arc<dyn Fn(&Config) -> std::result::Result<f64, String> + Send + Sync>;

#[derive(Clone)]
pub enum ObjectiveKind {
    Builtin(Benchmark),
    External { command: String },
    Function(ObjectiveFn),
}

impl fmt::Debug for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObjectiveKind::Builtin(b) => f.debug_tuple("Builtin").field(b).finish(),
            ObjectiveKind::External { command } => f
                .debug_struct("External")
                .field("command", command)
                .finish(),
            ObjectiveKind::Function(_) => f.write_str("Function(..)"),
        }
    }
}

/// What to evaluate and how.
#[derive(Debug, Clone)]
pub struct ObjectiveSpec {
    pub kind: ObjectiveKind,
    pub direction: Direction,
    pub timeout_s: f64,
    /// Seed of the additive Gaussian noise applied to builtin objectives.
    pub noise_seed: Option<u64>,
    /// Standard deviation of that noise; 0 disables it.
    pub noise_sd: f64,
}

pub const DEFAULT_TIMEOUT_S: f64 = 3600.0;

impl ObjectiveSpec {
    fn with_kind(kind: ObjectiveKind, direction: Direction) -> Self {
        ObjectiveSpec {
            kind,
            direction,
            timeout_s: DEFAULT_TIMEOUT_S,
            noise_seed: None,
            noise_sd: 0.0,
        }
    }

    pub fn builtin(benchmark: Benchmark) -> Self {
        let direction = if benchmark.minimizes() {
            Direction::Minimize
        } else {
            Direction::Maximize
        };
        Self::with_kind(ObjectiveKind::Builtin(benchmark), direction)
    }

    pub fn function<F>(direction: Direction, f: F) -> Self
    where
        F: Fn(&Config) -> std::result::Result<f64, String> + Send + Sync + 'static,
    {
        Self::with_kind(ObjectiveKind::Function(Arc::new(f)), direction)
    }

    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }

    pub fn with_timeout(mut self, timeout_s: f64) -> Self {
        self.timeout_s = timeout_s;
        self
    }

    pub fn with_noise(mut self, sd: f64, seed: u64) -> Self {
        self.noise_sd = sd;
        self.noise_seed = Some(seed);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.timeout_s > 0.0 && self.timeout_s.is_finite()) {
            return Err(Error::Config(format!(
                "timeout_s must be a positive real, got {}",
                self.timeout_s
            )));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::Config("noise_sd must be non-negative".into()));
        }
        if let ObjectiveKind::External { command } = &self.kind {
            if command.trim().is_empty() {
                return Err(Error::Config("external command must not be empty".into()));
            }
        }
        Ok(())
    }

    /// Reject factor counts the objective cannot consume.
    pub fn check_dimension(&self, dim: usize) -> Result<()> {
        if let ObjectiveKind::Builtin(b) = &self.kind {
            if dim < b.min_dimension() {
                return Err(Error::Config(format!(
                    "{b} needs at least {} factors, got {dim}",
                    b.min_dimension()
                )));
            }
        }
        Ok(())
    }
}

/// Look up a registered benchmark by name.
pub fn builtin_objective(name: &str) -> Result<ObjectiveSpec> {
    Ok(ObjectiveSpec::builtin(name.parse()?))
}

/// Objective evaluated by spawning `command` once per trial.
pub fn external_objective(command: &str, timeout_s: f64) -> Result<ObjectiveSpec> {
    let spec = ObjectiveSpec::with_kind(
        ObjectiveKind::External {
            command: command.to_string(),
        },
        Direction::Maximize,
    )
    .with_timeout(timeout_s);
    spec.validate()?;
    Ok(spec)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialStatus {
    Ok,
    Failed,
    Timeout,
}

/// One evaluated configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: u64,
    /// 1-based design iteration; 0 marks the final-selection evaluation.
    pub iteration: usize,
    pub raw_params: Config,
    /// Names of the factors `unit_params` is aligned with.
    pub active_factors: Vec<String>,
    pub unit_params: Vec<f64>,
    /// Maximize-normalized objective; NaN (serialized as `null`) unless `ok`.
    #[serde(with = "nan_as_null")]
    pub value: f64,
    pub status: TrialStatus,
    pub duration_ms: u64,
    pub worker: usize,
}

impl TrialRecord {
    pub fn is_ok(&self) -> bool {
        self.status == TrialStatus::Ok
    }
}

mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

/// A configuration waiting to be evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRequest {
    pub trial_id: u64,
    pub iteration: usize,
    pub raw_params: Config,
    pub active_factors: Vec<String>,
    pub unit_params: Vec<f64>,
}

/// Hardware parallelism, falling back to 1.
pub fn default_workers() -> usize {
    thread::available_parallelism().map_or(1, |n| n.get())
}

fn evaluate_one(request: &TrialRequest, objective: &ObjectiveSpec) -> (f64, TrialStatus) {
    let timeout = Duration::from_secs_f64(objective.timeout_s);
    let start = Instant::now();
    let outcome: std::result::Result<f64, String> = match &objective.kind {
        ObjectiveKind::Builtin(b) => {
            let x: Vec<f64> = request.raw_params.values().copied().collect();
            let mut v = b.evaluate(&x);
            if objective.noise_sd > 0.0 {
                let seed = sub_seed(objective.noise_seed.unwrap_or(0), "noise", request.trial_id);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let normal = Normal::new(0.0, objective.noise_sd).expect("validated sd");
                v += normal.sample(&mut rng);
            }
            Ok(v)
        }
        ObjectiveKind::Function(f) => f(&request.raw_params),
        ObjectiveKind::External { command } => {
            match run_external(command, &request.raw_params, timeout) {
                ExternalOutcome::Value(v) => Ok(v),
                ExternalOutcome::Failed(msg) => Err(msg),
                ExternalOutcome::TimedOut => return (f64::NAN, TrialStatus::Timeout),
            }
        }
    };
    if start.elapsed() > timeout {
        return (f64::NAN, TrialStatus::Timeout);
    }
    match outcome {
        Ok(v) if v.is_finite() => (objective.direction.to_internal(v), TrialStatus::Ok),
        Ok(v) => {
            log::warn!("trial {} returned non-finite value {v}", request.trial_id);
            (f64::NAN, TrialStatus::Failed)
        }
        Err(msg) => {
            log::warn!("trial {} failed: {msg}", request.trial_id);
            (f64::NAN, TrialStatus::Failed)
        }
    }
}

/// Evaluate every request on up to `workers` threads.
///
/// Records come back in request order. Individual failures never abort the
/// batch; they are reported through [`TrialRecord::status`].
pub fn evaluate_batch(
    requests: Vec<TrialRequest>,
    objective: &ObjectiveSpec,
    workers: usize,
) -> Result<Vec<TrialRecord>> {
    if requests.is_empty() {
        return Err(Error::Config("cannot evaluate an empty batch".into()));
    }
    if workers == 0 {
        return Err(Error::Config("worker count must be positive".into()));
    }
    objective.validate()?;

    let total = requests.len();
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel();
    thread::scope(|scope| {
        for worker in 0..workers.min(total) {
            let tx = tx.clone();
            let (next, requests) = (&next, &requests);
            scope.spawn(move || loop {
                let idx = next.fetch_add(1, Ordering::Relaxed);
                if idx >= total {
                    break;
                }
                let start = Instant::now();
                let (value, status) = evaluate_one(&requests[idx], objective);
                let duration_ms = start.elapsed().as_millis() as u64;
                // The receiver outlives the scope.
                let _ = tx.send((idx, value, status, duration_ms, worker));
            });
        }
    });
    drop(tx);

    let mut slots: Vec<Option<(f64, TrialStatus, u64, usize)>> = vec![None; total];
    for (idx, value, status, duration_ms, worker) in rx {
        slots[idx] = Some((value, status, duration_ms, worker));
    }
    Ok(requests
        .into_iter()
        .zip(slots)
        .map(|(req, slot)| {
            let (value, status, duration_ms, worker) = slot.expect("every trial reports back");
            TrialRecord {
                trial_id: req.trial_id,
                iteration: req.iteration,
                raw_params: req.raw_params,
                active_factors: req.active_factors,
                unit_params: req.unit_params,
                value,
                status,
                duration_ms,
                worker,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn request(id: u64, params: &[(&str, f64)]) -> TrialRequest {
        TrialRequest {
            trial_id: id,
            iteration: 1,
            raw_params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            active_factors: params.iter().map(|(k, _)| k.to_string()).collect(),
            unit_params: vec![0.5; params.len()],
        }
    }

    #[test]
    fn sphere_at_origin_is_zero() {
        let obj = builtin_objective("sphere").unwrap();
        let out = evaluate_batch(vec![request(0, &[("a", 0.0), ("b", 0.0)])], &obj, 1).unwrap();
        assert_eq!(out[0].status, TrialStatus::Ok);
        assert_eq!(out[0].value, 0.0);
    }

    #[test]
    fn minimize_is_negated() {
        let obj = builtin_objective("sphere").unwrap();
        let out = evaluate_batch(vec![request(0, &[("a", 2.0)])], &obj, 1).unwrap();
        assert_eq!(out[0].value, -4.0);
    }

    #[test]
    fn order_preserved_under_parallelism() {
        let obj = ObjectiveSpec::function(Direction::Maximize, |c: &Config| {
            let x = c["a"];
            thread::sleep(Duration::from_millis((20.0 - x) as u64));
            Ok(x)
        });
        let reqs: Vec<_> = (0..12).map(|i| request(i, &[("a", i as f64)])).collect();
        let out = evaluate_batch(reqs, &obj, 4).unwrap();
        let values: Vec<f64> = out.iter().map(|r| r.value).collect();
        assert_eq!(values, (0..12).map(|i| i as f64).collect::<Vec<_>>());
        assert!(out.iter().all(|r| r.worker < 4));
    }

    #[test]
    fn failures_do_not_abort() {
        let obj = ObjectiveSpec::function(Direction::Maximize, |c: &Config| {
            if c["a"] > 0.5 {
                Err("boom".into())
            } else {
                Ok(1.0)
            }
        });
        let out = evaluate_batch(
            vec![request(0, &[("a", 0.0)]), request(1, &[("a", 1.0)])],
            &obj,
            2,
        )
        .unwrap();
        assert_eq!(out[0].status, TrialStatus::Ok);
        assert_eq!(out[1].status, TrialStatus::Failed);
        assert!(out[1].value.is_nan());
    }

    #[test]
    fn external_failure_and_timeout() {
        let fail = external_objective("exit 1", 5.0).unwrap();
        let out = evaluate_batch(vec![request(0, &[("a", 0.0)])], &fail, 1).unwrap();
        assert_eq!(out[0].status, TrialStatus::Failed);
        assert!(out[0].value.is_nan());

        let slow = external_objective("exec sleep 3", 0.2).unwrap();
        let out = evaluate_batch(vec![request(0, &[("a", 0.0)])], &slow, 1).unwrap();
        assert_eq!(out[0].status, TrialStatus::Timeout);

        let echo = external_objective("echo 0.5", 5.0).unwrap();
        let reqs = (0..3).map(|i| request(i, &[("a", 0.0)])).collect();
        let out = evaluate_batch(reqs, &echo, 3).unwrap();
        assert!(out.iter().all(|r| r.value == 0.5));
    }

    #[test]
    fn noise_is_deterministic_per_trial() {
        let obj = builtin_objective("sphere").unwrap().with_noise(0.1, 3);
        let a = evaluate_batch(vec![request(5, &[("a", 1.0)])], &obj, 1).unwrap();
        let b = evaluate_batch(vec![request(5, &[("a", 1.0)])], &obj, 2).unwrap();
        assert_eq!(a[0].value, b[0].value);
        assert_ne!(a[0].value, -1.0);
    }

    #[test]
    fn rejects_bad_batches() {
        let obj = builtin_objective("sphere").unwrap();
        assert!(evaluate_batch(vec![], &obj, 1).is_err());
        assert!(evaluate_batch(vec![request(0, &[("a", 0.0)])], &obj, 0).is_err());
        assert!(external_objective("  ", 1.0).is_err());
        assert!(builtin_objective("nope").is_err());
    }

    #[test]
    fn record_json_uses_null_for_failures() {
        let rec = TrialRecord {
            trial_id: 3,
            iteration: 1,
            raw_params: Config::new(),
            active_factors: vec![],
            unit_params: vec![],
            value: f64::NAN,
            status: TrialStatus::Failed,
            duration_ms: 1,
            worker: 0,
        };
        let json = serde_json::to_string(&rec).unwrap();
        assert!(json.contains("\"value\":null"));
        assert!(json.contains("\"status\":\"failed\""));
        let back: TrialRecord = serde_json::from_str(&json).unwrap();
        assert!(back.value.is_nan());
    }
}
