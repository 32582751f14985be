//! Acceptance suite. Prints one PASS/FAIL line per criterion.

use std::path::Path;
use std::time::{Duration, Instant};

use mofa::analyzer::{analyze, AnalysisOutcome};
use mofa::evaluator::{Benchmark, Direction, ObjectiveSpec};
use mofa::metrics::{max_column_correlation, projection_uniformity_check, star_discrepancy};
use mofa::optimizer::{
    default_hyper_hyperparams, run_mofa_observed, FinalStrategy, IterationSummary, StudyConfig,
    StudyObserver,
};
use mofa::sampler::{
    construct_oa, construct_olh, olh_capacity, sample_lhs, Criterion, DesignMatrix,
};
use mofa::space::{Config, FactorDef, SearchSpace};
use mofa::stats::sample_variance;
use mofa::transformer::{collapse, CollapsedTable};
use mofa::Error;
use mofa_cli::bench::{mofa_vs_random, SUITE};
use mofa_cli::execute_args;
use mofa_cli::run::{read_trial_log, ResultFile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria that fail under the reference algorithm; reported, not hidden.
const KNOWN_FAILURES: [u32; 1] = [6];

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn names(d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("x{i}")).collect()
}

fn iid(runs: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..runs)
        .map(|_| (0..d).map(|_| rng.random()).collect())
        .collect()
}

fn pair_counts_ok(table: &CollapsedTable, n: usize) -> bool {
    for a in 0..table.factors {
        for b in (a + 1)..table.factors {
            let mut counts = vec![0usize; n * n];
            for r in 0..table.runs {
                counts[(table.level(r, a) - 1) * n + table.level(r, b) - 1] += 1;
            }
            if counts.iter().any(|&c| c != table.runs / (n * n)) {
                return false;
            }
        }
    }
    true
}

fn design_validity() -> Outcome {
    let mut checked = 0;
    for n in [2u32, 3, 5, 7, 11] {
        let runs = (n * n) as usize;
        for d in 1..=olh_capacity(n) {
            for seed in 0..3 {
                let design = construct_olh(n, d, seed).map_err(|e| e.to_string())?;
                ensure(projection_uniformity_check(&design).is_uniform(), || {
                    format!("n={n} d={d}: Latin binning violated")
                })?;
                if d >= 2 {
                    let c = max_column_correlation(&design).map_err(|e| e.to_string())?;
                    ensure(c <= 1e-12, || format!("n={n} d={d}: correlation {c:e}"))?;
                }
                let table = collapse(&design, &names(d), &vec![0.0; runs], n as usize)
                    .map_err(|e| e.to_string())?;
                ensure(pair_counts_ok(&table, n as usize), || {
                    format!("n={n} d={d}: collapsed table is not strength 2")
                })?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} designs valid"))
}

fn oa_oracle() -> Outcome {
    let mut arrays = 0;
    for n in [2u32, 3, 5, 7] {
        for k in 2..=(n as usize + 1) {
            let oa = construct_oa(n, k).map_err(|e| e.to_string())?;
            ensure(oa.runs() == (n * n) as usize && oa.columns() == k, || {
                format!("OA({n},{k}) has shape {}x{}", oa.runs(), oa.columns())
            })?;
            for a in 0..k {
                for b in (a + 1)..k {
                    let mut seen = vec![0usize; (n * n) as usize];
                    for r in 0..oa.runs() {
                        seen[(oa.get(r, a) * n + oa.get(r, b)) as usize] += 1;
                    }
                    ensure(seen.iter().all(|&c| c == 1), || {
                        format!("OA({n},{k}) columns {a},{b} repeat a symbol pair")
                    })?;
                }
            }
            arrays += 1;
        }
    }
    Ok(format!("{arrays} arrays pass exhaustive pair counts"))
}

fn population_variance(v: &[f64; 3]) -> f64 {
    let m = v.iter().sum::<f64>() / 3.0;
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 3.0
}

fn analyzer_fidelity() -> Outcome {
    const TARGET: [f64; 3] = [0.55, 0.37, 0.08];
    // Integer range effects; the third factor must peak in its middle range.
    let mut any = Vec::new();
    let mut middle = Vec::new();
    for a in 0..=8 {
        for b in 0..=8 {
            for c in 0..=8 {
                let e = [a as f64, b as f64, c as f64];
                let v = population_variance(&e);
                if v > 0.0 {
                    any.push((v, e));
                    if b > a && b > c {
                        middle.push((v, e));
                    }
                }
            }
        }
    }
    any.sort_by(|x, y| x.0.total_cmp(&y.0));
    any.dedup_by(|x, y| x.0 == y.0);
    middle.sort_by(|x, y| x.0.total_cmp(&y.0));
    middle.dedup_by(|x, y| x.0 == y.0);

    let mut best = (f64::INFINITY, [[0.0; 3]; 3]);
    for (v1, e1) in &any {
        for (v2, e2) in &any {
            for (v3, e3) in &middle {
                let total = v1 + v2 + v3;
                let err = [v1, v2, v3]
                    .iter()
                    .zip(TARGET)
                    .map(|(v, t)| (*v / total - t).abs())
                    .fold(0.0, f64::max);
                if err < best.0 {
                    best = (err, [*e1, *e2, *e3]);
                }
            }
        }
    }
    let effects = best.1;

    let design = construct_olh(3, 3, 0).map_err(|e| e.to_string())?;
    let levels = collapse(&design, &names(3), &[0.0; 9], 3).map_err(|e| e.to_string())?;
    let perf: Vec<f64> = (0..9)
        .map(|r| (0..3).map(|f| effects[f][levels.level(r, f) - 1]).sum())
        .collect();
    let names = vec!["lr".to_string(), "lambda".to_string(), "units".to_string()];
    let table = collapse(&design, &names, &perf, 3).map_err(|e| e.to_string())?;
    let out = analyze(&table, 0.1, 1).map_err(|e| e.to_string())?;
    for (got, want) in out.importance.iter().zip(TARGET) {
        ensure((got - want).abs() <= 0.01, || {
            format!("importances {:?}", out.importance)
        })?;
    }
    ensure(
        out.frozen.len() == 1 && out.frozen[0].factor == "units",
        || format!("frozen {:?}", out.frozen),
    )?;
    ensure(out.frozen[0].unit_value == 0.5, || {
        format!("units frozen at {}", out.frozen[0].unit_value)
    })?;
    Ok(format!(
        "importances ({:.3}, {:.3}, {:.3}); units frozen at 0.5",
        out.importance[0], out.importance[1], out.importance[2]
    ))
}

fn discrepancy_ordering() -> Outcome {
    let start = Instant::now();
    let (mut olh, mut rs) = (0.0, 0.0);
    for seed in 0..100 {
        let design = construct_olh(9, 4, seed).map_err(|e| e.to_string())?;
        let points: Vec<Vec<f64>> = design.rows().map(<[f64]>::to_vec).collect();
        olh += star_discrepancy(&points).map_err(|e| e.to_string())?.value;
        rs += star_discrepancy(&iid(81, 4, seed))
            .map_err(|e| e.to_string())?
            .value;
    }
    let (olh, rs) = (olh / 100.0, rs / 100.0);
    let margin = 1.0 - olh / rs;
    ensure(margin >= 0.2, || {
        format!("OLH {olh:.4} vs i.i.d. {rs:.4}: margin {margin:.3}")
    })?;
    ensure(start.elapsed() < Duration::from_secs(60), || {
        format!("took {:?}", start.elapsed())
    })?;
    Ok(format!(
        "mean D* OLH {olh:.4}, i.i.d. {rs:.4}, margin {:.1}%",
        100.0 * margin
    ))
}

fn variance_ordering() -> Outcome {
    let start = Instant::now();
    let f = Benchmark::AdditivePlusBilinear { gamma: 1.0 };
    let mean = |d: &DesignMatrix| d.rows().map(|r| f.evaluate(r)).sum::<f64>() / d.runs() as f64;
    let (mut olh, mut lhs, mut rs) = (Vec::new(), Vec::new(), Vec::new());
    for seed in 0..1000 {
        olh.push(mean(&construct_olh(5, 4, seed).map_err(|e| e.to_string())?));
        lhs.push(mean(
            &sample_lhs(25, 4, Criterion::Random, seed).map_err(|e| e.to_string())?,
        ));
        rs.push(mean(
            &DesignMatrix::from_rows(&iid(25, 4, seed)).map_err(|e| e.to_string())?,
        ));
    }
    let (vo, vl, vi) = (
        sample_variance(&olh),
        sample_variance(&lhs),
        sample_variance(&rs),
    );
    ensure(vo <= 1.05 * vl && vl <= 1.05 * vi, || {
        format!("Var OLH {vo:e}, LHS {vl:e}, i.i.d. {vi:e}")
    })?;
    ensure(start.elapsed() < Duration::from_secs(60), || {
        format!("took {:?}", start.elapsed())
    })?;
    Ok(format!(
        "Var OLH {vo:.2e} <= LHS {vl:.2e} <= i.i.d. {vi:.2e}"
    ))
}

fn beats_random_search() -> Outcome {
    let start = Instant::now();
    let mut detail = Vec::new();
    let mut lost = Vec::new();
    for (name, d) in SUITE {
        let row = mofa_vs_random(name, d, 50, 1).map_err(|e| e.to_string())?;
        detail.push(format!(
            "{name}(d={d}) mofa {:.4} vs random {:.4}",
            row.mofa_median, row.random_median
        ));
        if !row.mofa_better {
            lost.push(name);
        }
    }
    let detail = detail.join("; ");
    ensure(start.elapsed() < Duration::from_secs(300), || {
        format!("took {:?}", start.elapsed())
    })?;
    if lost.is_empty() {
        Ok(detail)
    } else {
        Err(format!(
            "random search wins on {}: {detail}",
            lost.join(", ")
        ))
    }
}

struct Clock {
    last: Instant,
    laps: Vec<Duration>,
}

impl StudyObserver for Clock {
    fn on_iteration(&mut self, _s: &IterationSummary<'_>) {
        let now = Instant::now();
        self.laps.push(now - self.last);
        self.last = now;
    }
}

fn parallel_schedule() -> Outcome {
    let space = SearchSpace::new(vec![
        FactorDef::continuous("a", 0.0, 1.0),
        FactorDef::continuous("b", 0.0, 1.0),
        FactorDef::continuous("c", 0.0, 1.0),
    ])
    .unwrap();
    let objective = ObjectiveSpec::function(Direction::Minimize, |c: &Config| {
        std::thread::sleep(Duration::from_millis(100));
        Ok(c.values().map(|v| (v - 0.3).powi(2)).sum())
    });
    let mut cfg = StudyConfig::new(space, objective);
    cfg.workers = 3;
    cfg.importance_threshold = Some(1e-9);
    cfg.final_strategy = FinalStrategy::Greedy;
    let mut clock = Clock {
        last: Instant::now(),
        laps: Vec::new(),
    };
    run_mofa_observed(&cfg, &mut clock).map_err(|e| e.to_string())?;
    let limit = Duration::from_millis(450);
    let worst = clock.laps.iter().max().copied().unwrap_or_default();
    ensure(clock.laps.len() == 3 && worst <= limit, || {
        format!("iteration times {:?}", clock.laps)
    })?;
    Ok(format!(
        "iteration wall times {:?} ms (limit 450)",
        clock
            .laps
            .iter()
            .map(Duration::as_millis)
            .collect::<Vec<_>>()
    ))
}

const STUDY: &str = r#"
[study]
name = "accept"
seed = 2024
max_iterations = 3

[objective]
kind = "builtin"
name = "hartmann6"
noise_sd = 0.01

[[space]]
name = "x1"
lower = 0.0
upper = 1.0

[[space]]
name = "x2"
lower = 0.0
upper = 1.0

[[space]]
name = "x3"
lower = 0.0
upper = 1.0

[[space]]
name = "x4"
lower = 0.0
upper = 1.0

[[space]]
name = "x5"
lower = 0.0
upper = 1.0

[[space]]
name = "x6"
lower = 0.0
upper = 1.0
"#;

fn run_study(dir: &Path, text: &str, workers: &str) -> Result<(), String> {
    let config = dir.join("study.toml");
    std::fs::write(&config, text).map_err(|e| e.to_string())?;
    let code = execute_args([
        "mofa",
        "run",
        "--quiet",
        "--config",
        &config.to_string_lossy(),
        "--out-dir",
        &dir.to_string_lossy(),
        "--workers",
        workers,
    ]);
    ensure(code == 0, || format!("run exited with {code}"))
}

fn read_result(dir: &Path) -> Result<ResultFile, String> {
    let text =
        std::fs::read_to_string(dir.join("accept.result.json")).map_err(|e| e.to_string())?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

fn determinism() -> Outcome {
    let one = tempfile::tempdir().map_err(|e| e.to_string())?;
    let eight = tempfile::tempdir().map_err(|e| e.to_string())?;
    run_study(one.path(), STUDY, "1")?;
    run_study(eight.path(), STUDY, "8")?;
    let (a, b) = (read_result(one.path())?, read_result(eight.path())?);
    ensure(a.best_config == b.best_config, || {
        "best_config differs".into()
    })?;
    let ta = read_trial_log(&one.path().join("accept.trials.jsonl")).map_err(|e| e.to_string())?;
    let tb =
        read_trial_log(&eight.path().join("accept.trials.jsonl")).map_err(|e| e.to_string())?;
    ensure(ta.len() == tb.len(), || "trial counts differ".into())?;
    for (x, y) in ta.iter().zip(&tb) {
        ensure(
            x.trial_id == y.trial_id
                && x.value.to_bits() == y.value.to_bits()
                && x.raw_params == y.raw_params,
            || format!("trial {} differs", x.trial_id),
        )?;
    }
    Ok(format!(
        "{} trials and best_config identical for 1 and 8 workers",
        ta.len()
    ))
}

fn hyper_defaults() -> Outcome {
    let d = default_hyper_hyperparams(81, 3);
    ensure(d.range_size == 9, || format!("R = {}", d.range_size))?;
    ensure(d.beta < 1.0 / 9.0 && d.beta > 0.0, || {
        format!("beta = {}", d.beta)
    })?;
    let design = construct_olh(9, 3, 0).map_err(|e| e.to_string())?;
    let perf = vec![0.0; 81];
    ensure(collapse(&design, &names(3), &perf, 9).is_ok(), || {
        "R = 9 rejected".into()
    })?;
    ensure(
        matches!(
            collapse(&design, &names(3), &perf, 10),
            Err(Error::Config(_))
        ),
        || "R = 10 accepted for N = 81".into(),
    )?;
    Ok(format!(
        "R = 9, beta = {:.5} < 1/9; R = 10 rejected",
        d.beta
    ))
}

fn replay_equivalence() -> Outcome {
    let mut replayed_total = 0;
    for (label, extra) in [
        ("defaults", ""),
        ("explicit", "\n[mofa]\nR = 2\nbeta = 0.05\n"),
    ] {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        run_study(dir.path(), &format!("{STUDY}{extra}"), "4")?;
        let stored_text = std::fs::read_to_string(dir.path().join("accept.analysis.json"))
            .map_err(|e| e.to_string())?;
        let stored: Vec<AnalysisOutcome> =
            serde_json::from_str(&stored_text).map_err(|e| e.to_string())?;
        let log = dir
            .path()
            .join("accept.trials.jsonl")
            .to_string_lossy()
            .into_owned();
        let mut replayed = Vec::new();
        for outcome in &stored {
            let out = dir.path().join(format!("replay{}.json", outcome.iteration));
            let iteration = outcome.iteration.to_string();
            let mut args = vec![
                "mofa",
                "analyze",
                "--quiet",
                &log,
                "--iteration",
                &iteration,
            ];
            let out_str = out.to_string_lossy().into_owned();
            args.extend(["--json-out", &out_str]);
            if label == "explicit" {
                args.extend(["-R", "2", "--beta", "0.05"]);
            }
            let code = execute_args(args);
            ensure(code == 0, || format!("analyze exited with {code}"))?;
            let text = std::fs::read_to_string(&out).map_err(|e| e.to_string())?;
            let expected = serde_json::to_string_pretty(outcome).map_err(|e| e.to_string())? + "\n";
            ensure(text == expected, || {
                format!("{label}: iteration {} replay differs", outcome.iteration)
            })?;
            let parsed: AnalysisOutcome = serde_json::from_str(&text).map_err(|e| e.to_string())?;
            replayed.push(parsed);
        }
        let rebuilt = serde_json::to_string_pretty(&replayed).map_err(|e| e.to_string())? + "\n";
        ensure(rebuilt == stored_text, || {
            format!("{label}: analysis file differs from replay")
        })?;
        replayed_total += replayed.len();
    }
    Ok(format!(
        "{replayed_total} iterations replayed byte-identically"
    ))
}

type Check = (u32, &'static str, fn() -> Outcome);

fn main() {
    let criteria: [Check; 10] = [
        (1, "design validity", design_validity),
        (2, "OA oracle", oa_oracle),
        (3, "analyzer fidelity", analyzer_fidelity),
        (4, "discrepancy ordering", discrepancy_ordering),
        (5, "variance ordering", variance_ordering),
        (6, "optimizer beats random search", beats_random_search),
        (7, "parallel schedule bound", parallel_schedule),
        (8, "determinism across worker counts", determinism),
        (9, "hyper-hyperparameter defaults", hyper_defaults),
        (10, "replay equivalence", replay_equivalence),
    ];
    let mut unexpected = 0;
    let mut failed = 0;
    for (id, name, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {id:>2} {name}: {detail} ({secs:.2} s)"),
            Err(detail) => {
                failed += 1;
                let known = KNOWN_FAILURES.contains(&id);
                if !known {
                    unexpected += 1;
                }
                let note = if known { " [known limitation]" } else { "" };
                println!("FAIL {id:>2} {name}: {detail} ({secs:.2} s){note}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed ({unexpected} unexpected)",
        10 - failed
    );
    if unexpected > 0 {
        std::process::exit(1);
    }
}
