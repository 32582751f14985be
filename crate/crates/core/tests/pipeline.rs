use mofa::evaluator::{evaluate_batch, external_objective, Direction, TrialRequest, TrialStatus};
use mofa::optimizer::{run_mofa, FinalStrategy, StopReason, StudyConfig};
use mofa::space::{Config, FactorDef, FactorKind, SearchSpace};
use mofa::Error;

fn request(id: u64, x: f64) -> TrialRequest {
    let mut raw = Config::new();
    raw.insert("x".into(), x);
    TrialRequest {
        trial_id: id,
        iteration: 1,
        raw_params: raw,
        active_factors: vec!["x".into()],
        unit_params: vec![0.5],
    }
}

#[test]
fn external_statuses() {
    // Succeeds for x < 1, fails for x in [1, 2), hangs otherwise.
    let script = r#"x=$(sed 's/.*"x":\([-0-9.e]*\).*/\1/'); case "$x" in 0*) echo "$x";; 1*) exit 3;; *) exec sleep 5;; esac"#;
    let obj = external_objective(script, 0.5)
        .unwrap()
        .with_direction(Direction::Minimize);
    let out = evaluate_batch(
        vec![request(0, 0.25), request(1, 1.5), request(2, 2.5)],
        &obj,
        3,
    )
    .unwrap();
    assert_eq!(out[0].status, TrialStatus::Ok);
    assert_eq!(out[0].value, -0.25);
    assert_eq!(out[1].status, TrialStatus::Failed);
    assert!(out[1].value.is_nan());
    assert_eq!(out[2].status, TrialStatus::Timeout);
    let line = serde_json::to_string(&out[1]).unwrap();
    assert!(line.contains("\"value\":null"), "{line}");
}

#[test]
fn external_study_with_mixed_factors() {
    let space = SearchSpace::new(vec![
        FactorDef::continuous("lr", 1e-4, 1e-1).log(),
        FactorDef::integer("units", 16.0, 512.0).log(),
        FactorDef::continuous("dropout", 0.0, 0.8),
    ])
    .unwrap();
    // A shell objective that reads its parameters from stdin.
    let script = r#"read p; lr=$(echo "$p" | sed 's/.*"lr":\([-0-9.e]*\).*/\1/'); u=$(echo "$p" | sed 's/.*"units":\([0-9.]*\).*/\1/'); awk -v lr="$lr" -v u="$u" 'BEGIN { print (log(lr)/log(10)+2.5)^2 + ((u-128)/128)^2 }'"#;
    let mut cfg = StudyConfig::new(
        space,
        external_objective(script, 10.0)
            .unwrap()
            .with_direction(Direction::Minimize),
    );
    cfg.workers = 4;
    cfg.seed = 5;
    cfg.final_strategy = FinalStrategy::Combined;
    let res = run_mofa(&cfg).unwrap();
    assert!(res.history.iter().all(|t| t.is_ok()));
    for t in &res.history {
        assert_eq!(t.raw_params["units"].fract(), 0.0);
        assert!((16.0..=512.0).contains(&t.raw_params["units"]));
    }
    let units = res.final_space.factor("units").unwrap();
    assert_eq!(units.kind, FactorKind::Integer);
    assert!(res.best_value >= res.greedy_value);
    assert!(matches!(
        res.stop_reason,
        StopReason::MaxIterations | StopReason::AllFrozen
    ));
}

#[test]
fn failing_external_study_aborts() {
    let space = SearchSpace::new(vec![
        FactorDef::continuous("a", 0.0, 1.0),
        FactorDef::continuous("b", 0.0, 1.0),
    ])
    .unwrap();
    let mut cfg = StudyConfig::new(space, external_objective("exit 1", 5.0).unwrap());
    cfg.workers = 3;
    let err = run_mofa(&cfg).unwrap_err();
    assert_eq!(
        err.error,
        Error::BatchAborted {
            iteration: 1,
            failed: 9,
            total: 9
        }
    );
    assert_eq!(err.history.len(), 9);
    assert!(err.per_iteration.is_empty());
}
