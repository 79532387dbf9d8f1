use comma_ea::config::{Budget, ExperimentConfig, LambdaRule, Tracker};
use comma_ea::ea::Engine;
use comma_ea::report::{to_json, BoundReport};
use comma_ea::telemetry::TelemetryRecorder;
use comma_ea::{run_until, RngStream};

fn config() -> ExperimentConfig {
    ExperimentConfig::new(60, 6, LambdaRule::Explicit(18))
        .with_seed(5)
        .with_budget(Budget::Generations(400))
}

#[test]
fn same_seed_same_run() {
    let a = run_until(&config(), &mut RngStream::new(5, 0)).unwrap();
    let b = run_until(&config(), &mut RngStream::new(5, 0)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn observers_do_not_perturb_the_trajectory() {
    let plain = run_until(&config(), &mut RngStream::new(8, 0)).unwrap();
    let traced = run_until(
        &config().with_trackers([Tracker::G, Tracker::Levels, Tracker::NEvents]),
        &mut RngStream::new(8, 0),
    )
    .unwrap();
    assert_eq!(plain.generations, traced.generations);
    assert_eq!(plain.success, traced.success);
    let t = traced.telemetry.unwrap();
    assert_eq!(t.rows.len() as u64, traced.generations + 1);
    assert_eq!(t.levels.unwrap().len(), t.rows.len());
    assert_eq!(t.traces.unwrap().len() as u64, traced.generations);
}

#[test]
fn step_and_step_fast_agree() {
    let cfg = config().with_trackers([Tracker::H]);
    let mut r1 = RngStream::new(3, 0);
    let mut r2 = RngStream::new(3, 0);
    let mut a = Engine::random(60, 6, 18, &mut r1).unwrap();
    let mut b = Engine::random(60, 6, 18, &mut r2).unwrap();
    let mut rec = TelemetryRecorder::new(&cfg, a.population()).unwrap();
    for _ in 0..200 {
        a.step(&mut r1, &mut [&mut rec]);
        b.step_fast(&mut r2);
        assert_eq!(a.population().fitness(), b.population().fitness());
    }
}

#[test]
fn bound_report_json_schema_is_pinned() {
    let r = BoundReport {
        lemma: "lemma7".into(),
        hypothesis_ok: true,
        parameters: serde_json::json!({"mu": 100}),
        empirical: 0.25,
        standard_error: 0.5,
        bound: 1.0,
        pass: true,
        samples: 10,
        rejection_rate: None,
    };
    let golden = "{\n  \"lemma\": \"lemma7\",\n  \"hypothesis_ok\": true,\n  \"parameters\": {\n    \"mu\": 100\n  },\n  \"empirical\": 0.25,\n  \"standard_error\": 0.5,\n  \"bound\": 1.0,\n  \"pass\": true,\n  \"samples\": 10\n}\n";
    assert_eq!(to_json(&r).unwrap(), golden);
    let with_rate = BoundReport { rejection_rate: Some(0.5), ..r };
    assert!(to_json(&with_rate).unwrap().contains("\"rejection_rate\": 0.5"));
}
