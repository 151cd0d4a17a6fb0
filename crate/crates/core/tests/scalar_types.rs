mod common;

use hedac::harness::{run, RunOptions, Scenario};

#[test]
fn single_and_double_precision_runs_agree_loosely() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = Scenario::load(common::write_tiny(dir.path())).unwrap();
    let a = run::<f64>(scenario.clone(), &RunOptions::default()).unwrap();
    let b = run::<f32>(scenario, &RunOptions::default()).unwrap();
    assert_eq!(a.metrics.len(), b.metrics.len());
    let (ea, eb) = (a.final_metrics().eta_v, b.final_metrics().eta_v);
    assert!(ea > 0.0 && eb > 0.0);
    // Trajectories diverge chaotically, so only the coverage level is compared.
    assert!((ea - f64::from(eb)).abs() < 0.2, "{ea} vs {eb}");
    assert!(a.metrics.windows(2).all(|w| w[1].eta_v >= w[0].eta_v && w[1].eta_a >= w[0].eta_a));
    assert!(b.metrics.windows(2).all(|w| w[1].eta_v >= w[0].eta_v && w[1].eta_a >= w[0].eta_a));
}

#[test]
fn config_errors_name_the_field() {
    let text = common::TINY_INSPECTION.replace("count = 3", "count = 0");
    let err = Scenario::parse(&text).and_then(|s| s.validate().map(|_| s)).unwrap_err().to_string();
    assert!(err.contains("fleet.count"), "{err}");
    let err = Scenario::parse(&common::TINY_INSPECTION.replace("seed = 3", "seed = 3\nbogus = 1")).unwrap_err().to_string();
    assert!(err.contains("bogus"), "{err}");
}
