use noise_disturbance::scenarios::{
    self, gain_grid, run_bae, run_rotated_bae, run_transducer, sweep_bae, sweep_csv, GridSettings, RunReport, Scenario,
    ScenarioConfig, StateSpec, TrialCounts,
};

fn config(scenario: Scenario, gain: f64, probe: StateSpec) -> ScenarioConfig {
    ScenarioConfig { gain, probe, ..ScenarioConfig::new(scenario) }
}

fn assert_close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol, "{a} vs {b}");
}

fn assert_no_failures(r: &RunReport) {
    let failed: Vec<_> = r.failed_checks().map(|c| c.key.clone()).collect();
    assert!(failed.is_empty(), "failed checks: {failed:?}");
    assert!(r.passed);
}

#[test]
fn bae_vacuum_gain_two_is_saturated() {
    let r = run_bae(&config(Scenario::Bae, 2.0, StateSpec::Vacuum)).unwrap();
    assert_no_failures(&r);
    let a = r.assessment.as_ref().unwrap();
    assert_close(a.k[(0, 0)], 1.0 / 16.0, 1e-12);
    assert_close(a.k[(0, 1)], 0.0, 1e-12);
    assert_close(a.k[(1, 1)], 1.0, 1e-12);
    assert!(a.verdicts.matrix_oup.holds);
    assert!(a.verdicts.matrix_oup.saturated);
    assert_close(a.verdicts.matrix_oup.min_eigenvalue, 0.0, 1e-12);
}

#[test]
fn bae_published_probe_violates_matrix_relation() {
    let r = run_bae(&config(Scenario::Bae, 1.0, StateSpec::Published)).unwrap();
    assert_no_failures(&r);
    let a = r.assessment.as_ref().unwrap();
    assert!(!a.verdicts.matrix_oup.holds);
    assert_close(a.verdicts.matrix_oup.determinant, -0.25, 1e-12);
    assert_close(a.epsilon[0] * a.eta[0], 0.25, 1e-12);
    let f = r.finding_named("probe_unphysical").expect("probe flagged");
    assert_close(f.details["determinant"].as_f64().unwrap(), -3.0 / 16.0, 1e-12);
}

#[test]
fn bae_oracle_matches_moments() {
    let mut c = config(Scenario::Bae, 1.0, StateSpec::Vacuum);
    c.grid = Some(GridSettings { saturation: false, ..GridSettings::default() });
    let r = run_bae(&c).unwrap();
    assert_no_failures(&r);
    let o = r.oracle.as_ref().unwrap();
    assert!(o.max_relative_deviation <= 1e-6, "{}", o.max_relative_deviation);
    assert!(r.check_named("oracle.k_matrix").unwrap().pass);
}

#[test]
fn transducer_noise_vanishes_for_any_probe() {
    for probe in [StateSpec::Vacuum, StateSpec::Squeezed(0.7), StateSpec::Published] {
        let r = run_transducer(&config(Scenario::Transducer, 1.0, probe)).unwrap();
        assert_no_failures(&r);
        assert_eq!(r.assessment.as_ref().unwrap().epsilon[0], 0.0);
    }
}

#[test]
fn transducer_grid_confirms_saturation() {
    let mut c = config(Scenario::Transducer, 1.0, StateSpec::Vacuum);
    c.grid = Some(GridSettings::default());
    let r = run_transducer(&c).unwrap();
    assert_no_failures(&r);
    assert_eq!(r.check_named("transducer.grid_residual_lambda2_zero").unwrap().measured, 0.0);
    assert!(r.finding_named("transducer_saturation").is_some());
}

#[test]
fn rotation_at_symmetric_point() {
    let r = run_rotated_bae(&config(Scenario::RotatedBae, 1.0, StateSpec::Vacuum)).unwrap();
    assert_no_failures(&r);
    let after = &r.rotation.as_ref().unwrap().after;
    assert_close(after.eps_sq, 0.25, 1e-12);
    assert_close(after.eta_sq, 0.25, 1e-12);
    assert_close(after.anticommutator, 0.0, 1e-12);
}

#[test]
fn rotation_at_gain_two() {
    let r = run_rotated_bae(&config(Scenario::RotatedBae, 2.0, StateSpec::Vacuum)).unwrap();
    assert_no_failures(&r);
    let rot = r.rotation.as_ref().unwrap();
    assert_close(rot.after.eps_sq, 17.0 / 32.0, 1e-12);
    assert_close(rot.after.eta_sq, 17.0 / 32.0, 1e-12);
    assert_close(rot.after.anticommutator.abs(), 15.0 / 32.0, 1e-12);
    assert_eq!(rot.after.matrix_holds, rot.before.matrix_holds);
    assert!(rot.after.matrix_saturated);
}

#[test]
fn identity_rotation_reproduces_bae() {
    let mut c = config(Scenario::RotatedBae, 2.0, StateSpec::Vacuum);
    c.rotation_angle = 0.0;
    let rotated = run_rotated_bae(&c).unwrap();
    let plain = run_bae(&config(Scenario::Bae, 2.0, StateSpec::Vacuum)).unwrap();
    let rot = rotated.rotation.as_ref().unwrap();
    assert_eq!(rot.before, rot.after);
    let (ra, pa) = (rotated.assessment.as_ref().unwrap(), plain.assessment.as_ref().unwrap());
    assert_eq!(ra.k, pa.k);
    assert_eq!(ra.verdicts.matrix_oup, pa.verdicts.matrix_oup);
}

#[test]
fn zero_trial_suite_is_empty_success() {
    let mut c = ScenarioConfig::new(Scenario::RandomSuite);
    c.trials = TrialCounts::uniform(0);
    let r = scenarios::run(&c).unwrap();
    assert!(r.passed);
    assert!(r.suite.unwrap().properties.iter().all(|p| p.trials == 0 && p.counterexamples.is_empty()));
}

#[test]
fn reports_are_deterministic() {
    let mut bae = config(Scenario::Bae, 2.0, StateSpec::Vacuum);
    bae.grid = Some(GridSettings { points: Some(256), ..GridSettings::default() });
    let mut suite = ScenarioConfig::new(Scenario::RandomSuite);
    suite.trials = TrialCounts::uniform(50);
    suite.seed = 9;
    for c in [bae, suite] {
        let a = scenarios::run(&c).unwrap();
        let b = scenarios::run(&c).unwrap();
        assert_eq!(a.body_json(), b.body_json());
    }
}

#[test]
fn report_json_round_trips() {
    let r = run_bae(&config(Scenario::Bae, 2.0, StateSpec::Published)).unwrap();
    let back: RunReport = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(back.body_json(), r.body_json());
    assert_eq!(back.provenance.schema_version, scenarios::SCHEMA_VERSION);
}

#[test]
fn sweep_rows_and_csv() {
    let c = config(Scenario::Bae, 1.0, StateSpec::Published);
    let gains = gain_grid(0.5, 5.0, 10);
    let rows = sweep_bae(&c, &gains).unwrap();
    assert_eq!(rows.len(), 10);
    for (row, g) in rows.iter().zip(&gains) {
        assert_eq!(row.gain, *g);
        assert_close(row.eps * row.eta, 0.25, 1e-12);
        assert_close(row.det, -0.25, 1e-12);
        assert!(row.min_eigenvalue < 0.0);
    }
    let csv = sweep_csv(&rows).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "gain,eps,eta,min_eigenvalue,det");
    assert_eq!(csv.lines().count(), 11);
}

#[test]
fn config_document_drives_a_run() {
    let c = ScenarioConfig::from_json(r#"{"scenario": "bae", "gain": 2, "probe": "squeezed:0.3", "seed": 4}"#).unwrap();
    assert_eq!(c.probe, StateSpec::Squeezed(0.3));
    let r = scenarios::run(&c).unwrap();
    assert_no_failures(&r);
    assert_eq!(r.config, c);
    assert!(ScenarioConfig::from_json(r#"{"scenario": "bae", "gian": 2}"#).is_err());
}
