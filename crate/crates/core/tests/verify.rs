use fpme::verify::{run_suite, run_suites, Scenario, SuiteId, LADDER};

#[test]
fn identity_family_gives_equality() {
    let r = run_suite(SuiteId::S9, &Scenario::default()).unwrap();
    assert!(r.pass, "{:?}", r.failed_checks());
    assert_eq!(r.check("identity_equality"), Some(true));
    assert!(r.measurement("identity_relative_gap").unwrap().abs() <= 1e-12);
}

#[test]
fn local_run_has_finite_speed_and_refines() {
    let r = run_suite(SuiteId::S14, &Scenario::default()).unwrap();
    assert!(r.pass, "{:?}", r.failed_checks());
    assert!(r.measurement("far_field_relative").unwrap() < 1e-12);
    assert!(r.measurement("far_field_relative_refined").unwrap() < 1e-12);
    assert!(r.measurement("fractional_min_u_at_probe_time").unwrap() > 0.0);
}

#[test]
fn ladder_gap_is_bounded_by_delta_times_eigen_mass() {
    assert!(LADDER.contains(&1e-3));
    let r = run_suite(SuiteId::S8, &Scenario::default()).unwrap();
    assert!(r.pass, "{:?}", r.failed_checks());
    assert!(r.measurement("l1_excess_max").unwrap() <= 1e-8);
}

#[test]
fn supercritical_order_is_refused_not_errored() {
    let sc = Scenario { s: 0.6, ..Scenario::default() };
    let r = run_suite(SuiteId::S2, &sc).unwrap();
    assert!(!r.pass);
    assert!(r.refusal.as_deref().unwrap_or_default().contains("2s"));
}

#[test]
fn subset_reports_in_registry_order() {
    let sc = Scenario { n: 64, coarse_n: 32, ..Scenario::default() };
    let report = run_suites(&[SuiteId::S10, SuiteId::S9], &sc).unwrap();
    let ids: Vec<&str> = report.suites.iter().map(|s| s.suite_id.as_str()).collect();
    assert_eq!(ids, ["S9", "S10"]);
    assert_eq!(report.config_hash.len(), 64);
    assert!(report.pass());
}
