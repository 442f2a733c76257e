use sumlab_core::signal::{continuous_signal, discrete_signal, params};
use sumlab_core::verify::Summary;
use sumlab_core::{
    c_infinity_test, holder_upper, run_suite, DiscreteGrid, Kernel, ParamMap, Status, SuiteInput, VerdictStatus,
};

fn discrete_input() -> SuiteInput {
    let mut input = SuiteInput::library_default();
    input.discrete = vec![
        discrete_signal("log_cosine", &ParamMap::new()).unwrap(),
        discrete_signal("log_block", &params([("base", 2.0)])).unwrap(),
        discrete_signal("alternating", &ParamMap::new()).unwrap(),
    ];
    input
}

#[test]
fn smoke_suite_on_a_constant() {
    let mut input = SuiteInput::library_default();
    input.continuous = vec![continuous_signal("constant", &params([("c", 0.7)])).unwrap()];
    input.kernels = vec![Kernel::exp(1.0)];
    let result = run_suite("smoke", &input).unwrap();
    assert_eq!(result.reports.len(), 1);
    let r = &result.reports[0];
    assert_eq!((r.theorem_id.as_str(), r.status), ("SMOKE", Status::Pass));
    assert!(r.discrepancies.iter().all(|d| d.value <= 1e-6));
}

#[test]
fn discrete_suite_layout_and_outcomes() {
    let result = run_suite("discrete", &discrete_input()).unwrap();
    let ids: Vec<&str> = result.reports.iter().take(4).map(|r| r.theorem_id.as_str()).collect();
    assert_eq!(ids, ["T7.1", "T7.2", "V-bridge", "C-chain"]);
    assert_eq!(result.reports.len(), 12);
    let find = |id: &str, signal: &str| {
        result
            .reports
            .iter()
            .find(|r| r.theorem_id == id && r.signal.starts_with(signal))
            .unwrap()
    };
    assert_eq!(find("T7.1", "log_block").status, Status::Pass);
    for s in ["log_cosine", "log_block", "alternating"] {
        assert_eq!(find("V-bridge", s).status, Status::Pass, "{s}");
    }
    // Nothing here contradicts a theorem outright except the slow logarithmic
    // tail; unsettled uniformity moduli are inconclusive, not failures.
    for r in &result.reports {
        if r.status == Status::Inconclusive {
            assert!(r.discrepancies.iter().any(|d| d.value > d.tolerance));
        }
    }
    assert_eq!(Summary::of(&result.reports), result.summary);
}

#[test]
fn c_infinity_is_strictly_weaker_than_cesaro() {
    let g = DiscreteGrid::default();
    let block = discrete_signal("log_block", &params([("base", 2.0)])).unwrap();
    let c1 = holder_upper(&block, 1, &g).unwrap();
    assert!((c1.upper - c1.lower - 1.0 / 3.0).abs() <= 0.04);
    let v = c_infinity_test(&block, &g, 0.02).unwrap();
    assert!(matches!(v.status, VerdictStatus::Summable { alpha } if (alpha - 0.5).abs() <= 0.02));
}

#[test]
fn mellin_suite_identities() {
    let result = run_suite("mellin", &SuiteInput::library_default()).unwrap();
    for r in result.reports.iter().filter(|r| r.theorem_id == "L6.1") {
        assert!(r.discrepancy("route_gap").unwrap().value <= 1e-3, "{}", r.signal);
    }
    for r in result.reports.iter().filter(|r| r.theorem_id == "T6.5") {
        assert_eq!(r.status, Status::Pass, "{}: {:?}", r.signal, r.discrepancies);
    }
    for r in result.reports.iter().filter(|r| r.theorem_id == "T6.9") {
        assert!(r.status == Status::Pass);
        assert!(r.premise_met || r.note.contains("premise not satisfied"));
    }
}

#[test]
fn vacuous_reports_say_so() {
    let mut input = SuiteInput::library_default();
    input.kernels = vec![Kernel::boxcar(1.0)];
    let result = run_suite("tauberian", &input).unwrap();
    assert!(result.reports.iter().all(|r| !r.premise_met && r.note.contains("premise not satisfied")));
    assert_eq!(result.summary.vacuous, result.reports.len());
    assert_eq!(result.summary.pass, 0);
}

#[test]
fn kernel_suite_reports_classes() {
    let result = run_suite("kernels", &SuiteInput::library_default()).unwrap();
    assert_eq!(result.reports.len(), 4);
    for r in &result.reports {
        assert_eq!(r.theorem_id, "T2.6");
        assert_eq!(r.status, Status::Pass);
        assert_eq!(r.measurement("strict_modulus"), Some(1.0));
    }
    let boxcar = result.reports.iter().find(|r| r.kernel.starts_with("box")).unwrap();
    assert_eq!(boxcar.measurement("wiener"), Some(0.0));
    let z = boxcar.measurement("first_positive_zero").unwrap();
    assert!((z - 2.0 * std::f64::consts::PI).abs() <= 1e-3);
}
