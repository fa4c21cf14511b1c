use hk_core::verification::{matching_decomposition, run_suite, run_suite_named, Suite};
use hk_core::{BigRational, HkError, Opinion};

#[test]
fn every_suite_passes_a_short_run() {
    for suite in Suite::ALL {
        let report = run_suite(suite, 500, 21);
        assert!(report.passed(), "{suite}: {:?}", report.violations.first());
        assert_eq!(report.cases, 500);
        assert!(report.exercised > 0, "{suite} never exercised");
    }
}

#[test]
fn reports_are_reproducible() {
    let a = run_suite(Suite::EdgePersistence, 300, 4);
    let b = run_suite(Suite::EdgePersistence, 300, 4);
    assert_eq!((a.exercised, a.violations.len()), (b.exercised, b.violations.len()));
}

#[test]
fn unknown_suite_is_an_error() {
    assert!(matches!(run_suite_named("nosuch", 10, 0), Err(HkError::UnknownSuite(_))));
    assert!(run_suite_named("h-inductive", 10, 0).unwrap().passed());
}

#[test]
fn matching_examples() {
    let d = matching_decomposition(&[1.0, -1.0], &[0.2, 0.7]).unwrap();
    assert_eq!(d.terms.len(), 1);
    assert!((d.reconstruct(&[0.2, 0.7]) + 0.5).abs() < 1e-15);

    let d = matching_decomposition(&[0.5, 0.5, -1.0], &[0.0, 1.0, 0.5]).unwrap();
    assert!((d.reconstruct(&[0.0, 1.0, 0.5])).abs() < 1e-15);
    assert!((d.total_positive_mass - 1.0).abs() < 1e-15);

    assert!(matches!(matching_decomposition(&[1.0, -0.5], &[0.0, 1.0]), Err(HkError::NonZeroSum(_))));
    assert!(matches!(matching_decomposition(&[1.0], &[0.0, 1.0]), Err(HkError::LengthMismatch { .. })));
}

#[test]
fn exact_matching_reconstructs_exactly() {
    let q = |a: i64, b: i64| <BigRational as Opinion>::from_ratio(a, b);
    let lambdas = vec![q(1, 3), q(-1, 7), q(2, 5), q(-62, 105)];
    let xs = vec![q(1, 2), q(1, 9), q(3, 4), q(0, 1)];
    let d = matching_decomposition(&lambdas, &xs).unwrap();
    let direct = lambdas.iter().zip(&xs).fold(q(0, 1), |a, (l, x)| a + l * x);
    assert_eq!(d.reconstruct(&xs), direct);
    assert_eq!(d.coefficient_sum(), d.total_positive_mass);
}
