use std::f64::consts::PI;

use approx::assert_relative_eq;
use ks_core::spectral::*;
use ks_core::KsError;
use proptest::prelude::*;

#[test]
fn eigenvalue_examples() {
    assert_relative_eq!(eigenvalue(1, 0.0), -97.40909103400244, max_relative = 1e-14);
    assert_relative_eq!(eigenvalue(1, 1.0), -87.53948663291308, max_relative = 1e-14);
    assert_relative_eq!(eigenvalue(2, 1.0), -1519.0670389396816, max_relative = 1e-14);
    assert_relative_eq!(eigenvalue(1, 1.0f32), -87.53949f32, max_relative = 1e-6);
}

#[test]
fn eigenfunction_examples() {
    assert_relative_eq!(eigenfunction_eval(1, 0.5), 2f64.sqrt(), max_relative = 1e-15);
    assert!(eigenfunction_eval(2, 0.5f64).abs() < 1e-15);
    assert_relative_eq!(eigenfunction_derivative(3, 0.0, 1), 3.0 * 2f64.sqrt() * PI, max_relative = 1e-15);
    assert_relative_eq!(eigenfunction_derivative(3, 0.0, 1), 13.328648814475099, max_relative = 1e-14);
    // φ'' = -(jπ)² φ and φ'''' = (jπ)⁴ φ.
    let x = 0.3;
    let k = 2.0 * PI;
    assert_relative_eq!(eigenfunction_derivative(2, x, 2), -k * k * eigenfunction_eval(2, x), max_relative = 1e-13);
    assert_relative_eq!(eigenfunction_derivative(2, x, 4), k.powi(4) * eigenfunction_eval(2, x), max_relative = 1e-13);
}

#[test]
fn mode_index_rejects_zero() {
    assert!(ModeIndex::new(0).is_err());
    assert_eq!(ModeIndex::new(4).unwrap().get(), 4);
}

#[test]
fn critical_lambda_distance_examples() {
    assert_relative_eq!(dist_to_critical_lambda(1.0, 10), 5.0 * PI * PI - 1.0, max_relative = 1e-14);
    assert_relative_eq!(dist_to_critical_lambda(1.0, 10), 48.34802200544679, max_relative = 1e-12);
    assert!(dist_to_critical_lambda(5.0 * PI * PI, 10) < 1e-12);
    // Brute force over pairs j < k ≤ 10: nearest element is 5π².
    assert_relative_eq!(dist_to_critical_lambda(50.0, 10), 0.6519779945532, max_relative = 1e-10);
}

#[test]
fn forbidden_a_distance_examples() {
    assert_eq!(dist_to_critical_a(0.0, 1.0, 5), 0.0);
    assert_relative_eq!(dist_to_critical_a(10.0, 1.0, 5), 10.0, max_relative = 1e-14);
    let gap = eigenvalue(1, 1.0) - eigenvalue(2, 1.0);
    assert_relative_eq!(gap, 1431.5275523067685, max_relative = 1e-13);
    assert!(dist_to_critical_a(gap, 1.0, 5) < 1e-12);
}

#[test]
fn max_mu_examples() {
    let (m, j) = max_mu(1.0);
    assert_eq!(j, 1);
    assert_relative_eq!(m, -87.53948663291308, max_relative = 1e-14);
    let (m, j) = max_mu(0.0);
    assert_eq!(j, 1);
    assert_relative_eq!(m, -PI.powi(4), max_relative = 1e-14);
    // Brute force over j = 1..=10 at λ = 60: μ₁ ≈ 494.77, μ₂ ≈ 810.16, μ₃ < 0.
    let brute = (1..=10)
        .map(|j| (eigenvalue(j, 60.0), j))
        .fold((f64::NEG_INFINITY, 0), |a, b| if b.0 > a.0 { b } else { a });
    let (m, j) = max_mu(60.0);
    assert_eq!((m, j), brute);
    assert_eq!(j, 2);
    assert_relative_eq!(m, 810.1595997174071, max_relative = 1e-13);
    assert_relative_eq!(eigenvalue(1, 60.0), 494.7671730313591, max_relative = 1e-10);
}

#[test]
fn validate_examples() {
    let p = Parameters::new(1.0, 10.0, 50.0, 64);
    let report = validate(&p);
    assert!(report.all_passed(), "{report:?}");
    assert_relative_eq!(report.margin, 47.53948663291308, max_relative = 1e-12);

    let p = Parameters::new(5.0 * PI * PI, 10.0, 1.0, 64);
    let report = validate(&p);
    let check = report.check(CHECK_LAMBDA).unwrap();
    assert!(!check.passed);
    assert!(check.detail.contains("λ ∈ N"));
    assert!(matches!(p.validated(), Err(KsError::InvalidParameters(_))));

    let p = Parameters::new(1.0, 10.0, 200.0, 64);
    let report = validate(&p);
    assert!(!report.check(CHECK_NU).unwrap().passed);
    assert!(report.check(CHECK_LAMBDA).unwrap().passed);
    assert_eq!(p.validated().unwrap_err().category(), "parameter_rejection");
}

#[test]
fn validate_reports_structure_and_forbidden_a() {
    let mut p = Parameters::new(1.0, 10.0, 50.0, 64);
    p.dt = 0.0;
    assert!(!validate(&p).check(CHECK_STRUCTURE).unwrap().passed);
    let p = Parameters::new(1.0, 0.0, 1.0, 8);
    let r = validate(&p);
    assert!(!r.check(CHECK_A_FORBIDDEN).unwrap().passed);
    assert!(r.check(CHECK_A_LARGE).unwrap().passed);
    let p = Parameters::new(45.0, 300.0, 1.0, 8);
    assert!(!validate(&p).check(CHECK_A_LARGE).unwrap().passed);
}

#[test]
fn default_nu_is_half_range() {
    let p = Parameters::with_default_nu(45.0, 400.0, 64);
    let (m, j) = max_mu(45.0);
    assert_eq!(j, 1);
    assert_relative_eq!(p.nu, 0.5 * (400.0 - m), max_relative = 1e-15);
    assert!(p.validated().is_ok());
}

#[test]
fn mu_decreasing_past_argmax() {
    for lambda in [0.0, 1.0, 45.0, 60.0, 300.0, 1000.0] {
        let (_, jstar) = max_mu(lambda);
        for j in jstar..100 {
            assert!(eigenvalue(j + 1, lambda) < eigenvalue(j, lambda), "λ={lambda} j={j}");
        }
        assert!((1..=100).all(|j| eigenvalue(j, lambda) <= max_mu(lambda).0));
    }
}

proptest! {
    #[test]
    fn critical_points_have_zero_distance(j in 1usize..12, dk in 1usize..12) {
        let k = j + dk;
        let lambda = ((j * j + k * k) as f64) * PI * PI;
        let d = dist_to_critical_lambda(lambda, critical_lambda_window(lambda));
        prop_assert!(d <= 1e-9 * lambda);
    }

    #[test]
    fn window_matches_large_brute_force(lambda in 0.0f64..3000.0) {
        let w = dist_to_critical_lambda(lambda, critical_lambda_window(lambda));
        let brute = dist_to_critical_lambda(lambda, 60);
        prop_assert_eq!(w, brute);
    }

    #[test]
    fn zero_is_always_forbidden(lambda in -100.0f64..500.0) {
        prop_assert_eq!(dist_to_critical_a(0.0, lambda, forbidden_a_window(0.0, lambda)), 0.0);
    }

    #[test]
    fn validated_parameters_keep_positive_margins(
        lambda in 0.1f64..120.0,
        extra in 1.0f64..500.0,
        frac in 0.05f64..0.95,
    ) {
        let (m, _) = max_mu(lambda);
        let a = m + extra;
        let p = Parameters::new(lambda, a, frac * extra, 16);
        if p.validated().is_ok() {
            for j in 1..=160usize {
                let jp2 = (j as f64 * PI).powi(2);
                prop_assert!(a + jp2 * jp2 - lambda * jp2 - p.nu > 0.0);
            }
        }
    }
}
