use std::f64::consts::{PI, SQRT_2};

use approx::assert_relative_eq;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ks_core::closed_loop::linear_fit;
use ks_core::controllability::*;
use ks_core::spectral::{critical_lambda_window, dist_to_critical_lambda, eigenvalue};
use ks_core::KsError;

fn unit_times() -> Vec<f64> {
    (0..=200).map(|i| i as f64 / 200.0).collect()
}

#[test]
fn adjoint_signal_examples() {
    let t = unit_times();
    assert!(adjoint_boundary_signal(&[0.0, 0.0], 1.0, &t).iter().all(|v| *v == 0.0));
    let null = adjoint_boundary_signal(&null_initial_data(1, 2), 5.0 * PI * PI, &t);
    assert!(null.iter().all(|v| v.abs() <= 1e-12));
    // z0 = e₁ in the orthonormal basis gives √2π e^{μ₁t}.
    let single = adjoint_boundary_signal(&[1.0], 1.0, &t);
    for (s, &ti) in single.iter().zip(&t) {
        assert_relative_eq!(*s, SQRT_2 * PI * (eigenvalue(1, 1.0) * ti).exp(), max_relative = 1e-13);
    }
    let trace = AdjointTrace::new(&[1.0], 1.0, t.clone());
    assert_eq!(trace.boundary_derivative, single);
}

#[test]
fn null_data_at_other_critical_pairs() {
    for (j, k) in [(1usize, 3usize), (2, 3), (2, 5)] {
        let lambda = ((j * j + k * k) as f64) * PI * PI;
        let s = adjoint_boundary_signal(&null_initial_data(j, k), lambda, &unit_times());
        assert!(s.iter().all(|v| v.abs() <= 1e-12), "({j},{k})");
        let off = adjoint_boundary_signal(&null_initial_data(j, k), lambda + 0.5, &[0.01]);
        let scale = SQRT_2 * PI * j as f64 * (eigenvalue(j, lambda + 0.5) * 0.01).exp();
        assert!(off[0].abs() > 1e-6 * scale, "({j},{k}) off-critical");
    }
}

#[test]
fn gram_dichotomy() {
    let singular = observability_gram(5.0 * PI * PI, &[1, 2], 1.0).unwrap();
    assert!(singular.min_eigenvalue.abs() <= 1e-12);
    assert!(singular.determinant.abs() <= 1e-12);
    let regular = observability_gram(1.0, &[1, 2], 1.0).unwrap();
    assert!(regular.min_eigenvalue > 0.0);
    assert!(regular.determinant > 0.0);
}

#[test]
fn raw_gram_of_proportional_observations_is_singular() {
    let lambda = 5.0 * PI * PI;
    let t = 0.1;
    let g11 = gram_entry(1, 1, lambda, t);
    let g22 = gram_entry(2, 2, lambda, t);
    let g12 = gram_entry(1, 2, lambda, t);
    assert_relative_eq!(g11 * g22, g12 * g12, max_relative = 1e-12);
}

#[test]
fn single_mode_gram_entry() {
    let mu = eigenvalue(1, 1.0);
    let t: f64 = 1.0;
    let expected = 2.0 * PI * PI * ((2.0 * mu * t).exp() - 1.0) / (2.0 * mu);
    assert_relative_eq!(gram_entry(1, 1, 1.0, t), expected, max_relative = 1e-13);
    assert!(expected > 0.0);
    let report = observability_gram(1.0, &[1], t).unwrap();
    assert_relative_eq!(report.log_diagonal[0], expected.ln(), max_relative = 1e-13);
    assert!(observability_gram(1.0, &[], t).is_err());
    assert!(observability_gram(1.0, &(1..=13).collect::<Vec<_>>(), t).is_err());
}

#[test]
fn random_noncritical_lambda_gives_positive_determinant() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut accepted = 0;
    while accepted < 50 {
        let lambda = rng.gen_range(0.0..600.0);
        if dist_to_critical_lambda(lambda, critical_lambda_window(lambda)) <= 0.1 {
            continue;
        }
        accepted += 1;
        let g = observability_gram(lambda, &[1, 2], 1.0).unwrap();
        assert!(g.determinant > 0.0, "λ = {lambda}");
        assert!(observability_gram_min_eig(lambda, 2, 1.0).unwrap() > 0.0);
    }
}

#[test]
fn boundary_profile_conditions() {
    let b = b_function(1.0, 1e-9).unwrap();
    assert!(b.value(0.0).abs() < 1e-15);
    assert!(b.value(1.0).abs() < 1e-14);
    assert_relative_eq!(b.derivative(0.0, 2), 1.0, max_relative = 1e-14);
    assert!(b.derivative(1.0, 2).abs() < 1e-14);
    for i in 1..=20 {
        let x = i as f64 / 21.0;
        assert!((b.derivative(x, 4) + b.derivative(x, 2)).abs() <= 1e-8);
    }
    assert!(matches!(b_function(PI * PI, 1e-9), Err(KsError::DegenerateBoundaryProfile(_))));
    assert!(b_function(-1.0, 1e-9).is_err());
}

#[test]
fn boundary_profile_coefficients() {
    let b = b_function(1.0, 1e-9).unwrap();
    let coeffs = b.sine_coefficients(32);
    let min = coeffs.iter().fold(f64::INFINITY, |m, c| m.min(c.abs()));
    assert!(min > 0.0);
    for (j, c) in coeffs.iter().enumerate() {
        assert!((c - b.exact_coefficient(j + 1)).abs() <= 1e-10 * c.abs(), "j={}", j + 1);
    }
    // Integration by parts gives √2 jπ / μ_j, so |b_j| ~ j⁻³.
    let pts: Vec<(f64, f64)> = (8..=32).map(|j| ((j as f64).ln(), coeffs[j - 1].abs().ln())).collect();
    let (slope, _) = linear_fit(&pts);
    assert!((2.8..=3.2).contains(&-slope), "exponent {}", -slope);
}

#[test]
fn overdetermined_eigenproblem() {
    let generic = eigenproblem_overdetermined_check(1.0, &[-eigenvalue(1, 1.0), 17.3]);
    for p in &generic.points {
        assert!(p.smallest_singular_value > 1e-3, "{p:?}");
    }
    assert_relative_eq!(generic.critical_distance, 5.0 * PI * PI - 1.0, max_relative = 1e-12);

    let lambda = 5.0 * PI * PI;
    let mu = -eigenvalue(1, lambda);
    assert_relative_eq!(eigenvalue(1, lambda), eigenvalue(2, lambda), max_relative = 1e-14);
    let critical = eigenproblem_overdetermined_check(lambda, &[mu]);
    let p = &critical.points[0];
    assert!(p.smallest_singular_value <= 1e-10 * p.singular_values[0]);
    // sin(πx) - sin(2πx)/2 has initial data (0, 0, 0, 3π³) and meets all five conditions.
    let m = overdetermined_matrix(lambda, mu);
    let residual = &m * DVector::from_vec(vec![0.0, 0.0, 0.0, 3.0 * PI.powi(3)]);
    assert!(residual.norm() <= 1e-9 * 3.0 * PI.powi(3));
}
