use approx::assert_relative_eq;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ks_core::kernel::{assemble_kernel, KernelModel};
use ks_core::quadrature::GaussLegendre;
use ks_core::spectral::{eigenfunction_derivative, Parameters};
use ks_core::state::StateField;
use ks_core::transform::*;
use ks_core::KsError;

fn model(n: usize) -> KernelModel {
    assemble_kernel(&Parameters::new(1.0, 10.0, 50.0, n)).unwrap()
}

fn unit(m: usize, j: usize) -> Vec<f64> {
    let mut v = vec![0.0; m];
    v[j - 1] = 1.0;
    v
}

#[test]
fn columns_beyond_truncation_vanish() {
    let op = assemble_transform(&model(16), 40).unwrap();
    for c in 16..40 {
        assert!(op.matrix().column(c).iter().all(|v| *v == 0.0));
    }
    assert!(op.apply(&unit(40, 40)).unwrap().iter().all(|v| *v == 0.0));
    assert!(op.apply(&vec![0.0; 40]).unwrap().iter().all(|v| *v == 0.0));
}

#[test]
fn first_column_matches_quadrature_of_row() {
    let m = model(32);
    let op = assemble_transform(&m, 64).unwrap();
    let quad = GaussLegendre::composite(64, 8);
    let k1 = op.apply(&unit(64, 1)).unwrap();
    for (i, k) in k1.iter().enumerate() {
        let q = quad.integrate(|x| m.row(1, x, 0) * eigenfunction_derivative(i + 1, x, 0));
        assert!((q - k).abs() <= 1e-8, "m={}", i + 1);
    }
}

#[test]
fn too_small_basis_rejected() {
    assert!(matches!(
        assemble_transform(&model(16), 8),
        Err(KsError::DimensionMismatch { .. })
    ));
}

#[test]
fn inverse_examples() {
    let op = assemble_transform(&model(32), 64).unwrap();
    let phi1 = unit(64, 1);
    let w = op.apply_transform(&phi1).unwrap();
    let back = op.solve_inverse(&w).unwrap();
    for (a, b) in back.iter().zip(&phi1) {
        assert!((a - b).abs() < 1e-14);
    }
    assert!(op.solve_inverse(&vec![0.0; 64]).unwrap().iter().all(|v| *v == 0.0));
    assert!(op.solve_inverse(&vec![0.0; 63]).is_err());
}

#[test]
fn inverse_norm_stable_under_refinement() {
    let m = model(64);
    let a = assemble_transform(&m, 128).unwrap().inverse_norm();
    let b = assemble_transform(&m, 256).unwrap().inverse_norm();
    assert!((a / b - 1.0).abs() <= 0.05, "{a} vs {b}");
}

#[test]
fn round_trip_on_random_smooth_fields() {
    let op = assemble_transform(&model(32), 127).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let coeffs: Vec<f64> = (1..=127)
            .map(|j| rng.gen_range(-1.0..1.0) / (j as f64).powi(3))
            .collect();
        let v = StateField::from_modes(128, &coeffs);
        let w = op.apply_field(&v).unwrap();
        let w = StateField::from_values(128, v.values().iter().zip(w.values()).map(|(a, b)| a - b).collect());
        let back = op.solve_inverse_field(&w).unwrap();
        let err: f64 = back.values().iter().zip(v.values()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = v.values().iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(err <= 1e-9 * norm);
    }
}

#[test]
fn galerkin_norm_matches_quadrature_estimate() {
    let m = model(32);
    let op = assemble_transform(&m, 128).unwrap();
    // Nyström matrix √w_i k(x_i, y_j) √w_j and power iteration from a random start.
    let quad = GaussLegendre::composite(32, 8);
    let n = quad.nodes.len();
    let sw: Vec<f64> = quad.weights.iter().map(|w| w.sqrt()).collect();
    let a = DMatrix::from_fn(n, n, |i, j| sw[i] * m.eval(quad.nodes[i], quad.nodes[j]) * sw[j]);
    let ata = a.transpose() * &a;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut v = nalgebra::DVector::from_fn(n, |_, _| rng.gen::<f64>() - 0.5);
    let mut est = 0.0;
    for _ in 0..200 {
        let next = &ata * &v;
        est = next.norm() / v.norm();
        v = next / est;
    }
    let quad_norm = est.sqrt();
    assert!((quad_norm / op.norm() - 1.0).abs() <= 0.1, "{quad_norm} vs {}", op.norm());
}

#[test]
fn spectral_radius_of_nilpotent_matrix_decays() {
    let k = DMatrix::from_fn(12, 12, |r, c| if r > c { 0.3 } else { 0.0 });
    let mut prev = f64::INFINITY;
    for p in [4usize, 6, 8, 10] {
        let est = spectral_radius_of(&k, 12, p);
        assert!(est.gelfand < prev);
        // A 12-fold defective zero is only resolved to about ε^{1/12}.
        assert!(est.max_abs_eigenvalue < 0.1);
        prev = est.gelfand;
    }
    assert_eq!(spectral_radius_of(&k, 12, 12).gelfand, 0.0);
}

#[test]
fn assembled_operator_spectrum() {
    let op = assemble_transform(&model(64), 256).unwrap();
    let est = op.spectral_radius_estimate(8).unwrap();
    assert!(est.max_abs_eigenvalue <= 0.5);
    assert!(est.gelfand < est.norm);
    assert_relative_eq!(est.norm, op.norm(), max_relative = 1e-12);
    assert!(op.spectral_radius_estimate(3).is_err());
    assert!(op.sigma_min() > 0.9);
}

#[test]
fn binary_dump_round_trip() {
    let op = assemble_transform(&model(8), 20).unwrap();
    let mut buf = Vec::new();
    op.write_binary(&mut buf).unwrap();
    assert_eq!(buf.len(), 16 + 20 * 20 * 8);
    assert_eq!(&buf[..4], b"KSKN");
    let back = TransformOperator::read_binary(buf.as_slice()).unwrap();
    assert_eq!(back.matrix(), op.matrix());
    assert_eq!(back.n_kernel(), 8);
    buf[0] = b'X';
    assert!(matches!(TransformOperator::read_binary(buf.as_slice()), Err(KsError::Schema(_))));
    assert!(matches!(TransformOperator::read_binary(&buf[..10]), Err(KsError::Io(_))));
}

#[test]
fn near_singular_operator_rejected() {
    let mut k = DMatrix::<f64>::zeros(4, 4);
    k[(0, 0)] = 1.0;
    let op = TransformOperator::from_matrix(k, 1).unwrap();
    assert!(matches!(op.solve_inverse(&[1.0, 0.0, 0.0, 0.0]), Err(KsError::NearSingular(_))));
}
