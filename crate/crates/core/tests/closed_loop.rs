use std::f64::consts::PI;

use approx::assert_relative_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ks_core::closed_loop::*;
use ks_core::experiments;
use ks_core::kernel::{assemble_kernel, KernelModel};
use ks_core::quadrature::GaussLegendre;
use ks_core::solver::SolverConfig;
use ks_core::spectral::{eigenfunction_derivative, eigenvalue, Parameters};
use ks_core::state::StateField;
use ks_core::transform::assemble_transform;
use ks_core::KsError;

fn params() -> Parameters {
    Parameters::new(1.0, 10.0, 50.0, 32)
}

fn law(model: &KernelModel, intervals: usize) -> FeedbackLaw {
    FeedbackLaw::new(model, assemble_transform(model, intervals - 1).unwrap()).unwrap()
}

#[test]
fn feedback_functional_examples() {
    let model = assemble_kernel(&params()).unwrap();
    let l = law(&model, 128);
    assert_eq!(l.feedback_eval(&StateField::zeros(128)).unwrap(), 0.0);
    for j in [1usize, 2, 17] {
        let f = l.feedback_eval(&StateField::mode(128, j, 1.0)).unwrap();
        assert_relative_eq!(f, l.gain.coeffs[j - 1], max_relative = 1e-12);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let c: Vec<f64> = (1..=20).map(|j| rng.gen_range(-1.0..1.0) / (j * j) as f64).collect();
        let v = StateField::from_modes(512, &c);
        let l = law(&model, 512);
        let a = l.feedback_eval(&v).unwrap();
        let b = l.feedback_eval_quadrature(&v);
        assert!((a - b).abs() <= 1e-6 * a.abs().max(1e-3), "{a} vs {b}");
    }
}

#[test]
fn lyapunov_functional_examples() {
    let p = Parameters::new(1.0, 10.0, 50.0, 8);
    let q1 = lyapunov_q(&StateField::mode(128, 1, 1.0), &p);
    assert_relative_eq!(q1, 97.53948663291308, max_relative = 1e-12);
    assert_relative_eq!(q1, PI.powi(4) - PI * PI + 10.0, max_relative = 1e-12);
    let q2 = lyapunov_q(&StateField::mode(128, 2, 1.0), &p);
    assert_relative_eq!(q2, 10.0 - eigenvalue(2, 1.0), max_relative = 1e-12);
    assert_relative_eq!(q2, 1529.0670389396816, max_relative = 1e-12);
    assert_eq!(lyapunov_q(&StateField::zeros(128), &p), 0.0);
}

#[test]
fn zero_initial_state_gives_zero_trace() {
    let p = params();
    let model = assemble_kernel(&p).unwrap();
    let l = law(&model, 64);
    let cfg = ClosedLoopConfig::new(SolverConfig { intervals: 64, dt: 1e-4, ..SolverConfig::default() }, 0.01);
    let trace = simulate_closed_loop(&StateField::zeros(64), &l, &p, &cfg).unwrap();
    assert!(trace.len() > 5);
    assert!(trace.norm_v.iter().chain(&trace.norm_w).chain(&trace.feedback).all(|v| *v == 0.0));
}

#[test]
fn transformed_norm_matches_quadrature() {
    let model = assemble_kernel(&params()).unwrap();
    let l = law(&model, 128);
    let c: Vec<f64> = (1..=12).map(|j| (-1f64).powi(j) / (j * j) as f64).collect();
    let v = StateField::from_modes(128, &c);
    let vf = |y: f64| -> f64 { c.iter().enumerate().map(|(i, cj)| cj * eigenfunction_derivative(i + 1, y, 0)).sum() };
    let quad = GaussLegendre::composite(32, 8);
    let w2 = quad.integrate(|x| {
        let kv = quad.integrate(|y| model.eval(x, y) * vf(y));
        (vf(x) - kv).powi(2)
    });
    let via_transform = l.transformed_norm(&v).unwrap();
    assert!((via_transform / w2.sqrt() - 1.0).abs() <= 1e-6, "{via_transform} vs {}", w2.sqrt());
}

#[test]
fn synthetic_decay_reports() {
    let nu = 30.0;
    let times: Vec<f64> = (0..=100).map(|i| i as f64 * 1e-3).collect();
    let exact = SimulationTrace {
        norm_v: times.iter().map(|t| 2.0 * (-nu * t).exp()).collect(),
        norm_w: times.iter().map(|t| (-nu * t).exp()).collect(),
        feedback: vec![0.0; times.len()],
        times: times.clone(),
        envelope_fit: None,
    };
    let r = verify_transform_decay(&exact, nu);
    assert_relative_eq!(r.max_envelope_ratio, 1.0, max_relative = 1e-12);
    assert_relative_eq!(r.fitted_rate, nu, max_relative = 1e-10);
    let fast = SimulationTrace {
        norm_w: times.iter().map(|t| (-2.0 * nu * t).exp()).collect(),
        ..exact
    };
    let r = verify_transform_decay(&fast, nu);
    assert!(r.max_envelope_ratio <= 1.0);
    assert_relative_eq!(r.fitted_rate, 2.0 * nu, max_relative = 1e-10);
    assert!(max_dissipation_excess(&fast, nu) < 0.0);
}

#[test]
fn linear_closed_loop_properties() {
    let run = experiments::linear_decay().unwrap();
    let trace = &run.closed;
    let nu = run.params.nu;
    assert!(run.outcome.passed, "{}", run.outcome.line());
    // Transformed dynamics decay at a - μ₁ ≈ 97.5.
    let r = verify_transform_decay(trace, nu);
    assert_relative_eq!(r.fitted_rate, 10.0 - eigenvalue(1, 1.0), max_relative = 0.01);
    assert!(max_dissipation_excess(trace, nu) <= 0.0);
    // log ‖w‖ is affine to within 5% with slope ≤ -ν.
    let (slope, intercept) = linear_fit(
        &trace.times.iter().zip(&trace.norm_w).map(|(t, w)| (*t, w.ln())).collect::<Vec<_>>(),
    );
    assert!(slope <= -nu);
    for (t, w) in trace.times.iter().zip(&trace.norm_w) {
        assert!(((slope * t + intercept).exp() / w - 1.0).abs() <= 0.05);
    }
    let model = assemble_kernel(&run.params).unwrap();
    let g = model.feedback_gain().unwrap().l2_norm();
    for (f, v) in trace.feedback.iter().zip(&trace.norm_v) {
        assert!(f.abs() <= g * v * (1.0 + 1e-9));
    }
}

#[test]
fn trace_csv_round_trip() {
    let run = experiments::linear_decay().unwrap();
    let csv = run.closed.to_csv();
    assert!(csv.starts_with("t,norm_v,norm_w,feedback\n"));
    let back = SimulationTrace::from_csv(&csv).unwrap();
    assert_eq!(back.times, run.closed.times);
    assert_eq!(back.norm_w, run.closed.norm_w);
    assert_eq!(back.feedback, run.closed.feedback);
    assert!(matches!(SimulationTrace::from_csv(""), Err(KsError::Schema(_))));
    assert!(matches!(SimulationTrace::from_csv("t,x\n1,2\n"), Err(KsError::Schema(_))));
    assert!(matches!(
        SimulationTrace::from_csv("t,norm_v,norm_w,feedback\n1,2,3\n"),
        Err(KsError::Schema(_))
    ));
    assert!(matches!(SimulationTrace::from_csv("t,norm_v,norm_w,feedback\n"), Err(KsError::Schema(_))));
}

#[test]
fn divergence_keeps_partial_trace() {
    let p = Parameters::with_default_nu(45.0, 400.0, 16);
    let model = assemble_kernel(&p).unwrap();
    let transform = assemble_transform(&model, 63).unwrap();
    let cfg = ClosedLoopConfig::new(
        SolverConfig { intervals: 64, dt: 1e-4, divergence_factor: 1.0 + 1e-9, ..SolverConfig::default() },
        0.01,
    );
    let failure = simulate_open_loop(&StateField::mode(64, 1, 0.01), 45.0, &transform, &cfg).unwrap_err();
    assert!(matches!(failure.error, KsError::DivergedStep { .. }));
    assert_eq!(failure.trace.len(), 1);
    let l = FeedbackLaw::new(&model, transform).unwrap();
    // ‖v‖ grows transiently under feedback at λ = 45, so every retry trips the
    // strict guard; the last attempt starts from 0.01 / 2⁴.
    let failure = simulate_with_retry(&StateField::mode(64, 1, 0.01), &l, &p, &cfg).unwrap_err();
    assert!(matches!(failure.error, KsError::DivergedStep { .. }));
    assert_relative_eq!(failure.trace.norm_v[0], 0.01 / 16.0, max_relative = 1e-12);
}

#[test]
fn run_summary_field_names() {
    let run = experiments::linear_decay().unwrap();
    let summary = RunSummary::new(&run.params, &run.closed, false);
    let json = serde_json::to_value(&summary).unwrap();
    assert!(json.get("C_empirical").is_some());
    assert!(json.get("fitted_rate").is_some());
    assert_eq!(json["diverged"], false);
}
