//! Named reproduction experiments with pass/fail verdicts. Shared by the
//! acceptance test target and the command-line presets.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::closed_loop::{
    simulate_closed_loop, simulate_open_loop, verify_transform_decay, ClosedLoopConfig, FeedbackLaw,
    SimulationTrace,
};
use crate::controllability::{adjoint_boundary_signal, null_initial_data, observability_gram};
use crate::error::{KsError, Result};
use crate::kernel::{
    assemble_kernel, characteristic_roots, mode_shape, solve_coefficients, validate_closed_form,
    weak_residual, weak_residual_zero_kernel, PolyTestFunction,
};
use crate::solver::{
    lift_boundary, second_derivative_at_left, BoundaryData, KsSolver, Scheme, SolverConfig,
};
use crate::spectral::{eigenvalue, Parameters};
use crate::state::StateField;
use crate::transform::assemble_transform;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub id: String,
    pub passed: bool,
    pub summary: String,
    pub metrics: BTreeMap<String, f64>,
}

impl Outcome {
    fn new(id: &str, passed: bool, summary: String) -> Self {
        Outcome {
            id: id.to_string(),
            passed,
            summary,
            metrics: BTreeMap::new(),
        }
    }

    fn metric(mut self, key: impl Into<String>, value: f64) -> Self {
        self.metrics.insert(key.into(), value);
        self
    }

    /// `AC1 PASS  summary`.
    pub fn line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        format!("{} {verdict}  {}", self.id.to_uppercase(), self.summary)
    }
}

pub const ALL: [&str; 9] = ["ac1", "ac2", "ac3", "ac4", "ac5", "ac6", "ac7", "ac8", "ac9"];

pub fn run(id: &str) -> Result<Outcome> {
    match id {
        "ac1" => kernel_weak_residual(),
        "ac2" => coefficient_asymptotics(),
        "ac3" => root_asymptotics(),
        "ac4" => closed_form_oracle(),
        "ac5" => invertibility(),
        "ac6" => linear_decay().map(|r| r.outcome),
        "ac7" => nonlinear_stabilization().map(|r| r.outcome),
        "ac8" => controllability_dichotomy(),
        "ac9" => solver_verification(),
        other => Err(KsError::InvalidParameters(format!("unknown preset `{other}`"))),
    }
}

/// Weak-form residual of the kernel equation against the standard test function.
pub fn kernel_weak_residual() -> Result<Outcome> {
    let rho = PolyTestFunction::standard();
    let scale = weak_residual_zero_kernel(10.0, &rho)?;
    let mut residuals = Vec::new();
    for n in [16, 32, 64, 128] {
        let model = assemble_kernel(&Parameters::new(1.0, 10.0, 50.0, n))?;
        residuals.push(weak_residual(&model, &rho)?);
    }
    let monotone = residuals.windows(2).all(|w| w[1] < w[0]);
    let last = residuals[3] / scale;
    let mut out = Outcome::new(
        "ac1",
        monotone && last <= 0.01,
        format!(
            "residuals {:.3e} {:.3e} {:.3e} {:.3e}, N=128 at {last:.2e} of scale {scale:.4e}",
            residuals[0], residuals[1], residuals[2], residuals[3]
        ),
    )
    .metric("scale", scale)
    .metric("relative_n128", last);
    for (n, r) in [16, 32, 64, 128].iter().zip(&residuals) {
        out = out.metric(format!("residual_n{n}"), *r);
    }
    Ok(out)
}

/// `max_{j ∈ [N/4, N]} |c_j - 1| j³ / (1 + ln j)`.
pub fn coefficient_constant(lambda: f64, a: f64, n: usize) -> Result<f64> {
    let sol = solve_coefficients(lambda, a, n)?;
    Ok((n / 4..=n)
        .map(|j| {
            let jf = j as f64;
            (sol.c[j - 1] - 1.0).abs() * jf.powi(3) / (1.0 + jf.ln())
        })
        .fold(0.0, f64::max))
}

pub fn coefficient_asymptotics() -> Result<Outcome> {
    let c128 = coefficient_constant(1.0, 10.0, 128)?;
    let c256 = coefficient_constant(1.0, 10.0, 256)?;
    let drift = (c256 - c128).abs() / c128;
    Ok(Outcome::new(
        "ac2",
        c128.is_finite() && drift <= 0.25,
        format!("constant {c128:.6} at N=128, {c256:.6} at N=256, drift {drift:.3}"),
    )
    .metric("constant_n128", c128)
    .metric("constant_n256", c256)
    .metric("drift", drift))
}

/// `|i r4_j - (jπ - a/(4j³π³))| j⁵` for `j = 1..=j_max`.
pub fn root_errors(lambda: f64, a: f64, j_max: usize) -> Result<Vec<f64>> {
    (1..=j_max)
        .map(|j| {
            let roots = characteristic_roots::<f64>(j, lambda, a, 1e-6)?;
            let jp = j as f64 * PI;
            let leading = a / (4.0 * jp.powi(3));
            let offset = roots.i_r4_offset();
            Ok(((offset.re - leading).powi(2) + offset.im.powi(2)).sqrt() * (j as f64).powi(5))
        })
        .collect()
}

pub fn root_asymptotics() -> Result<Outcome> {
    let (lambda, a) = (1.0, 10.0);
    let e = root_errors(lambda, a, 128)?;
    let sup = e.iter().cloned().fold(0.0, f64::max);
    let tail = e[64..].iter().cloned().fold(0.0, f64::max);
    let middle = e[32..64].iter().cloned().fold(0.0, f64::max);
    // Next term of the expansion is aλ/(8 j⁵ π⁵).
    let limit = a * lambda / (8.0 * PI.powi(5));
    Ok(Outcome::new(
        "ac3",
        sup.is_finite() && tail <= 1.1 * middle,
        format!("sup {sup:.5e}, j ∈ (64,128] max {tail:.5e}, predicted limit {limit:.5e}"),
    )
    .metric("sup", sup)
    .metric("tail", tail)
    .metric("predicted_limit", limit))
}

pub fn closed_form_oracle() -> Result<Outcome> {
    let modes = (1..=8)
        .map(|j| mode_shape::<f64>(j, 1.0, 10.0, 1e-6))
        .collect::<Result<Vec<_>>>()?;
    let v = validate_closed_form(&modes, 10.0);
    Ok(Outcome::new(
        "ac4",
        v.passed,
        format!(
            "{} modes x {} coefficients, max relative error {:.3e}",
            v.modes_checked, v.coefficients_per_mode, v.max_relative_error
        ),
    )
    .metric("max_relative_error", v.max_relative_error))
}

pub fn invertibility() -> Result<Outcome> {
    let model = assemble_kernel(&Parameters::new(1.0, 10.0, 50.0, 64))?;
    let t256 = assemble_transform(&model, 256)?;
    let t512 = assemble_transform(&model, 512)?;
    let rho = t256.spectral_radius_estimate(8)?;
    let drift = (t512.sigma_min() / t256.sigma_min() - 1.0).abs();
    Ok(Outcome::new(
        "ac5",
        rho.max_abs_eigenvalue <= 0.5 && drift <= 0.2,
        format!(
            "max|eig| {:.3e}, σ_min(I-K) {:.6} at M=256, {:.6} at M=512",
            rho.max_abs_eigenvalue,
            t256.sigma_min(),
            t512.sigma_min()
        ),
    )
    .metric("max_abs_eigenvalue", rho.max_abs_eigenvalue)
    .metric("gelfand", rho.gelfand)
    .metric("sigma_min_256", t256.sigma_min())
    .metric("sigma_min_512", t512.sigma_min())
    .metric("drift", drift))
}

/// A closed-loop experiment with its traces.
#[derive(Debug, Clone)]
pub struct LoopRun {
    pub params: Parameters,
    pub closed: SimulationTrace,
    pub open: Option<SimulationTrace>,
    pub outcome: Outcome,
}

fn closed_loop_case(
    params: &Parameters,
    v0: &StateField,
    nonlinear: bool,
    with_open_loop: bool,
) -> Result<(SimulationTrace, Option<SimulationTrace>)> {
    let model = assemble_kernel(params)?;
    let transform = assemble_transform(&model, params.n_sim - 1)?;
    let law = FeedbackLaw::new(&model, transform)?;
    let solver = SolverConfig {
        intervals: params.n_sim,
        dt: params.dt,
        nonlinear,
        ..SolverConfig::default()
    };
    let cfg = ClosedLoopConfig::new(solver, params.t_final);
    let closed = simulate_closed_loop(v0, &law, params, &cfg).map_err(|f| f.error)?;
    let open = if with_open_loop {
        Some(simulate_open_loop(v0, params.lambda, &law.transform, &cfg).map_err(|f| f.error)?)
    } else {
        None
    };
    Ok((closed, open))
}

pub fn linear_decay_params() -> Parameters {
    let mut p = Parameters::new(1.0, 10.0, 50.0, 64);
    p.n_sim = 256;
    p.dt = 2e-5;
    p.t_final = 0.05;
    p
}

pub fn linear_decay() -> Result<LoopRun> {
    let params = linear_decay_params();
    let v0 = StateField::mode(params.n_sim, 1, 1e-3);
    let (closed, _) = closed_loop_case(&params, &v0, false, false)?;
    let r = verify_transform_decay(&closed, params.nu);
    let outcome = Outcome::new(
        "ac6",
        r.max_envelope_ratio <= 1.05,
        format!(
            "max ‖w‖/envelope {:.6}, fitted rate {:.3} for ν = {}",
            r.max_envelope_ratio, r.fitted_rate, params.nu
        ),
    )
    .metric("max_envelope_ratio", r.max_envelope_ratio)
    .metric("fitted_rate", r.fitted_rate)
    .metric("c_empirical", r.c_empirical);
    Ok(LoopRun {
        params,
        closed,
        open: None,
        outcome,
    })
}

pub fn headline_params() -> Parameters {
    let mut p = Parameters::with_default_nu(45.0, 400.0, 64);
    p.n_sim = 256;
    p.dt = 2e-5;
    p.t_final = 0.02;
    p
}

/// `amplitude (φ_1 + φ_2)/√2`, with L² norm `amplitude`.
pub fn headline_initial_state(intervals: usize, amplitude: f64) -> StateField {
    let c = amplitude / 2f64.sqrt();
    StateField::from_modes(intervals, &[c, c])
}

pub fn nonlinear_stabilization() -> Result<LoopRun> {
    let params = headline_params();
    let report = params.validated()?;
    let mu1 = eigenvalue(1, params.lambda);
    let v0 = headline_initial_state(params.n_sim, 1e-2);
    let (closed, open) = closed_loop_case(&params, &v0, true, true)?;
    let open = open.expect("open loop requested");
    let r = verify_transform_decay(&closed, params.nu);
    let growth = open.norm_v.last().copied().unwrap_or(0.0) / open.norm_v[0];
    let outcome = Outcome::new(
        "ac7",
        mu1 > 0.0 && r.max_envelope_ratio <= 1.10 && growth >= 2.0,
        format!(
            "μ₁ = {mu1:.4}, ν = {:.4}, max ‖w‖/envelope {:.6}, open-loop growth x{growth:.1}",
            params.nu, r.max_envelope_ratio
        ),
    )
    .metric("mu1", mu1)
    .metric("nu", params.nu)
    .metric("dist_a", report.dist_a)
    .metric("max_envelope_ratio", r.max_envelope_ratio)
    .metric("fitted_rate", r.fitted_rate)
    .metric("c_empirical", r.c_empirical)
    .metric("open_loop_growth", growth);
    Ok(LoopRun {
        params,
        closed,
        open: Some(open),
        outcome,
    })
}

pub fn controllability_dichotomy() -> Result<Outcome> {
    let critical = 5.0 * PI * PI;
    let times: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
    let signal = adjoint_boundary_signal(&null_initial_data(1, 2), critical, &times);
    let sup = signal.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let singular = observability_gram(critical, &[1, 2], 1.0)?;
    let regular = observability_gram(1.0, &[1, 2], 1.0)?;
    Ok(Outcome::new(
        "ac8",
        sup <= 1e-12 && singular.determinant.abs() <= 1e-12 && regular.determinant > 0.0,
        format!(
            "sup|z_x(t,0)| {sup:.1e}, det G at 5π² {:.1e}, det G at λ=1 {:.6e}",
            singular.determinant, regular.determinant
        ),
    )
    .metric("signal_sup", sup)
    .metric("det_critical", singular.determinant)
    .metric("det_regular", regular.determinant))
}

/// Forcing that makes `e^{-t} sin(πx)` an exact solution.
pub fn manufactured_forcing(lambda: f64) -> impl Fn(f64, f64) -> f64 {
    move |t: f64, x: f64| {
        let (s, c) = (PI * x).sin_cos();
        (-t).exp() * s * (PI.powi(4) - lambda * PI * PI - 1.0) + (-2.0 * t).exp() * PI * s * c
    }
}

/// Final state of the manufactured run and its L² distance to `e^{-t} sin(πx)`.
pub fn manufactured_run(
    lambda: f64,
    intervals: usize,
    dt: f64,
    t_final: f64,
    scheme: Scheme,
) -> Result<(StateField, f64)> {
    let forcing = manufactured_forcing(lambda);
    let cfg = SolverConfig {
        scheme,
        intervals,
        dt,
        nonlinear: true,
        picard_sweeps: 20,
        picard_tol: 1e-14,
        ..SolverConfig::default()
    };
    let mut solver = KsSolver::new(cfg, lambda, StateField::from_fn(intervals, |x| (PI * x).sin()))?;
    let steps = (t_final / dt).round() as usize;
    for _ in 0..steps {
        solver.advance(BoundaryData::Homogeneous, Some(&forcing))?;
    }
    let t = solver.time();
    let exact = StateField::from_fn(intervals, |x| (-t).exp() * (PI * x).sin());
    let error = distance(solver.state(), &exact);
    Ok((solver.state().clone(), error))
}

fn distance(a: &StateField, b: &StateField) -> f64 {
    let diff = a.values().iter().zip(b.values()).map(|(x, y)| x - y).collect();
    StateField::from_values(a.intervals(), diff).l2_norm()
}

/// Time-discretization errors of the manufactured run for each `dt`.
///
/// The spatial error of the exact solution is far above the time error at
/// these step sizes, so errors are measured against a run on the same grid
/// with a step 16 times smaller than the finest one.
pub fn manufactured_time_errors(
    lambda: f64,
    intervals: usize,
    dts: &[f64],
    t_final: f64,
    scheme: Scheme,
) -> Result<Vec<f64>> {
    let finest = dts.iter().cloned().fold(f64::INFINITY, f64::min);
    let (reference, _) = manufactured_run(lambda, intervals, finest / 16.0, t_final, scheme)?;
    dts.iter()
        .map(|&dt| Ok(distance(&manufactured_run(lambda, intervals, dt, t_final, scheme)?.0, &reference)))
        .collect()
}

/// Observed order between the last two entries of an error sequence at halving steps.
pub fn observed_order(errors: &[f64]) -> f64 {
    let n = errors.len();
    (errors[n - 2] / errors[n - 1]).log2()
}

/// `|u_xx(0) - h|` after lifting a smooth homogeneous profile on `intervals` cells.
pub fn lifting_error(intervals: usize, h: f64) -> f64 {
    let base = StateField::from_fn(intervals, |x| (PI * x).sin() + 0.3 * (2.0 * PI * x).sin());
    (second_derivative_at_left(&lift_boundary(&base, h)) - h).abs()
}

/// Relative defect of the discrete energy balance for a forced, boundary-driven run.
pub fn energy_defect() -> Result<f64> {
    let cfg = SolverConfig {
        intervals: 128,
        dt: 1e-4,
        nonlinear: true,
        picard_sweeps: 20,
        picard_tol: 1e-14,
        ..SolverConfig::default()
    };
    let u0 = StateField::from_modes(128, &[0.5, 0.0, 0.2]);
    let mut solver = KsSolver::new(cfg, 1.0, u0)?;
    let h = |t: f64| 0.5 * (40.0 * t).sin();
    let f = |t: f64, x: f64| (1.0 + t) * x * (1.0 - x);
    for _ in 0..500 {
        solver.advance(BoundaryData::Prescribed(&h), Some(&f))?;
    }
    let e = solver.energy();
    Ok(e.defect().abs() / e.initial)
}

pub fn solver_verification() -> Result<Outcome> {
    let errors = manufactured_time_errors(1.0, 128, &[2e-2, 1e-2, 5e-3], 1.0, Scheme::CrankNicolson)?;
    let dt_order = observed_order(&errors);
    let (_, exact_error) = manufactured_run(1.0, 128, 5e-3, 1.0, Scheme::CrankNicolson)?;
    let lift = [32, 64, 128].map(|m| lifting_error(m, 2.0));
    let lift_order = (lift[1] / lift[2]).log2();
    let defect = energy_defect()?;
    Ok(Outcome::new(
        "ac9",
        dt_order >= 1.9 && lift_order >= 3.5 && defect <= 1e-6,
        format!(
            "dt order {dt_order:.3}, lifting order {lift_order:.3}, energy defect {defect:.2e}"
        ),
    )
    .metric("dt_order", dt_order)
    .metric("lifting_order", lift_order)
    .metric("energy_defect", defect)
    .metric("time_error_finest", errors[2])
    .metric("exact_error_finest", exact_error))
}
