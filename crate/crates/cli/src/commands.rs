//! One function per experiment kind. Each writes its artifacts and a manifest.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use ks_core::closed_loop::{
    simulate_closed_loop, simulate_open_loop, ClosedLoopConfig, FeedbackLaw, RunSummary,
    SimulationTrace,
};
use ks_core::controllability::{
    adjoint_boundary_signal, b_function, eigenproblem_overdetermined_check, null_initial_data,
    observability_gram,
};
use ks_core::experiments;
use ks_core::kernel::weak::{weak_residual, weak_residual_zero_kernel, PolyTestFunction};
use ks_core::kernel::{assemble_kernel, KernelModel};
use ks_core::spectral::{
    critical_lambda_window, dist_to_critical_lambda, eigenvalue, validate, Parameters,
};
use ks_core::state::StateField;
use ks_core::transform::{assemble_transform, TransformOperator};
use ks_core::KsError;

use crate::artifacts::Artifacts;
use crate::config::{ExperimentConfig, Initial, Kind};
use crate::plot::{fitted_decay_rate, line_plot, plot_trace, Series};

/// Failure reported as `error[category]: message` with a matching exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub category: String,
    pub message: String,
}

impl CliError {
    pub fn new(category: &str, message: impl Into<String>) -> Self {
        CliError {
            category: category.to_string(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.category.as_str() {
            "parameter_rejection" => 2,
            "numerical_failure" | "criterion_failed" => 3,
            _ => 4,
        }
    }

    /// Single stderr line.
    pub fn line(&self) -> String {
        format!("error[{}]: {}", self.category, self.message.replace('\n', " "))
    }
}

impl From<KsError> for CliError {
    fn from(e: KsError) -> Self {
        CliError::new(e.category(), e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn run(cfg: &ExperimentConfig, kind: Kind, out: &Path) -> CliResult<()> {
    let mut art = Artifacts::create(out)?;
    let recipe = ExperimentConfig {
        kind: Some(kind),
        ..cfg.clone()
    };
    art.write("config.txt", recipe.to_text())?;
    let result = match kind {
        Kind::Validate => run_validate(cfg, &mut art),
        Kind::Kernel => run_kernel(cfg, &mut art),
        Kind::Transform => run_transform(cfg, &mut art),
        Kind::Simulate => run_simulate(cfg, &mut art),
        Kind::Diagnose => run_diagnose(cfg, &mut art),
        Kind::Sweep => run_sweep(cfg, &mut art),
    };
    // The manifest also records partial artifacts of a failed run.
    art.finish(kind.name(), cfg.seed)?;
    result
}

fn run_validate(cfg: &ExperimentConfig, art: &mut Artifacts) -> CliResult<()> {
    let report = validate(&cfg.params);
    art.write_json("validation.json", &report)?;
    for c in &report.checks {
        println!("{:<18} {}  {}", c.name, if c.passed { "ok" } else { "FAILED" }, c.detail);
    }
    if report.all_passed() {
        Ok(())
    } else {
        Err(KsError::InvalidParameters(report.failure_summary()).into())
    }
}

#[derive(Serialize)]
struct KernelReport {
    n_kernel: usize,
    coefficient_residual: f64,
    closed_form: ks_core::kernel::ClosedFormValidation,
    boundary_traces: ks_core::kernel::TraceReport,
    weak_residual: f64,
    weak_residual_scale: f64,
    weak_residual_relative: f64,
    gain_l2_norm: f64,
}

fn build_kernel(params: &Parameters) -> CliResult<KernelModel> {
    Ok(assemble_kernel(params)?)
}

fn run_kernel(cfg: &ExperimentConfig, art: &mut Artifacts) -> CliResult<()> {
    let model = build_kernel(&cfg.params)?;
    art.write("kernel.json", model.to_json()?)?;
    let rho = PolyTestFunction::standard();
    let residual = weak_residual(&model, &rho)?;
    let scale = weak_residual_zero_kernel(cfg.params.a, &rho)?;
    let report = KernelReport {
        n_kernel: model.n(),
        coefficient_residual: model.coefficient_residual,
        closed_form: model.closed_form.clone(),
        boundary_traces: model.boundary_trace_check(),
        weak_residual: residual,
        weak_residual_scale: scale,
        weak_residual_relative: residual / scale,
        gain_l2_norm: model.feedback_gain()?.l2_norm(),
    };
    art.write_json("kernel_report.json", &report)?;
    println!(
        "kernel N = {}: coefficient residual {:.3e}, weak residual {:.3e} ({:.2e} of scale)",
        report.n_kernel, report.coefficient_residual, residual, report.weak_residual_relative
    );
    Ok(())
}

fn basis_size(cfg: &ExperimentConfig) -> usize {
    cfg.transform_m.unwrap_or(cfg.params.n_sim - 1)
}

fn run_transform(cfg: &ExperimentConfig, art: &mut Artifacts) -> CliResult<()> {
    let model = build_kernel(&cfg.params)?;
    let op = assemble_transform(&model, basis_size(cfg))?;
    let mut bin = Vec::new();
    op.write_binary(&mut bin)?;
    art.write("transform.bin", bin)?;
    let radius = op.spectral_radius_estimate(8)?;
    let report = json!({
        "basis_size": op.basis_size(),
        "n_kernel": op.n_kernel(),
        "sigma_min": op.sigma_min(),
        "sigma_max": op.sigma_max(),
        "condition": op.condition(),
        "norm_k": radius.norm,
        "max_abs_eigenvalue": radius.max_abs_eigenvalue,
        "gelfand_8": radius.gelfand,
    });
    art.write_json("transform_report.json", &report)?;
    println!(
        "transform M = {}: σ_min(I-K) {:.6}, cond {:.4}, max|eig K| {:.3e}",
        op.basis_size(),
        op.sigma_min(),
        op.condition(),
        radius.max_abs_eigenvalue
    );
    Ok(())
}

fn initial_state(cfg: &ExperimentConfig) -> StateField {
    let n = cfg.params.n_sim;
    match cfg.initial {
        Initial::Mode1 => StateField::mode(n, 1, cfg.amplitude),
        Initial::TwoMode => experiments::headline_initial_state(n, cfg.amplitude),
        Initial::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut c: Vec<f64> = (1..=8).map(|j| rng.gen_range(-1.0..1.0) / j as f64).collect();
            let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
            c.iter_mut().for_each(|x| *x *= cfg.amplitude / norm);
            StateField::from_modes(n, &c)
        }
    }
}

fn loop_config(cfg: &ExperimentConfig) -> ClosedLoopConfig {
    let mut solver = cfg.solver.clone();
    solver.intervals = cfg.params.n_sim;
    solver.dt = cfg.params.dt;
    let mut lc = ClosedLoopConfig::new(solver, cfg.params.t_final);
    lc.sample_every = cfg.sample_every;
    lc
}

fn build_law(params: &Parameters, m: usize) -> CliResult<FeedbackLaw> {
    let model = build_kernel(params)?;
    let op: TransformOperator = assemble_transform(&model, m)?;
    Ok(FeedbackLaw::new(&model, op)?)
}

fn growth(trace: &SimulationTrace) -> f64 {
    trace.norm_v.last().copied().unwrap_or(f64::NAN) / trace.norm_v[0]
}

fn write_trace(art: &mut Artifacts, stem: &str, trace: &SimulationTrace, nu: f64) -> CliResult<()> {
    art.write(&format!("{stem}.csv"), trace.to_csv())?;
    if !trace.is_empty() {
        art.write(&format!("{stem}.svg"), plot_trace(trace, nu)?)?;
    }
    Ok(())
}

fn run_simulate(cfg: &ExperimentConfig, art: &mut Artifacts) -> CliResult<()> {
    let params = &cfg.params;
    if params.n_sim < 2 {
        return Err(KsError::InvalidParameters("n_sim must be >= 2".into()).into());
    }
    let law = build_law(params, params.n_sim - 1)?;
    let lc = loop_config(cfg);
    let v0 = initial_state(cfg);
    let (trace, failure) = match simulate_closed_loop(&v0, &law, params, &lc) {
        Ok(t) => (t, None),
        Err(f) => (f.trace, Some(f.error)),
    };
    write_trace(art, "trace", &trace, params.nu)?;
    let open = if cfg.open_loop && failure.is_none() {
        let o = simulate_open_loop(&v0, params.lambda, &law.transform, &lc).map_err(|f| f.error)?;
        write_trace(art, "open_trace", &o, params.nu)?;
        Some(o)
    } else {
        None
    };
    let summary = if trace.len() >= 2 {
        Some(RunSummary::new(params, &trace, failure.is_some()))
    } else {
        None
    };
    let doc = json!({
        "summary": summary,
        "mu1": eigenvalue(1, params.lambda),
        "feedback_gain_l2": law.gain.l2_norm(),
        "open_loop_growth": open.as_ref().map(growth),
        "error": failure.as_ref().map(|e| e.to_string()),
    });
    art.write_json("summary.json", &doc)?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    if let Some(s) = &summary {
        println!(
            "simulated to t = {}: fitted rate {:.4} (ν = {}), max ‖w‖/envelope {:.6}",
            params.t_final, s.fitted_rate, params.nu, s.max_envelope_ratio
        );
    }
    Ok(())
}

/// Closest critical pair `(j, k)` with `(j² + k²)π²` nearest to λ.
fn nearest_critical_pair(lambda: f64) -> (usize, usize, f64) {
    let w = critical_lambda_window(lambda);
    let mut best = (1, 2, f64::INFINITY);
    for k in 2..=w {
        for j in 1..k {
            let d = (lambda - ((j * j + k * k) as f64) * PI * PI).abs();
            if d < best.2 {
                best = (j, k, d);
            }
        }
    }
    best
}

fn run_diagnose(cfg: &ExperimentConfig, art: &mut Artifacts) -> CliResult<()> {
    let lambda = cfg.params.lambda;
    let eps = cfg.params.eps_critical;
    let (j0, k0, _) = nearest_critical_pair(lambda);
    let dist = dist_to_critical_lambda(lambda, critical_lambda_window(lambda));
    let critical = dist <= eps;
    // Unobservable data at a critical λ, otherwise the sum of the two leading modes.
    let z0 = if critical {
        null_initial_data(j0, k0)
    } else {
        vec![1.0, 1.0]
    };
    let times: Vec<f64> = (0..=200).map(|i| cfg.gram_horizon * i as f64 / 200.0).collect();
    let signal = adjoint_boundary_signal(&z0, lambda, &times);
    let sup = signal.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    let modes: Vec<usize> = (1..=cfg.gram_modes).collect();
    let gram = observability_gram(lambda, &modes, cfg.gram_horizon)?;
    let mus: Vec<f64> = modes.iter().map(|&j| -eigenvalue(j, lambda)).collect();
    let over = eigenproblem_overdetermined_check(lambda, &mus);
    let profile = match b_function(lambda, eps) {
        Ok(b) => json!({
            "sine_coefficients": b.sine_coefficients(8),
            "closed_form": (1..=8).map(|j| b.exact_coefficient(j)).collect::<Vec<_>>(),
        }),
        Err(e) => json!({ "error": e.to_string() }),
    };
    let doc = json!({
        "lambda": lambda,
        "critical": critical,
        "nearest_critical_pair": [j0, k0],
        "critical_distance": dist,
        "adjoint_initial_modes": z0,
        "adjoint_signal_sup": sup,
        "gram": {
            "modes": gram.modes,
            "horizon": cfg.gram_horizon,
            "log_diagonal": gram.log_diagonal,
            "normalized": gram.normalized.row_iter().map(|r| r.iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>(),
            "min_eigenvalue": gram.min_eigenvalue,
            "determinant": gram.determinant,
        },
        "overdetermined": over,
        "boundary_profile": profile,
    });
    art.write_json("diagnose.json", &doc)?;
    let mut csv = String::from("t,z_x0\n");
    for (t, s) in times.iter().zip(&signal) {
        csv.push_str(&format!("{t:.16e},{s:.16e}\n"));
    }
    art.write("adjoint_trace.csv", csv)?;
    let series = [Series {
        label: "z_x(t, 0)".into(),
        color: "#1f77b4",
        dashed: false,
        points: times.iter().copied().zip(signal.iter().copied()).collect(),
    }];
    art.write(
        "adjoint.svg",
        line_plot("adjoint boundary observation", "t", "z_x(t, 0)", &series, false)?,
    )?;
    println!(
        "λ = {lambda}: {} (distance {dist:.3e} to ({j0},{k0})), sup|z_x(t,0)| {sup:.3e}, Gram det {:.6e}",
        if critical { "critical" } else { "not critical" },
        gram.determinant
    );
    Ok(())
}

#[derive(Serialize)]
struct SweepRow {
    index: usize,
    lambda: f64,
    a: f64,
    nu: f64,
    status: String,
    fitted_rate: Option<f64>,
    max_envelope_ratio: Option<f64>,
    c_empirical: Option<f64>,
    message: Option<String>,
}

fn sweep_instance(cfg: &ExperimentConfig, index: usize, lambda: f64, a: f64) -> SweepRow {
    let mut c = cfg.clone();
    let base = Parameters::with_default_nu(lambda, a, cfg.params.n_kernel);
    c.params.lambda = lambda;
    c.params.a = a;
    if cfg.sweep_lambda.len() > 1 || cfg.sweep_a.len() > 1 {
        c.params.nu = base.nu;
    }
    let mut row = SweepRow {
        index,
        lambda,
        a,
        nu: c.params.nu,
        status: "ok".into(),
        fitted_rate: None,
        max_envelope_ratio: None,
        c_empirical: None,
        message: None,
    };
    let result = build_law(&c.params, c.params.n_sim - 1).and_then(|law| {
        simulate_closed_loop(&initial_state(&c), &law, &c.params, &loop_config(&c))
            .map_err(|f| CliError::from(f.error))
    });
    match result {
        Ok(trace) => {
            let s = RunSummary::new(&c.params, &trace, false);
            row.fitted_rate = Some(s.fitted_rate);
            row.max_envelope_ratio = Some(s.max_envelope_ratio);
            row.c_empirical = Some(s.c_empirical);
        }
        Err(e) => {
            row.status = e.category;
            row.message = Some(e.message);
        }
    }
    row
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

fn run_sweep(cfg: &ExperimentConfig, art: &mut Artifacts) -> CliResult<()> {
    let grid: Vec<(f64, f64)> = cfg
        .sweep_lambda
        .iter()
        .flat_map(|&l| cfg.sweep_a.iter().map(move |&a| (l, a)))
        .collect();
    let rows: Vec<SweepRow> = grid
        .par_iter()
        .enumerate()
        .map(|(i, &(l, a))| sweep_instance(cfg, i, l, a))
        .collect();
    let mut csv = String::from("index,lambda,a,nu,status,fitted_rate,max_envelope_ratio,c_empirical\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{},{},{},{}\n",
            r.index,
            r.lambda,
            r.a,
            r.nu,
            r.status,
            opt(r.fitted_rate),
            opt(r.max_envelope_ratio),
            opt(r.c_empirical)
        ));
    }
    art.write("sweep.csv", csv)?;
    art.write_json("sweep.json", &rows)?;
    let ok = rows.iter().filter(|r| r.status == "ok").count();
    println!("sweep: {ok} of {} instances completed", rows.len());
    Ok(())
}

/// Runs a named acceptance preset, writing its outcome and any traces.
pub fn run_preset(id: &str, out: &Path, seed: u64) -> CliResult<()> {
    let ids: Vec<&str> = if id == "all" {
        experiments::ALL.to_vec()
    } else if experiments::ALL.contains(&id) {
        vec![id]
    } else {
        return Err(CliError::new(
            "parameter_rejection",
            format!("unknown preset `{id}` (expected ac1..ac9 or all)"),
        ));
    };
    let mut art = Artifacts::create(out)?;
    let mut failed = Vec::new();
    let mut error = None;
    for id in &ids {
        let outcome = match *id {
            "ac6" | "ac7" => {
                let run = if *id == "ac6" {
                    experiments::linear_decay()
                } else {
                    experiments::nonlinear_stabilization()
                };
                run.and_then(|r| {
                    art.write(&format!("{id}_trace.csv"), r.closed.to_csv())?;
                    art.write(&format!("{id}_decay.svg"), plot_trace(&r.closed, r.params.nu)?)?;
                    if let Some(o) = &r.open {
                        art.write(&format!("{id}_open_trace.csv"), o.to_csv())?;
                    }
                    Ok(r.outcome)
                })
            }
            _ => experiments::run(id),
        };
        match outcome {
            Ok(o) => {
                println!("{}", o.line());
                art.write_json(&format!("{id}.json"), &o)?;
                if !o.passed {
                    failed.push(id.to_uppercase());
                }
            }
            Err(e) => {
                println!("{} ERROR  {e}", id.to_uppercase());
                error.get_or_insert(e);
            }
        }
    }
    art.finish(&format!("preset {id}"), seed)?;
    if let Some(e) = error {
        return Err(e.into());
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::new("criterion_failed", format!("failed: {}", failed.join(", "))))
    }
}

/// Plots an existing trace CSV; ν defaults to the fitted decay rate of `‖(I-K)v‖`.
pub fn run_plot(trace_path: &Path, nu: Option<f64>, out: &Path, seed: u64) -> CliResult<()> {
    let text = std::fs::read_to_string(trace_path)
        .map_err(|e| CliError::new("io_error", format!("{}: {e}", trace_path.display())))?;
    let trace = SimulationTrace::from_csv(&text)?;
    let nu = nu.unwrap_or_else(|| fitted_decay_rate(&trace));
    let mut art = Artifacts::create(out)?;
    art.write("plot.svg", plot_trace(&trace, nu)?)?;
    art.finish("plot", seed)?;
    Ok(())
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::new("io_error", e.to_string())
    }
}
