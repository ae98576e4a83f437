//! Feedback `f(t) = ∫ k_xx(0, y) v(t, y) dy` wired into the solver, with
//! monitoring of `w = (I - K)v`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{KsError, Result};
use crate::kernel::{FeedbackGain, KernelModel};
use crate::solver::{BoundaryData, KsSolver, SolverConfig};
use crate::spectral::{eigenvalue, Parameters};
use crate::state::StateField;
use crate::transform::TransformOperator;

#[derive(Debug, Clone)]
pub struct FeedbackLaw {
    pub gain: FeedbackGain,
    pub transform: TransformOperator,
}

impl FeedbackLaw {
    pub fn new(model: &KernelModel, transform: TransformOperator) -> Result<Self> {
        Ok(FeedbackLaw {
            gain: model.feedback_gain()?,
            transform,
        })
    }

    /// `Σ_j g_j v̂_j`.
    pub fn feedback_eval(&self, v: &StateField) -> Result<f64> {
        let modes = v.modes();
        if modes.len() < self.gain.coeffs.len() {
            return Err(KsError::DimensionMismatch {
                expected: self.gain.coeffs.len(),
                got: modes.len(),
            });
        }
        Ok(self.gain.coeffs.iter().zip(&modes).map(|(g, c)| g * c).sum())
    }

    /// Grid quadrature `dx Σ g(x_i) v_i`.
    pub fn feedback_eval_quadrature(&self, v: &StateField) -> f64 {
        self.grid_weights(v.intervals())
            .iter()
            .zip(v.values())
            .map(|(w, x)| w * x)
            .sum()
    }

    /// Weights `dx g(x_i)` so that the feedback is a dot product with grid values.
    pub fn grid_weights(&self, intervals: usize) -> Vec<f64> {
        let dx = 1.0 / intervals as f64;
        (1..intervals)
            .map(|i| dx * self.gain.eval(i as f64 * dx))
            .collect()
    }

    /// `‖(I - K)v‖`.
    pub fn transformed_norm(&self, v: &StateField) -> Result<f64> {
        let w = self.transform.apply_transform(&v.modes())?;
        Ok(w.iter().map(|c| c * c).sum::<f64>().sqrt())
    }
}

/// `Q(v) = ‖v''‖² - λ‖v'‖² + a‖v‖² = Σ_j (a - μ_j) v̂_j²`.
pub fn lyapunov_q(v: &StateField, params: &Parameters) -> f64 {
    v.modes()
        .iter()
        .enumerate()
        .map(|(i, c)| (params.a - eigenvalue(i + 1, params.lambda)) * c * c)
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedLoopConfig {
    pub solver: SolverConfig,
    pub t_final: f64,
    pub sample_every: usize,
    pub max_retries: usize,
}

impl ClosedLoopConfig {
    pub fn new(solver: SolverConfig, t_final: f64) -> Self {
        ClosedLoopConfig {
            solver,
            t_final,
            sample_every: 10,
            max_retries: 4,
        }
    }

    pub fn steps(&self) -> usize {
        (self.t_final / self.solver.dt).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeFit {
    pub rate: f64,
    pub intercept: f64,
    pub max_relative_excess: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimulationTrace {
    pub times: Vec<f64>,
    pub norm_v: Vec<f64>,
    pub norm_w: Vec<f64>,
    pub feedback: Vec<f64>,
    pub envelope_fit: Option<EnvelopeFit>,
}

pub const TRACE_HEADER: &str = "t,norm_v,norm_w,feedback";

impl SimulationTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn push(&mut self, t: f64, nv: f64, nw: f64, f: f64) {
        self.times.push(t);
        self.norm_v.push(nv);
        self.norm_w.push(nw);
        self.feedback.push(f);
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(TRACE_HEADER);
        s.push('\n');
        for i in 0..self.len() {
            let _ = writeln!(
                s,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                self.times[i], self.norm_v[i], self.norm_w[i], self.feedback[i]
            );
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next() {
            Some(h) if h.trim() == TRACE_HEADER => {}
            Some(h) => return Err(KsError::Schema(format!("unexpected header {h:?}"))),
            None => return Err(KsError::Schema("empty trace".into())),
        }
        let mut trace = SimulationTrace::default();
        for (n, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(KsError::Schema(format!("row {} has {} fields", n + 1, fields.len())));
            }
            let mut v = [0.0; 4];
            for (slot, f) in v.iter_mut().zip(&fields) {
                *slot = f
                    .trim()
                    .parse()
                    .map_err(|_| KsError::Schema(format!("row {}: bad number {f:?}", n + 1)))?;
            }
            trace.push(v[0], v[1], v[2], v[3]);
        }
        if trace.is_empty() {
            return Err(KsError::Schema("trace has no rows".into()));
        }
        Ok(trace)
    }
}

/// Failure during a run, with the samples recorded before it.
#[derive(Debug, Clone, Error)]
#[error("{error}")]
pub struct SimulationFailure {
    pub error: KsError,
    pub trace: SimulationTrace,
}

fn run(
    v0: &StateField,
    lambda: f64,
    law: Option<&FeedbackLaw>,
    transform: &TransformOperator,
    cfg: &ClosedLoopConfig,
) -> std::result::Result<SimulationTrace, SimulationFailure> {
    let fail = |error: KsError, trace: SimulationTrace| SimulationFailure { error, trace };
    let mut trace = SimulationTrace::default();
    if transform.basis_size() != v0.intervals() - 1 {
        return Err(fail(
            KsError::DimensionMismatch {
                expected: v0.intervals() - 1,
                got: transform.basis_size(),
            },
            trace,
        ));
    }
    let weights = law.map(|l| l.grid_weights(v0.intervals()));
    let functional = |u: &[f64]| -> f64 {
        weights
            .as_ref()
            .map(|w| w.iter().zip(u).map(|(a, b)| a * b).sum())
            .unwrap_or(0.0)
    };
    let boundary = match law {
        Some(_) => BoundaryData::Feedback(&functional),
        None => BoundaryData::Homogeneous,
    };
    let mut solver =
        KsSolver::new(cfg.solver.clone(), lambda, v0.clone()).map_err(|e| fail(e, SimulationTrace::default()))?;
    let record = |s: &KsSolver, trace: &mut SimulationTrace| -> Result<()> {
        let st = s.state();
        let w = transform.apply_transform(&st.modes())?;
        let nw = w.iter().map(|c| c * c).sum::<f64>().sqrt();
        trace.push(s.time(), st.l2_norm(), nw, functional(st.values()));
        Ok(())
    };
    record(&solver, &mut trace).map_err(|e| fail(e, SimulationTrace::default()))?;
    let steps = cfg.steps();
    for k in 1..=steps {
        if let Err(e) = solver.advance(boundary, None) {
            return Err(fail(e, trace));
        }
        if k % cfg.sample_every.max(1) == 0 || k == steps {
            if let Err(e) = record(&solver, &mut trace) {
                return Err(fail(e, trace));
            }
        }
    }
    Ok(trace)
}

/// Runs the feedback loop from `v0` until `cfg.t_final`.
pub fn simulate_closed_loop(
    v0: &StateField,
    law: &FeedbackLaw,
    params: &Parameters,
    cfg: &ClosedLoopConfig,
) -> std::result::Result<SimulationTrace, SimulationFailure> {
    let mut trace = run(v0, params.lambda, Some(law), &law.transform, cfg)?;
    let report = verify_transform_decay(&trace, params.nu);
    trace.envelope_fit = Some(EnvelopeFit {
        rate: report.fitted_rate,
        intercept: report.fitted_intercept,
        max_relative_excess: report.max_envelope_ratio - 1.0,
    });
    Ok(trace)
}

/// Same run with the boundary value held at zero.
pub fn simulate_open_loop(
    v0: &StateField,
    lambda: f64,
    transform: &TransformOperator,
    cfg: &ClosedLoopConfig,
) -> std::result::Result<SimulationTrace, SimulationFailure> {
    run(v0, lambda, None, transform, cfg)
}

/// Closed loop with the initial amplitude halved after each divergence.
/// Returns the trace and the scale finally applied to `v0`.
pub fn simulate_with_retry(
    v0: &StateField,
    law: &FeedbackLaw,
    params: &Parameters,
    cfg: &ClosedLoopConfig,
) -> std::result::Result<(SimulationTrace, f64), SimulationFailure> {
    let mut scale = 1.0;
    let mut attempt = 0;
    loop {
        let start = StateField::from_values(
            v0.intervals(),
            v0.values().iter().map(|v| v * scale).collect(),
        );
        match simulate_closed_loop(&start, law, params, cfg) {
            Ok(t) => return Ok((t, scale)),
            Err(f) if matches!(f.error, KsError::DivergedStep { .. }) && attempt < cfg.max_retries => {
                attempt += 1;
                scale *= 0.5;
            }
            Err(f) => return Err(f),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    /// `max_t ‖w(t)‖ / (e^{-νt} ‖w(0)‖)`.
    pub max_envelope_ratio: f64,
    /// Least-squares slope of `-log ‖w‖` against t.
    pub fitted_rate: f64,
    pub fitted_intercept: f64,
    /// `max_t ‖v(t)‖ / (e^{-νt} ‖v(0)‖)`.
    pub c_empirical: f64,
}

pub fn verify_transform_decay(trace: &SimulationTrace, nu: f64) -> DecayReport {
    let ratio = |norms: &[f64]| -> f64 {
        let n0 = norms.first().copied().unwrap_or(0.0);
        if n0 == 0.0 {
            return if norms.iter().all(|v| *v == 0.0) { 1.0 } else { f64::INFINITY };
        }
        trace
            .times
            .iter()
            .zip(norms)
            .map(|(t, n)| n / ((-nu * t).exp() * n0))
            .fold(0.0, f64::max)
    };
    let pts: Vec<(f64, f64)> = trace
        .times
        .iter()
        .zip(&trace.norm_w)
        .filter(|(_, w)| **w > 0.0)
        .map(|(t, w)| (*t, w.ln()))
        .collect();
    let (slope, intercept) = linear_fit(&pts);
    DecayReport {
        max_envelope_ratio: ratio(&trace.norm_w),
        fitted_rate: -slope,
        fitted_intercept: intercept,
        c_empirical: ratio(&trace.norm_v),
    }
}

/// Largest `d/dt log ‖w‖² + 2ν` between consecutive samples.
pub fn max_dissipation_excess(trace: &SimulationTrace, nu: f64) -> f64 {
    trace
        .times
        .windows(2)
        .zip(trace.norm_w.windows(2))
        .filter(|(_, w)| w[0] > 0.0 && w[1] > 0.0)
        .map(|(t, w)| 2.0 * (w[1] / w[0]).ln() / (t[1] - t[0]) + 2.0 * nu)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Ordinary least squares `y = slope·x + intercept`.
pub fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return (0.0, pts.first().map(|p| p.1).unwrap_or(0.0));
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub params: Parameters,
    pub fitted_rate: f64,
    pub max_envelope_ratio: f64,
    #[serde(rename = "C_empirical")]
    pub c_empirical: f64,
    pub diverged: bool,
}

impl RunSummary {
    pub fn new(params: &Parameters, trace: &SimulationTrace, diverged: bool) -> Self {
        let r = verify_transform_decay(trace, params.nu);
        RunSummary {
            params: params.clone(),
            fitted_rate: r.fitted_rate,
            max_envelope_ratio: r.max_envelope_ratio,
            c_empirical: r.c_empirical,
            diverged,
        }
    }
}
