//! Kernel `k(x, y) = Σ_j ρ_j(x) φ_j(y)` of the stabilizing Fredholm transform.
//!
//! Each row is `ρ_j = φ_j + c_j a_j ψ̌_j` with `a_j = a / φ_j'(0)`. The rows
//! have exact sine coefficients, which give a second evaluation path.

mod coefficients;
mod modes;
pub mod weak;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub use coefficients::{coupling_coefficient, solve_coefficients, CoefficientSolution};
pub use modes::{characteristic_roots, mode_shape, quartic, CharacteristicRoots, ModeShape};
pub use weak::{weak_residual, weak_residual_zero_kernel, Poly, PolyTestFunction, TestFunction};

use crate::error::{KsError, Result};
use crate::quadrature::GaussLegendre;
use crate::spectral::{eigenfunction_derivative, eigenvalue, Parameters};

/// Modes checked by the closed-form row oracle.
pub const CLOSED_FORM_CHECK_MODES: usize = 8;
/// Sine coefficients compared per checked mode.
pub const CLOSED_FORM_CHECK_COEFFS: usize = 16;
pub const CLOSED_FORM_TOLERANCE: f64 = 1e-6;

/// Outcome of comparing quadrature sine coefficients of `-a_j ψ̌_j` with
/// the perturbed-mode definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormValidation {
    pub modes_checked: usize,
    pub coefficients_per_mode: usize,
    pub max_relative_error: f64,
    pub passed: bool,
}

/// Sine coefficient `⟨φ̃_j, φ_m⟩` of the perturbed mode `φ̃_j = φ_j + Σ_{m≠j} a (m/j) a_{mj} φ_m`.
pub fn perturbed_mode_coefficient(j: usize, m: usize, lambda: f64, a: f64) -> f64 {
    if j == m {
        1.0
    } else {
        a * (m as f64 / j as f64) / (-eigenvalue(m, lambda) + eigenvalue(j, lambda) + a)
    }
}

/// Quadrature check of `-a_j ψ̌_j = φ̃_j` on the first modes.
pub fn validate_closed_form(modes: &[ModeShape<f64>], a: f64) -> ClosedFormValidation {
    let quad = GaussLegendre::composite(64, 8);
    let count = modes.len().min(CLOSED_FORM_CHECK_MODES);
    let mut worst: f64 = 0.0;
    for shape in &modes[..count] {
        let j = shape.j;
        let aj = a / (2f64.sqrt() * j as f64 * PI);
        let samples: Vec<f64> = quad.nodes.iter().map(|&x| -aj * shape.value(x)).collect();
        for m in 1..=CLOSED_FORM_CHECK_COEFFS {
            let q: f64 = quad
                .nodes
                .iter()
                .zip(&quad.weights)
                .zip(&samples)
                .map(|((&x, &w), &s)| w * s * eigenfunction_derivative(m, x, 0))
                .sum();
            let exact = perturbed_mode_coefficient(j, m, shape.lambda, a);
            worst = worst.max((q - exact).abs() / exact.abs());
        }
    }
    ClosedFormValidation {
        modes_checked: count,
        coefficients_per_mode: CLOSED_FORM_CHECK_COEFFS,
        max_relative_error: worst,
        passed: worst <= CLOSED_FORM_TOLERANCE,
    }
}

/// Version tag of the kernel JSON document.
pub const KERNEL_FORMAT_VERSION: u32 = 1;

/// Assembled truncated kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelModel {
    pub params: Parameters,
    pub modes: Vec<ModeShape<f64>>,
    pub c: Vec<f64>,
    pub coefficient_residual: f64,
    pub closed_form: ClosedFormValidation,
}

/// Builds roots, mode shapes and coefficients for `j ≤ n_kernel`.
pub fn assemble_kernel(params: &Parameters) -> Result<KernelModel> {
    params.validated()?;
    let n = params.n_kernel;
    let modes = (1..=n)
        .map(|j| mode_shape(j, params.lambda, params.a, params.eps_critical))
        .collect::<Result<Vec<_>>>()?;
    let sol = solve_coefficients(params.lambda, params.a, n)?;
    let closed_form = validate_closed_form(&modes, params.a);
    let model = KernelModel {
        params: params.clone(),
        modes,
        c: sol.c,
        coefficient_residual: sol.residual,
        closed_form,
    };
    model.check_real_rows()?;
    Ok(model)
}

#[derive(Serialize, Deserialize)]
struct KernelDocument<M> {
    format: String,
    version: u32,
    model: M,
}

impl KernelModel {
    /// Versioned JSON; floats use shortest round-trip digits, so reading back is bit-exact.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&KernelDocument {
            format: "ks-kernel".to_string(),
            version: KERNEL_FORMAT_VERSION,
            model: self,
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: KernelDocument<KernelModel> = serde_json::from_str(text)?;
        if doc.format != "ks-kernel" || doc.version != KERNEL_FORMAT_VERSION {
            return Err(KsError::Schema(format!(
                "unsupported kernel document {} v{}",
                doc.format, doc.version
            )));
        }
        let m = doc.model;
        if m.modes.len() != m.c.len() || m.c.len() != m.params.n_kernel {
            return Err(KsError::Schema(format!(
                "kernel document holds {} modes and {} coefficients for N = {}",
                m.modes.len(),
                m.c.len(),
                m.params.n_kernel
            )));
        }
        if m.modes.iter().enumerate().any(|(i, s)| s.j != i + 1) {
            return Err(KsError::Schema("mode indices out of order".into()));
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    /// `a_j = a / φ_j'(0)`.
    pub fn a_j(&self, j: usize) -> f64 {
        self.params.a / (2f64.sqrt() * j as f64 * PI)
    }

    /// `c_j a_j`, the weight of `ψ̌_j` in row j.
    pub fn row_weight(&self, j: usize) -> f64 {
        self.c[j - 1] * self.a_j(j)
    }

    /// n-th derivative of row `ρ_j` at x through the closed form.
    pub fn row(&self, j: usize, x: f64, order: u32) -> f64 {
        eigenfunction_derivative(j, x, order)
            + self.row_weight(j) * self.modes[j - 1].derivative(x, order)
    }

    /// Exact sine coefficient `⟨ρ_j, φ_m⟩`.
    pub fn row_sine_coefficient(&self, j: usize, m: usize) -> f64 {
        let (lambda, a) = (self.params.lambda, self.params.a);
        let cj = self.c[j - 1];
        if m == j {
            1.0 - cj
        } else {
            -cj * perturbed_mode_coefficient(j, m, lambda, a)
        }
    }

    /// Row `ρ_j` from its sine series truncated at `n_kernel` terms.
    pub fn row_series(&self, j: usize, x: f64, order: u32) -> f64 {
        self.row_series_terms(j, x, order, self.n())
    }

    /// Row `ρ_j` from its first `terms` sine coefficients.
    pub fn row_series_terms(&self, j: usize, x: f64, order: u32, terms: usize) -> f64 {
        (1..=terms)
            .map(|m| self.row_sine_coefficient(j, m) * eigenfunction_derivative(m, x, order))
            .sum()
    }

    /// `∂_x^p ∂_y^q k(x, y)` through the closed-form rows.
    pub fn derivative(&self, x: f64, y: f64, p: u32, q: u32) -> f64 {
        (1..=self.n())
            .map(|j| self.row(j, x, p) * eigenfunction_derivative(j, y, q))
            .sum()
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.derivative(x, y, 0, 0)
    }

    /// `k(x, y)` through the truncated double sine series.
    pub fn eval_series(&self, x: f64, y: f64) -> f64 {
        self.eval_series_terms(x, y, self.n())
    }

    /// `k(x, y)` with each row expanded to `terms` sine modes.
    pub fn eval_series_terms(&self, x: f64, y: f64, terms: usize) -> f64 {
        (1..=self.n())
            .map(|j| self.row_series_terms(j, x, 0, terms) * eigenfunction_derivative(j, y, 0))
            .sum()
    }

    fn check_real_rows(&self) -> Result<()> {
        for shape in &self.modes {
            let w = self.row_weight(shape.j);
            let mut worst_re: f64 = 0.0;
            let mut worst_im: f64 = 0.0;
            for i in 0..=16 {
                let z = shape.derivative_complex(i as f64 / 16.0, 0) * w;
                worst_re = worst_re.max(z.re.abs());
                worst_im = worst_im.max(z.im.abs());
            }
            if worst_im > 1e-10 * worst_re + 1e-12 {
                return Err(KsError::NumericalOverflow(format!(
                    "row {} keeps imaginary part {worst_im:e}",
                    shape.j
                )));
            }
        }
        Ok(())
    }

    /// `g(y) = k_xx(0, y)` from the closed-form rows.
    pub fn feedback_gain(&self) -> Result<FeedbackGain> {
        if !self.closed_form.passed {
            return Err(KsError::ClosedFormUnavailable(format!(
                "closed-form check error {:e}",
                self.closed_form.max_relative_error
            )));
        }
        // φ_j''(0) = 0, so only the mode shape contributes.
        let coeffs = (1..=self.n())
            .map(|j| self.row_weight(j) * self.modes[j - 1].derivative(0.0, 2))
            .collect();
        Ok(FeedbackGain { coeffs })
    }

    pub fn boundary_trace_check(&self) -> TraceReport {
        let n = self.n();
        let mut proj = 0.0;
        for m in 1..=n {
            let s: f64 = (1..=n)
                .map(|j| self.row_sine_coefficient(j, m) * eigenfunction_derivative(j, 0.0, 1))
                .sum();
            proj += s * s;
        }
        let samples: Vec<f64> = (0..=50).map(|i| i as f64 / 50.0).collect();
        let mut kxx1: f64 = 0.0;
        let mut kyy0: f64 = 0.0;
        let mut kyy1: f64 = 0.0;
        let mut edges: f64 = 0.0;
        let row_kxx1: Vec<f64> = (1..=n).map(|j| self.row(j, 1.0, 2)).collect();
        let max_row_kxx1 = row_kxx1.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for &s in &samples {
            kxx1 = kxx1.max(self.derivative(1.0, s, 2, 0).abs());
            kyy0 = kyy0.max(self.derivative(s, 0.0, 0, 2).abs());
            kyy1 = kyy1.max(self.derivative(s, 1.0, 0, 2).abs());
            for (x, y) in [(s, 0.0), (s, 1.0), (0.0, s), (1.0, s)] {
                edges = edges.max(self.eval(x, y).abs());
            }
        }
        TraceReport {
            constraint_projection_norm: proj.sqrt(),
            coefficient_residual: self.coefficient_residual,
            max_row_kxx_at_1: max_row_kxx1,
            max_kxx_at_1: kxx1,
            max_kyy_at_0: kyy0,
            max_kyy_at_1: kyy1,
            max_on_edges: edges,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceReport {
    /// L² norm of the projection of `k_y(·, 0)` onto modes `m ≤ N`.
    pub constraint_projection_norm: f64,
    pub coefficient_residual: f64,
    pub max_row_kxx_at_1: f64,
    pub max_kxx_at_1: f64,
    pub max_kyy_at_0: f64,
    pub max_kyy_at_1: f64,
    pub max_on_edges: f64,
}

/// Feedback gain `g(y) = Σ_j coeffs[j-1] φ_j(y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackGain {
    /// Coefficients on the orthonormal modes `φ_j = √2 sin(jπy)`.
    pub coeffs: Vec<f64>,
}

impl FeedbackGain {
    pub fn eval(&self, y: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, g)| g * eigenfunction_derivative(i + 1, y, 0))
            .sum()
    }

    /// Coefficients on `sin(jπy)`, i.e. `c_j a / (jπ)`.
    pub fn sin_coefficients(&self) -> Vec<f64> {
        self.coeffs.iter().map(|g| g * 2f64.sqrt()).collect()
    }

    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|g| g * g).sum::<f64>().sqrt()
    }
}
