//! Approximate-controllability diagnostics: adjoint boundary observations,
//! Gram matrices of exponentials, the boundary profile `b`, and the
//! overdetermined eigenproblem.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{KsError, Result};
use crate::quadrature::GaussLegendre;
use crate::spectral::{dist_to_critical_lambda, critical_lambda_window, eigenvalue};

/// `B_j = φ_j'(0) = √2 jπ`, written so that doubling j doubles B_j exactly.
fn observation_weight(j: usize) -> f64 {
    j as f64 * (SQRT_2 * PI)
}

/// Adjoint initial data `sin(j0 πx) - (j0/k0) sin(k0 πx)` as mode coefficients.
pub fn null_initial_data(j0: usize, k0: usize) -> Vec<f64> {
    let mut z = vec![0.0; j0.max(k0)];
    z[j0 - 1] += 1.0 / SQRT_2;
    z[k0 - 1] -= (j0 as f64 / k0 as f64) / SQRT_2;
    z
}

/// `z_x(t, 0) = Σ_j z0_j e^{μ_j t} √2 jπ`.
///
/// Modes whose rates agree to 1e-12 relative are merged before the
/// exponential is applied, so exact cancellations survive large `μ t`.
pub fn adjoint_boundary_signal(z0: &[f64], lambda: f64, times: &[f64]) -> Vec<f64> {
    // (rate, coefficient, sum of |terms|)
    let mut groups: Vec<(f64, f64, f64)> = Vec::new();
    for (i, &c) in z0.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let j = i + 1;
        let mu = eigenvalue(j, lambda);
        let term = c * observation_weight(j);
        match groups
            .iter_mut()
            .find(|(m, _, _)| (m - mu).abs() <= 1e-12 * m.abs().max(mu.abs()).max(1.0))
        {
            Some(g) => {
                g.1 += term;
                g.2 += term.abs();
            }
            None => groups.push((mu, term, term.abs())),
        }
    }
    // Roundoff left by a cancelling group would be amplified by e^{μt}.
    for g in groups.iter_mut() {
        if g.1.abs() <= 8.0 * f64::EPSILON * g.2 {
            g.1 = 0.0;
        }
    }
    times
        .iter()
        .map(|&t| {
            groups
                .iter()
                .filter(|(_, c, _)| *c != 0.0)
                .map(|(m, c, _)| c * (m * t).exp())
                .sum()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjointTrace {
    pub times: Vec<f64>,
    pub boundary_derivative: Vec<f64>,
    pub initial_modes: Vec<f64>,
}

impl AdjointTrace {
    pub fn new(z0: &[f64], lambda: f64, times: Vec<f64>) -> Self {
        AdjointTrace {
            boundary_derivative: adjoint_boundary_signal(z0, lambda, &times),
            times,
            initial_modes: z0.to_vec(),
        }
    }
}

/// `ln ∫_0^T e^{s t} dt`, stable for large `|s T|`.
fn log_exp_integral(s: f64, t: f64) -> f64 {
    if s == 0.0 {
        t.ln()
    } else if s > 0.0 {
        s * t + (-(-s * t).exp_m1()).ln() - s.ln()
    } else {
        (-(s * t).exp_m1()).ln() - (-s).ln()
    }
}

/// Raw entry `∫_0^T B_j B_k e^{(μ_j+μ_k)t} dt` (may overflow to infinity).
pub fn gram_entry(j: usize, k: usize, lambda: f64, t: f64) -> f64 {
    let s = eigenvalue(j, lambda) + eigenvalue(k, lambda);
    let bb = observation_weight(j) * observation_weight(k);
    if s == 0.0 {
        bb * t
    } else {
        bb * (s * t).exp_m1() / s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GramReport {
    pub modes: Vec<usize>,
    /// Natural logarithm of the diagonal entries.
    pub log_diagonal: Vec<f64>,
    /// `G_jk / sqrt(G_jj G_kk)`.
    pub normalized: DMatrix<f64>,
    pub min_eigenvalue: f64,
    pub determinant: f64,
}

/// Unit-diagonal Gram matrix of the observations `B_j e^{μ_j t}` on [0, T].
pub fn observability_gram(lambda: f64, modes: &[usize], t: f64) -> Result<GramReport> {
    if modes.is_empty() || modes.len() > 12 {
        return Err(KsError::InvalidParameters(format!(
            "Gram test needs 1..=12 modes, got {}",
            modes.len()
        )));
    }
    let log_entry = |j: usize, k: usize| {
        let s = eigenvalue(j, lambda) + eigenvalue(k, lambda);
        observation_weight(j).ln() + observation_weight(k).ln() + log_exp_integral(s, t)
    };
    let log_diagonal: Vec<f64> = modes.iter().map(|&j| log_entry(j, j)).collect();
    let n = modes.len();
    let normalized = DMatrix::from_fn(n, n, |r, c| {
        if r == c {
            1.0
        } else {
            (log_entry(modes[r], modes[c]) - 0.5 * (log_diagonal[r] + log_diagonal[c])).exp()
        }
    });
    let eig = SymmetricEigen::new(normalized.clone());
    let min_eigenvalue = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let determinant = if n == 2 {
        1.0 - normalized[(0, 1)] * normalized[(1, 0)]
    } else {
        normalized.determinant()
    };
    Ok(GramReport {
        modes: modes.to_vec(),
        log_diagonal,
        normalized,
        min_eigenvalue,
        determinant,
    })
}

/// Smallest eigenvalue of the normalized Gram matrix on modes `1..=n_modes`.
pub fn observability_gram_min_eig(lambda: f64, n_modes: usize, t: f64) -> Result<f64> {
    let modes: Vec<usize> = (1..=n_modes).collect();
    Ok(observability_gram(lambda, &modes, t)?.min_eigenvalue)
}

/// `b(x) = (1 - x - cos(√λ x) + cot(√λ) sin(√λ x)) / λ`, solving
/// `b'''' + λb'' = 0`, `b(0) = b(1) = 0`, `b''(0) = 1`, `b''(1) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryProfile {
    pub lambda: f64,
    cot: f64,
}

pub fn b_function(lambda: f64, eps: f64) -> Result<BoundaryProfile> {
    if !(lambda > 0.0) {
        return Err(KsError::InvalidParameters("profile needs lambda > 0".into()));
    }
    let s = lambda.sqrt();
    if s.sin().abs() <= eps {
        return Err(KsError::DegenerateBoundaryProfile(s.sin().abs()));
    }
    Ok(BoundaryProfile {
        lambda,
        cot: s.cos() / s.sin(),
    })
}

impl BoundaryProfile {
    pub fn derivative(&self, x: f64, n: u32) -> f64 {
        let s = self.lambda.sqrt();
        let phase = n as f64 * PI / 2.0;
        let trig = s.powi(n as i32) * (-(s * x + phase).cos() + self.cot * (s * x + phase).sin());
        let poly = match n {
            0 => 1.0 - x,
            1 => -1.0,
            _ => 0.0,
        };
        (poly + trig) / self.lambda
    }

    pub fn value(&self, x: f64) -> f64 {
        self.derivative(x, 0)
    }

    /// `⟨b, φ_j⟩` for `j = 1..=count` by Gauss–Legendre quadrature.
    pub fn sine_coefficients(&self, count: usize) -> Vec<f64> {
        let quad = GaussLegendre::composite(32, 16);
        (1..=count)
            .map(|j| quad.integrate(|x| self.value(x) * SQRT_2 * (j as f64 * PI * x).sin()))
            .collect()
    }

    /// Closed form `⟨b, φ_j⟩ = √2 jπ / μ_j` from two integrations by parts.
    pub fn exact_coefficient(&self, j: usize) -> f64 {
        observation_weight(j) / eigenvalue(j, self.lambda)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverdeterminedPoint {
    pub mu: f64,
    pub singular_values: Vec<f64>,
    pub smallest_singular_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverdeterminedReport {
    pub lambda: f64,
    /// Distance from λ to the critical set.
    pub critical_distance: f64,
    pub points: Vec<OverdeterminedPoint>,
}

/// Conditions `φ(0) = φ'(0) = φ''(0) = φ(1) = φ''(1) = 0` on solutions of
/// `φ'''' + λφ'' = μφ`, as a 5×4 matrix on the initial data `(φ, φ', φ'', φ''')(0)`.
pub fn overdetermined_matrix(lambda: f64, mu: f64) -> DMatrix<f64> {
    let mut c = DMatrix::<f64>::zeros(4, 4);
    c[(0, 1)] = 1.0;
    c[(1, 2)] = 1.0;
    c[(2, 3)] = 1.0;
    c[(3, 0)] = mu;
    c[(3, 2)] = -lambda;
    let e = c.exp();
    let mut m = DMatrix::<f64>::zeros(5, 4);
    m[(0, 0)] = 1.0;
    m[(1, 1)] = 1.0;
    m[(2, 2)] = 1.0;
    for k in 0..4 {
        m[(3, k)] = e[(0, k)];
        m[(4, k)] = e[(2, k)];
    }
    m
}

pub fn eigenproblem_overdetermined_check(lambda: f64, mu_grid: &[f64]) -> OverdeterminedReport {
    let points = mu_grid
        .iter()
        .map(|&mu| {
            let mut sv: Vec<f64> = overdetermined_matrix(lambda, mu)
                .singular_values()
                .iter()
                .copied()
                .collect();
            sv.sort_by(|a, b| b.total_cmp(a));
            OverdeterminedPoint {
                mu,
                smallest_singular_value: *sv.last().unwrap(),
                singular_values: sv,
            }
        })
        .collect();
    OverdeterminedReport {
        lambda,
        critical_distance: dist_to_critical_lambda(lambda, critical_lambda_window(lambda)),
        points,
    }
}
