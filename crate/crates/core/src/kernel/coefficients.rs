use nalgebra::{DMatrix, DVector};

use crate::error::{KsError, Result};
use crate::spectral::eigenvalue;

/// `a_{jk} = 1 / (-μ_j + μ_k + a)`.
pub fn coupling_coefficient(j: usize, k: usize, lambda: f64, a: f64) -> f64 {
    if j == k {
        return 1.0 / a;
    }
    1.0 / (-eigenvalue(j, lambda) + eigenvalue(k, lambda) + a)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSolution {
    /// `c[j-1] = c_j`.
    pub c: Vec<f64>,
    /// Euclidean norm of `(I + a·offdiag(a_jk))c - 1`.
    pub residual: f64,
}

/// Solves the N×N truncation of `c_j + a Σ_{k≠j} a_{jk} c_k = 1`.
pub fn solve_coefficients(lambda: f64, a: f64, n: usize) -> Result<CoefficientSolution> {
    let mu: Vec<f64> = (1..=n).map(|j| eigenvalue(j, lambda)).collect();
    let m = DMatrix::from_fn(n, n, |r, s| {
        if r == s {
            1.0
        } else {
            a / (-mu[r] + mu[s] + a)
        }
    });
    let rhs = DVector::from_element(n, 1.0);
    let lu = m.clone().lu();
    let c = lu
        .solve(&rhs)
        .ok_or_else(|| KsError::SingularSystem(format!("N = {n}")))?;
    let residual = (&m * &c - &rhs).norm();
    let limit = 1e-10 * (n as f64).sqrt();
    if !residual.is_finite() || residual > limit {
        return Err(KsError::SingularSystem(format!(
            "residual {residual:e} exceeds {limit:e}"
        )));
    }
    Ok(CoefficientSolution {
        c: c.iter().copied().collect(),
        residual,
    })
}
