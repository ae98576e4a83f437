//! Eigenstructure of `A = -d⁴/dx⁴ - λ d²/dx²` on (0,1) with `v = v'' = 0`
//! at both ends, and the admissibility rules for (λ, a, ν).

use serde::{Deserialize, Serialize};

use crate::error::{KsError, Result};
use crate::scalar::Real;

/// Positive mode number (j ≥ 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct ModeIndex(usize);

impl ModeIndex {
    pub fn new(j: usize) -> Result<Self> {
        if j == 0 {
            return Err(KsError::InvalidParameters("mode index must be >= 1".into()));
        }
        Ok(ModeIndex(j))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

impl TryFrom<usize> for ModeIndex {
    type Error = KsError;
    fn try_from(j: usize) -> Result<Self> {
        ModeIndex::new(j)
    }
}

impl From<ModeIndex> for usize {
    fn from(j: ModeIndex) -> usize {
        j.0
    }
}

/// `μ_j = -j⁴π⁴ + λ j²π²`.
pub fn eigenvalue<T: Real>(j: usize, lambda: T) -> T {
    let k = T::of_usize(j) * T::PI();
    let k2 = k * k;
    -k2 * k2 + lambda * k2
}

/// `φ_j(x) = √2 sin(jπx)`.
pub fn eigenfunction_eval<T: Real>(j: usize, x: T) -> T {
    T::SQRT_2() * (T::of_usize(j) * T::PI() * x).sin()
}

/// n-th derivative of `φ_j` at `x`.
pub fn eigenfunction_derivative<T: Real>(j: usize, x: T, order: u32) -> T {
    let k = T::of_usize(j) * T::PI();
    let s = (k * x).sin();
    let c = (k * x).cos();
    let base = match order % 4 {
        0 => s,
        1 => c,
        2 => -s,
        _ => -c,
    };
    T::SQRT_2() * k.powi(order as i32) * base
}

/// Minimum of `|λ - (j²+k²)π²|` over `1 ≤ j < k ≤ j_max`.
pub fn dist_to_critical_lambda(lambda: f64, j_max: usize) -> f64 {
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    let mut best = f64::INFINITY;
    for k in 2..=j_max.max(2) {
        for j in 1..k {
            let e = ((j * j + k * k) as f64) * pi2;
            best = best.min((lambda - e).abs());
        }
    }
    best
}

/// Search window for the critical set that is exhaustive for `lambda`.
///
/// With `k_max² ≥ λ/π² - 1` the element `(1 + k_max²)π²` lies at or above λ,
/// and every pair with `k > k_max` is larger still, hence farther away.
pub fn critical_lambda_window(lambda: f64) -> usize {
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    let need = (lambda / pi2 - 1.0).max(0.0).sqrt().ceil() as usize;
    need.max(2) + 1
}

/// Minimum of `|a - (μ_k - μ_j)|` over `1 ≤ j, k ≤ j_max`.
pub fn dist_to_critical_a(a: f64, lambda: f64, j_max: usize) -> f64 {
    let mu: Vec<f64> = (1..=j_max.max(1)).map(|j| eigenvalue(j, lambda)).collect();
    let mut best = f64::INFINITY;
    for mk in &mu {
        for mj in &mu {
            best = best.min((a - (mk - mj)).abs());
        }
    }
    best
}

/// Search window for the forbidden set that covers every element with
/// magnitude up to `|a| + 1`.
///
/// `μ_j` is unimodal in j (concave in j²). Past the peak, every index `i < m`
/// has `μ_i ≥ min(μ_1, μ_{m-1})`, so once `min(μ_1, μ_{m-1}) - μ_m > |a| + 1`
/// all differences involving `m` or anything beyond it exceed the bound.
pub fn forbidden_a_window(a: f64, lambda: f64) -> usize {
    let (_, peak) = max_mu(lambda);
    let mu1 = eigenvalue(1, lambda);
    let mut m = (peak + 1).max(2);
    loop {
        let gap = mu1.min(eigenvalue(m - 1, lambda)) - eigenvalue(m, lambda);
        if gap > a.abs() + 1.0 {
            return m;
        }
        m += 1;
    }
}

/// `(max_j μ_j, argmax j)`. Smallest argmax on ties.
pub fn max_mu(lambda: f64) -> (f64, usize) {
    // μ(j) peaks at j² = λ/(2π²); ceil(√λ/π) + 2 is past that with margin.
    let cap = if lambda > 0.0 {
        (lambda.sqrt() / std::f64::consts::PI).ceil() as usize + 2
    } else {
        2
    };
    let mut best = (eigenvalue(1, lambda), 1usize);
    for j in 2..=cap {
        let m = eigenvalue(j, lambda);
        if m > best.0 {
            best = (m, j);
        }
    }
    best
}

/// Physical, control and truncation constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    pub lambda: f64,
    pub a: f64,
    pub nu: f64,
    pub n_kernel: usize,
    pub n_sim: usize,
    pub eps_critical: f64,
    pub t_final: f64,
    pub dt: f64,
}

impl Parameters {
    /// Parameters with ν set to half of the admissible range.
    pub fn with_default_nu(lambda: f64, a: f64, n_kernel: usize) -> Self {
        let (m, _) = max_mu(lambda);
        Parameters {
            lambda,
            a,
            nu: 0.5 * (a - m),
            n_kernel,
            n_sim: 256.max(n_kernel),
            eps_critical: 1e-6,
            t_final: 0.05,
            dt: 2e-5,
        }
    }

    pub fn new(lambda: f64, a: f64, nu: f64, n_kernel: usize) -> Self {
        Parameters {
            nu,
            ..Parameters::with_default_nu(lambda, a, n_kernel)
        }
    }

    fn structural_problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.eps_critical > 0.0) {
            out.push("eps_critical must be > 0".to_string());
        }
        if !(self.dt > 0.0) {
            out.push("dt must be > 0".to_string());
        }
        if !(self.t_final >= self.dt) {
            out.push("t_final must be >= dt".to_string());
        }
        if self.n_kernel < 1 {
            out.push("n_kernel must be >= 1".to_string());
        }
        if self.n_sim < self.n_kernel {
            out.push("n_sim must be >= n_kernel".to_string());
        }
        for (name, v) in [("lambda", self.lambda), ("a", self.a), ("nu", self.nu)] {
            if !v.is_finite() {
                out.push(format!("{name} must be finite"));
            }
        }
        out
    }

    /// Ok if every admissibility check passes, otherwise the failing report.
    pub fn validated(&self) -> Result<ValidationReport> {
        let report = validate(self);
        if report.all_passed() {
            Ok(report)
        } else {
            Err(KsError::InvalidParameters(report.failure_summary()))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    pub max_mu: f64,
    pub argmax_mu: usize,
    /// `a - max μ_j - ν`.
    pub margin: f64,
    pub dist_lambda: f64,
    pub dist_a: f64,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failure_summary(&self) -> String {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.detail.clone())
            .collect::<Vec<_>>()
            .join("; ")
    }
}

pub const CHECK_STRUCTURE: &str = "structure";
pub const CHECK_LAMBDA: &str = "lambda_admissible";
pub const CHECK_A_FORBIDDEN: &str = "a_not_forbidden";
pub const CHECK_A_LARGE: &str = "a_exceeds_max_mu";
pub const CHECK_NU: &str = "nu_in_range";

/// Runs every admissibility check; never fails.
pub fn validate(params: &Parameters) -> ValidationReport {
    let mut checks = Vec::new();
    let structural = params.structural_problems();
    checks.push(Check {
        name: CHECK_STRUCTURE.into(),
        passed: structural.is_empty(),
        detail: if structural.is_empty() {
            "ok".into()
        } else {
            structural.join(", ")
        },
    });

    let eps = params.eps_critical;
    let dl = dist_to_critical_lambda(params.lambda, critical_lambda_window(params.lambda));
    checks.push(Check {
        name: CHECK_LAMBDA.into(),
        passed: dl > eps,
        detail: if dl > eps {
            format!("dist(λ, N) = {dl:.6e}")
        } else {
            format!("λ ∈ N (distance {dl:.3e} <= eps {eps:.1e})")
        },
    });

    let da = dist_to_critical_a(
        params.a,
        params.lambda,
        forbidden_a_window(params.a, params.lambda),
    );
    checks.push(Check {
        name: CHECK_A_FORBIDDEN.into(),
        passed: da > eps,
        detail: if da > eps {
            format!("dist(a, N1) = {da:.6e}")
        } else {
            format!("a ∈ N1 (distance {da:.3e} <= eps {eps:.1e})")
        },
    });

    let (m, jm) = max_mu(params.lambda);
    let a_ok = params.a > m;
    checks.push(Check {
        name: CHECK_A_LARGE.into(),
        passed: a_ok,
        detail: format!("a = {} vs max μ = {m:.6} (j = {jm})", params.a),
    });

    let upper = params.a - m;
    let nu_ok = params.nu > 0.0 && params.nu < upper;
    checks.push(Check {
        name: CHECK_NU.into(),
        passed: nu_ok,
        detail: if nu_ok {
            format!("0 < ν = {} < a - max μ = {upper:.6}", params.nu)
        } else {
            format!("ν = {} outside (0, a - max μ = {upper:.6})", params.nu)
        },
    });

    ValidationReport {
        checks,
        max_mu: m,
        argmax_mu: jm,
        margin: upper - params.nu,
        dist_lambda: dl,
        dist_a: da,
    }
}
