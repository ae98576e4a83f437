//! Sine-Galerkin solver for homogeneous boundary data (`u_xx(0) = 0`).
//! Serves as an oracle for the finite-difference solver.

use std::f64::consts::{PI, SQRT_2};

use crate::spectral::eigenvalue;

/// Padded interval count for products of `modes`-term sine series.
///
/// Aliasing on P intervals folds mode q onto `2P - q`; products reach `2M`,
/// so `P > 3M/2` keeps modes `1..=M` clean.
pub fn padded_intervals(modes: usize, dealias: bool) -> usize {
    if dealias {
        3 * modes / 2 + 1
    } else {
        modes + 1
    }
}

fn synthesize(coeffs: &[f64], p: usize) -> (Vec<f64>, Vec<f64>) {
    let mut u = vec![0.0; p + 1];
    let mut ux = vec![0.0; p + 1];
    for (i, (ui, uxi)) in u.iter_mut().zip(ux.iter_mut()).enumerate() {
        let x = i as f64 / p as f64;
        for (jm1, c) in coeffs.iter().enumerate() {
            let k = (jm1 + 1) as f64 * PI;
            *ui += c * SQRT_2 * (k * x).sin();
            *uxi += c * SQRT_2 * k * (k * x).cos();
        }
    }
    (u, ux)
}

/// Sine coefficients of `u u_x` on modes `1..=M`, where `M = coeffs.len()`.
pub fn modal_nonlinear_direct(coeffs: &[f64], dealias: bool) -> Vec<f64> {
    let m = coeffs.len();
    let p = padded_intervals(m, dealias);
    let (u, ux) = synthesize(coeffs, p);
    (1..=m)
        .map(|j| {
            let k = j as f64 * PI;
            (1..p)
                .map(|i| u[i] * ux[i] * SQRT_2 * (k * i as f64 / p as f64).sin())
                .sum::<f64>()
                / p as f64
        })
        .collect()
}

/// Sine coefficients of `(u²/2)_x` through the cosine series of `u²/2`.
pub fn modal_nonlinear_conservative(coeffs: &[f64], dealias: bool) -> Vec<f64> {
    let m = coeffs.len();
    let p = padded_intervals(m, dealias);
    let (u, _) = synthesize(coeffs, p);
    let w: Vec<f64> = u.iter().map(|v| 0.5 * v * v).collect();
    (1..=m)
        .map(|j| {
            let k = j as f64 * PI;
            // Trapezoidal DCT-I coefficient of cos(kx).
            let mut s = 0.5 * (w[0] + w[p] * (k).cos());
            for (i, wi) in w.iter().enumerate().take(p).skip(1) {
                s += wi * (k * i as f64 / p as f64).cos();
            }
            let cos_coeff = 2.0 * s / p as f64;
            -k * cos_coeff / SQRT_2
        })
        .collect()
}

/// Crank–Nicolson with Picard-averaged nonlinear term, mode by mode.
#[derive(Debug, Clone)]
pub struct ModalSolver {
    pub lambda: f64,
    pub dt: f64,
    pub nonlinear: bool,
    pub dealias: bool,
    mu: Vec<f64>,
    coeffs: Vec<f64>,
    time: f64,
}

impl ModalSolver {
    pub fn new(lambda: f64, dt: f64, initial: Vec<f64>, nonlinear: bool) -> Self {
        let mu = (1..=initial.len()).map(|j| eigenvalue(j, lambda)).collect();
        ModalSolver {
            lambda,
            dt,
            nonlinear,
            dealias: true,
            mu,
            coeffs: initial,
            time: 0.0,
        }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    fn nonlinear_of(&self, c: &[f64]) -> Vec<f64> {
        if self.nonlinear {
            modal_nonlinear_conservative(c, self.dealias)
        } else {
            vec![0.0; c.len()]
        }
    }

    pub fn step(&mut self) {
        let dt = self.dt;
        let n0 = self.nonlinear_of(&self.coeffs);
        let mut nbar = n0.clone();
        let mut next = self.coeffs.clone();
        let sweeps = if self.nonlinear { 6 } else { 1 };
        for _ in 0..sweeps {
            next = (0..self.coeffs.len())
                .map(|i| {
                    let m = self.mu[i];
                    ((1.0 + 0.5 * dt * m) * self.coeffs[i] - dt * nbar[i]) / (1.0 - 0.5 * dt * m)
                })
                .collect();
            if self.nonlinear {
                let n1 = self.nonlinear_of(&next);
                nbar = n0.iter().zip(&n1).map(|(a, b)| 0.5 * (a + b)).collect();
            }
        }
        self.coeffs = next;
        self.time += dt;
    }
}

/// Exact linear homogeneous evolution `c_j e^{μ_j t}`.
pub fn exact_linear_modes(initial: &[f64], lambda: f64, t: f64) -> Vec<f64> {
    initial
        .iter()
        .enumerate()
        .map(|(i, c)| c * (eigenvalue(i + 1, lambda) * t).exp())
        .collect()
}
