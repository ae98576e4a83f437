//! Finite-difference IMEX integrator for
//! `u_t + u_xxxx + λu_xx + u u_x = f` with `u(0) = u(1) = 0`, `u_xx(0) = h(t)`, `u_xx(1) = 0`.
//!
//! Fourth-order central stencils on a uniform grid. Ghost values carry the
//! boundary data: at x = 0 the odd reflection is corrected by the even part
//! of the Taylor series, `u(-s) = -u(s) + h s² - λ h s⁴/12`, using
//! `u_xxxx(0) = -λ h` from the equation itself; at x = 1 the reflection is odd.
//! The linear part becomes `A u + b h` with A symmetric.

use base64::Engine;
use nalgebra::{DMatrix, DVector, Dyn, LU};
use serde::{Deserialize, Serialize};

use crate::error::{KsError, Result};
use crate::state::StateField;

const D4: [f64; 7] = [-1.0, 12.0, -39.0, 56.0, -39.0, 12.0, -1.0];
const D2: [f64; 5] = [-1.0, 16.0, -30.0, 16.0, -1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    CrankNicolson,
    Bdf2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub scheme: Scheme,
    /// Grid intervals; the state has `intervals - 1` unknowns.
    pub intervals: usize,
    pub dt: f64,
    pub nonlinear: bool,
    /// Maximum Picard sweeps per step (0 keeps the explicit predictor).
    pub picard_sweeps: usize,
    pub picard_tol: f64,
    /// Growth factor per step treated as divergence.
    pub divergence_factor: f64,
    /// Leading steps each taken as two backward-Euler half steps, which damps
    /// the stiff modes excited by initial data incompatible with the boundary value.
    #[serde(default)]
    pub startup_steps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            scheme: Scheme::CrankNicolson,
            intervals: 256,
            dt: 2e-5,
            nonlinear: true,
            picard_sweeps: 5,
            picard_tol: 1e-10,
            divergence_factor: 10.0,
            startup_steps: 2,
        }
    }
}

/// Source of the boundary value `u_xx(t, 0)`.
#[derive(Clone, Copy)]
pub enum BoundaryData<'a> {
    Homogeneous,
    Prescribed(&'a dyn Fn(f64) -> f64),
    /// Linear functional of the grid values.
    Feedback(&'a dyn Fn(&[f64]) -> f64),
}

impl BoundaryData<'_> {
    fn value(&self, t: f64, u: &[f64]) -> f64 {
        match self {
            BoundaryData::Homogeneous => 0.0,
            BoundaryData::Prescribed(h) => h(t),
            BoundaryData::Feedback(f) => f(u),
        }
    }

    fn depends_on_state(&self) -> bool {
        matches!(self, BoundaryData::Feedback(_))
    }
}

/// Distributed forcing `f(t, x)`.
pub type Forcing<'a> = Option<&'a dyn Fn(f64, f64) -> f64>;

/// Cubic lifting profile `p(x) = (x³ - 3x² + 2x)/6`, with `p'' = x - 1`.
pub fn lifting_profile(x: f64) -> f64 {
    (x * x * x - 3.0 * x * x + 2.0 * x) / 6.0
}

/// `u = û - p h`, turning `û_xx(0)` into `û_xx(0) + h`.
pub fn lift_boundary(u_hom: &StateField, h: f64) -> StateField {
    let mut out = u_hom.clone();
    for (v, x) in out.values_mut().iter_mut().zip(u_hom.nodes()) {
        *v -= lifting_profile(x) * h;
    }
    out
}

/// One-sided fourth-order `u''(0)` from `u(0) = 0` and the first five interior values.
pub fn second_derivative_at_left(u: &StateField) -> f64 {
    let v = u.values();
    let dx = u.dx();
    (-154.0 * v[0] + 214.0 * v[1] - 156.0 * v[2] + 61.0 * v[3] - 10.0 * v[4]) / (12.0 * dx * dx)
}

/// `A u + b h` discretizing `u_xxxx + λ u_xx`.
#[derive(Debug, Clone)]
pub struct LinearOperator {
    pub intervals: usize,
    pub lambda: f64,
    pub matrix: DMatrix<f64>,
    pub boundary: DVector<f64>,
}

impl LinearOperator {
    pub fn new(intervals: usize, lambda: f64) -> Self {
        assert!(intervals >= 8, "grid needs at least 8 intervals");
        let n = intervals - 1;
        let dx = 1.0 / intervals as f64;
        let mut w = [0.0; 7];
        for (k, c) in D4.iter().enumerate() {
            w[k] += c / (6.0 * dx.powi(4));
        }
        for (k, c) in D2.iter().enumerate() {
            w[k + 1] += lambda * c / (12.0 * dx * dx);
        }
        let mut matrix = DMatrix::zeros(n, n);
        let mut boundary = DVector::zeros(n);
        let m = intervals as isize;
        for i in 1..=n as isize {
            for (k, wk) in w.iter().enumerate() {
                let q = i + k as isize - 3;
                if q == 0 || q == m {
                    continue;
                }
                if (1..m).contains(&q) {
                    matrix[(i as usize - 1, q as usize - 1)] += wk;
                } else if q < 0 {
                    let s = (-q) as f64 * dx;
                    matrix[(i as usize - 1, (-q) as usize - 1)] -= wk;
                    boundary[i as usize - 1] += wk * s * s * (1.0 - lambda * s * s / 12.0);
                } else {
                    let r = (2 * m - q) as usize;
                    matrix[(i as usize - 1, r - 1)] -= wk;
                }
            }
        }
        LinearOperator {
            intervals,
            lambda,
            matrix,
            boundary,
        }
    }

    pub fn apply(&self, u: &[f64], h: f64) -> Vec<f64> {
        let v = &self.matrix * DVector::from_column_slice(u) + &self.boundary * h;
        v.iter().copied().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NonlinearForm {
    /// `(u²/2)_x`.
    Conservative,
    /// `u · u_x`.
    Direct,
}

/// Values `u_q` for `q = -2..=M+2`, boundary zeros and ghosts included.
fn extended(values: &[f64], intervals: usize, h: f64, lambda: f64) -> Vec<f64> {
    let dx = 1.0 / intervals as f64;
    let n = intervals - 1;
    let mut e = vec![0.0; n + 6];
    e[3..3 + n].copy_from_slice(values);
    for k in 1..=2usize {
        let s = k as f64 * dx;
        e[2 - k] = -values[k - 1] + h * s * s * (1.0 - lambda * s * s / 12.0);
        e[3 + n + k] = -values[n - k];
    }
    e
}

/// Fourth-order grid approximation of `u u_x`.
pub fn nonlinear_term(u: &[f64], intervals: usize, h: f64, lambda: f64, form: NonlinearForm) -> Vec<f64> {
    let e = extended(u, intervals, h, lambda);
    let dx = 1.0 / intervals as f64;
    let d1 = |f: &dyn Fn(usize) -> f64, i: usize| {
        (f(i - 2) - 8.0 * f(i - 1) + 8.0 * f(i + 1) - f(i + 2)) / (12.0 * dx)
    };
    (0..u.len())
        .map(|k| {
            let i = k + 3;
            match form {
                NonlinearForm::Conservative => d1(&|q| 0.5 * e[q] * e[q], i),
                NonlinearForm::Direct => e[i] * d1(&|q| e[q], i),
            }
        })
        .collect()
}

/// Running terms of the discrete energy balance (Crank–Nicolson and its startup steps):
/// `‖u_n‖² - ‖u_0‖² = -2 (dissipation + boundary_work + nonlinear_work - forcing_work) - numerical_dissipation`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyBalance {
    pub initial: f64,
    pub current: f64,
    pub dissipation: f64,
    pub boundary_work: f64,
    pub nonlinear_work: f64,
    pub forcing_work: f64,
    /// `Σ ‖u_{k+1} - u_k‖²` over backward-Euler steps.
    #[serde(default)]
    pub numerical_dissipation: f64,
}

impl EnergyBalance {
    pub fn defect(&self) -> f64 {
        self.current - self.initial
            + 2.0 * (self.dissipation + self.boundary_work + self.nonlinear_work - self.forcing_work)
            + self.numerical_dissipation
    }
}

struct History {
    state: Vec<f64>,
    nonlinear: Vec<f64>,
}

/// Single-owner time stepper.
pub struct KsSolver {
    cfg: SolverConfig,
    op: LinearOperator,
    cn_factor: LU<f64, Dyn, Dyn>,
    cn_matrix: DMatrix<f64>,
    bdf_factor: Option<(LU<f64, Dyn, Dyn>, DMatrix<f64>)>,
    state: StateField,
    time: f64,
    h: f64,
    steps: usize,
    history: Option<History>,
    energy: EnergyBalance,
}

fn dot(a: &[f64], b: &[f64], dx: f64) -> f64 {
    dx * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl KsSolver {
    pub fn new(cfg: SolverConfig, lambda: f64, initial: StateField) -> Result<Self> {
        if initial.intervals() != cfg.intervals {
            return Err(KsError::DimensionMismatch {
                expected: cfg.intervals,
                got: initial.intervals(),
            });
        }
        if !(cfg.dt > 0.0) {
            return Err(KsError::InvalidParameters("dt must be > 0".into()));
        }
        let op = LinearOperator::new(cfg.intervals, lambda);
        let n = cfg.intervals - 1;
        let id = DMatrix::<f64>::identity(n, n);
        let cn_matrix = &id + &op.matrix * (0.5 * cfg.dt);
        let cn_factor = cn_matrix.clone().lu();
        let bdf_factor = match cfg.scheme {
            Scheme::Bdf2 => {
                let m = &id * 1.5 + &op.matrix * cfg.dt;
                Some((m.clone().lu(), m))
            }
            Scheme::CrankNicolson => None,
        };
        let e0 = initial.l2_norm().powi(2);
        Ok(KsSolver {
            cfg,
            op,
            cn_factor,
            cn_matrix,
            bdf_factor,
            state: initial,
            time: 0.0,
            h: 0.0,
            steps: 0,
            history: None,
            energy: EnergyBalance {
                initial: e0,
                current: e0,
                ..Default::default()
            },
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn lambda(&self) -> f64 {
        self.op.lambda
    }

    pub fn operator(&self) -> &LinearOperator {
        &self.op
    }

    pub fn state(&self) -> &StateField {
        &self.state
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Boundary value used at the current time level.
    pub fn boundary_value(&self) -> f64 {
        self.h
    }

    pub fn energy(&self) -> EnergyBalance {
        self.energy
    }

    /// Restarts from a checkpoint-like state; multistep history is dropped.
    pub fn reset(&mut self, state: StateField, time: f64) {
        self.energy = EnergyBalance {
            initial: state.l2_norm().powi(2),
            current: state.l2_norm().powi(2),
            ..Default::default()
        };
        self.state = state;
        self.time = time;
        self.history = None;
    }

    fn nonlinear(&self, u: &[f64], h: f64) -> Vec<f64> {
        if self.cfg.nonlinear {
            nonlinear_term(u, self.cfg.intervals, h, self.op.lambda, NonlinearForm::Conservative)
        } else {
            vec![0.0; u.len()]
        }
    }

    fn forcing_at(&self, forcing: Forcing, t: f64) -> Vec<f64> {
        match forcing {
            Some(f) => self.state.nodes().into_iter().map(|x| f(t, x)).collect(),
            None => vec![0.0; self.cfg.intervals - 1],
        }
    }

    fn solve_checked(
        factor: &LU<f64, Dyn, Dyn>,
        matrix: &DMatrix<f64>,
        rhs: DVector<f64>,
        scale: f64,
    ) -> Result<Vec<f64>> {
        let x = factor.solve(&rhs).ok_or(KsError::StepRejected {
            residual: f64::INFINITY,
            limit: 0.0,
        })?;
        let residual = (matrix * &x - &rhs).norm();
        // Backward-error scale: stiff steps make ‖M‖‖x‖ much larger than ‖rhs‖.
        let limit = 1e-12 * (matrix.norm() * x.norm() + rhs.norm()) + 1e-9 * scale.min(rhs.norm());
        if !(residual <= limit) && residual > 1e-300 {
            return Err(KsError::StepRejected { residual, limit });
        }
        Ok(x.iter().copied().collect())
    }

    /// One Crank–Nicolson step of the linear equation with boundary values
    /// `h_now`, `h_next` and a forcing frozen over the step.
    pub fn linear_step(
        &self,
        u: &StateField,
        h_now: f64,
        h_next: f64,
        forcing: Option<&StateField>,
    ) -> Result<StateField> {
        let dt = self.cfg.dt;
        let v = u.values();
        let av = self.op.apply(v, 0.0);
        let mut rhs: Vec<f64> = v
            .iter()
            .zip(&av)
            .zip(self.op.boundary.iter())
            .map(|((vi, ai), bi)| vi - 0.5 * dt * ai - 0.5 * dt * bi * (h_now + h_next))
            .collect();
        if let Some(f) = forcing {
            for (r, fi) in rhs.iter_mut().zip(f.values()) {
                *r += dt * fi;
            }
        }
        let out = Self::solve_checked(
            &self.cn_factor,
            &self.cn_matrix,
            DVector::from_vec(rhs),
            norm(v),
        )?;
        Ok(StateField::from_values(u.intervals(), out))
    }

    /// Advances one step; the boundary value at the new level is refreshed by Picard sweeps.
    pub fn advance(&mut self, boundary: BoundaryData, forcing: Forcing) -> Result<()> {
        if self.steps == 0 {
            self.h = boundary.value(self.time, self.state.values());
        }
        let before = self.state.l2_norm();
        match (self.cfg.scheme, self.history.is_some()) {
            (Scheme::Bdf2, true) => self.step_bdf2(boundary, forcing)?,
            _ if self.steps < self.cfg.startup_steps => self.step_startup(boundary, forcing)?,
            _ => self.step_cn(boundary, forcing)?,
        }
        let after = self.state.l2_norm();
        if !self.state.is_finite() || (before > 0.0 && after > self.cfg.divergence_factor * before) {
            return Err(KsError::DivergedStep {
                time: self.time,
                before,
                after,
            });
        }
        Ok(())
    }

    fn step_cn(&mut self, boundary: BoundaryData, forcing: Forcing) -> Result<()> {
        let dt = self.cfg.dt;
        let dx = self.state.dx();
        let t0 = self.time;
        let t1 = t0 + dt;
        let u0 = self.state.values().to_vec();
        let h0 = self.h;
        let n0 = self.nonlinear(&u0, h0);
        let f0 = self.forcing_at(forcing, t0);
        let f1 = self.forcing_at(forcing, t1);
        let fbar: Vec<f64> = f0.iter().zip(&f1).map(|(a, b)| 0.5 * (a + b)).collect();
        let au0 = self.op.apply(&u0, 0.0);
        let base: Vec<f64> = u0
            .iter()
            .zip(&au0)
            .zip(&fbar)
            .map(|((u, a), f)| u - 0.5 * dt * a + dt * f)
            .collect();

        let mut h1 = match boundary {
            BoundaryData::Feedback(_) => boundary.value(t0, &u0),
            _ => boundary.value(t1, &u0),
        };
        let mut nbar = n0.clone();
        let mut u1 = u0.clone();
        let iterate = self.cfg.nonlinear || boundary.depends_on_state();
        let sweeps = if iterate { self.cfg.picard_sweeps + 1 } else { 1 };
        let mut h_solved = h1;
        for sweep in 0..sweeps {
            h_solved = h1;
            let rhs: Vec<f64> = base
                .iter()
                .zip(self.op.boundary.iter())
                .zip(&nbar)
                .map(|((r, b), nb)| r - 0.5 * dt * b * (h0 + h1) - dt * nb)
                .collect();
            let next = Self::solve_checked(
                &self.cn_factor,
                &self.cn_matrix,
                DVector::from_vec(rhs),
                norm(&u0),
            )?;
            let change = next
                .iter()
                .zip(&u1)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            u1 = next;
            if sweep + 1 == sweeps {
                break;
            }
            if sweep > 0 && change <= self.cfg.picard_tol * norm(&u1).max(1e-300) {
                break;
            }
            if boundary.depends_on_state() {
                h1 = boundary.value(t1, &u1);
            }
            if self.cfg.nonlinear {
                let n1 = self.nonlinear(&u1, h1);
                nbar = n0.iter().zip(&n1).map(|(a, b)| 0.5 * (a + b)).collect();
            }
        }
        if boundary.depends_on_state() {
            // Level t1 boundary value consistent with the accepted state.
            h1 = boundary.value(t1, &u1);
        }

        let ubar: Vec<f64> = u0.iter().zip(&u1).map(|(a, b)| 0.5 * (a + b)).collect();
        let aubar = self.op.apply(&ubar, 0.0);
        let bvec: Vec<f64> = self.op.boundary.iter().copied().collect();
        self.energy.dissipation += dt * dot(&ubar, &aubar, dx);
        self.energy.boundary_work += dt * dot(&ubar, &bvec, dx) * 0.5 * (h0 + h_solved);
        self.energy.nonlinear_work += dt * dot(&ubar, &nbar, dx);
        self.energy.forcing_work += dt * dot(&ubar, &fbar, dx);

        let n_keep = if self.cfg.scheme == Scheme::Bdf2 {
            Some(History {
                state: u0,
                nonlinear: n0,
            })
        } else {
            None
        };
        self.commit(u1, h1, t1, n_keep);
        Ok(())
    }

    fn step_startup(&mut self, boundary: BoundaryData, forcing: Forcing) -> Result<()> {
        let half = 0.5 * self.cfg.dt;
        let u_start = self.state.values().to_vec();
        let n_start = self.nonlinear(&u_start, self.h);
        let mut u = u_start.clone();
        let mut h = self.h;
        for k in 0..2 {
            let (next, h_next) = self.backward_euler(&u, self.time + k as f64 * half, half, boundary, forcing)?;
            u = next;
            h = h_next;
        }
        let keep = (self.cfg.scheme == Scheme::Bdf2).then_some(History {
            state: u_start,
            nonlinear: n_start,
        });
        self.commit(u, h, self.time + self.cfg.dt, keep);
        Ok(())
    }

    /// Backward-Euler step of length `k = dt/2`, which shares the Crank–Nicolson matrix.
    fn backward_euler(
        &mut self,
        u0: &[f64],
        t0: f64,
        k: f64,
        boundary: BoundaryData,
        forcing: Forcing,
    ) -> Result<(Vec<f64>, f64)> {
        let dx = 1.0 / self.cfg.intervals as f64;
        let t1 = t0 + k;
        let f1 = self.forcing_at(forcing, t1);
        let mut h1 = match boundary {
            BoundaryData::Feedback(_) => boundary.value(t0, u0),
            _ => boundary.value(t1, u0),
        };
        let mut n1 = self.nonlinear(u0, h1);
        let mut u1 = u0.to_vec();
        let iterate = self.cfg.nonlinear || boundary.depends_on_state();
        let sweeps = if iterate { self.cfg.picard_sweeps + 1 } else { 1 };
        let mut h_solved = h1;
        let mut n_used = n1.clone();
        for sweep in 0..sweeps {
            h_solved = h1;
            n_used = n1.clone();
            let rhs: Vec<f64> = (0..u0.len())
                .map(|i| u0[i] - k * self.op.boundary[i] * h1 - k * n1[i] + k * f1[i])
                .collect();
            let next = Self::solve_checked(&self.cn_factor, &self.cn_matrix, DVector::from_vec(rhs), norm(u0))?;
            let change = next
                .iter()
                .zip(&u1)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            u1 = next;
            if sweep + 1 == sweeps || (sweep > 0 && change <= self.cfg.picard_tol * norm(&u1).max(1e-300)) {
                break;
            }
            if boundary.depends_on_state() {
                h1 = boundary.value(t1, &u1);
            }
            n1 = self.nonlinear(&u1, h1);
        }
        if boundary.depends_on_state() {
            h1 = boundary.value(t1, &u1);
        }
        let au1 = self.op.apply(&u1, 0.0);
        let bvec: Vec<f64> = self.op.boundary.iter().copied().collect();
        let jump: Vec<f64> = u1.iter().zip(u0).map(|(a, b)| a - b).collect();
        self.energy.dissipation += k * dot(&u1, &au1, dx);
        self.energy.boundary_work += k * dot(&u1, &bvec, dx) * h_solved;
        self.energy.nonlinear_work += k * dot(&u1, &n_used, dx);
        self.energy.forcing_work += k * dot(&u1, &f1, dx);
        self.energy.numerical_dissipation += dot(&jump, &jump, dx);
        Ok((u1, h1))
    }

    fn step_bdf2(&mut self, boundary: BoundaryData, forcing: Forcing) -> Result<()> {
        let dt = self.cfg.dt;
        let t1 = self.time + dt;
        let hist = self.history.take().expect("history present");
        let u0 = self.state.values().to_vec();
        let n0 = self.nonlinear(&u0, self.h);
        let f1 = self.forcing_at(forcing, t1);
        let base: Vec<f64> = (0..u0.len())
            .map(|i| {
                2.0 * u0[i] - 0.5 * hist.state[i] - dt * (2.0 * n0[i] - hist.nonlinear[i])
                    + dt * f1[i]
            })
            .collect();
        let extrap: Vec<f64> = u0
            .iter()
            .zip(&hist.state)
            .map(|(a, b)| 2.0 * a - b)
            .collect();
        let mut h1 = boundary.value(t1, &extrap);
        let (factor, matrix) = self.bdf_factor.as_ref().expect("bdf factor");
        let sweeps = if boundary.depends_on_state() {
            self.cfg.picard_sweeps + 1
        } else {
            1
        };
        let mut u1 = extrap;
        for sweep in 0..sweeps {
            let rhs: Vec<f64> = base
                .iter()
                .zip(self.op.boundary.iter())
                .map(|(r, b)| r - dt * b * h1)
                .collect();
            let next = Self::solve_checked(factor, matrix, DVector::from_vec(rhs), norm(&u0))?;
            let change = next
                .iter()
                .zip(&u1)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            u1 = next;
            if sweep + 1 == sweeps
                || (sweep > 0 && change <= self.cfg.picard_tol * norm(&u1).max(1e-300))
            {
                break;
            }
            h1 = boundary.value(t1, &u1);
        }
        if boundary.depends_on_state() {
            h1 = boundary.value(t1, &u1);
        }
        self.commit(
            u1,
            h1,
            t1,
            Some(History {
                state: u0,
                nonlinear: n0,
            }),
        );
        Ok(())
    }

    fn commit(&mut self, u1: Vec<f64>, h1: f64, t1: f64, history: Option<History>) {
        self.state = StateField::from_values(self.cfg.intervals, u1);
        self.h = h1;
        self.time = t1;
        self.steps += 1;
        self.history = history;
        self.energy.current = self.state.l2_norm().powi(2);
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint::capture(self)
    }
}

/// JSON header plus base64 little-endian field values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub lambda: f64,
    pub time: f64,
    pub steps: usize,
    pub boundary_value: f64,
    pub config: SolverConfig,
    pub values_b64: String,
}

pub const CHECKPOINT_VERSION: u32 = 1;

impl Checkpoint {
    fn capture(s: &KsSolver) -> Self {
        let bytes: Vec<u8> = s
            .state
            .values()
            .iter()
            .flat_map(|v| v.to_le_bytes())
            .collect();
        Checkpoint {
            version: CHECKPOINT_VERSION,
            lambda: s.op.lambda,
            time: s.time,
            steps: s.steps,
            boundary_value: s.h,
            config: s.cfg.clone(),
            values_b64: base64::engine::general_purpose::STANDARD.encode(bytes),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Checkpoint = serde_json::from_str(s)?;
        if c.version != CHECKPOINT_VERSION {
            return Err(KsError::Schema(format!("checkpoint version {}", c.version)));
        }
        Ok(c)
    }

    pub fn state(&self) -> Result<StateField> {
        let bytes = base64::engine::general_purpose::STANDARD
            .decode(&self.values_b64)
            .map_err(|e| KsError::Schema(e.to_string()))?;
        if bytes.len() != 8 * (self.config.intervals - 1) {
            return Err(KsError::Schema("checkpoint field length".into()));
        }
        let values = bytes
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        Ok(StateField::from_values(self.config.intervals, values))
    }

    /// Rebuilds a solver positioned at the saved time.
    pub fn restore(&self) -> Result<KsSolver> {
        let mut s = KsSolver::new(self.config.clone(), self.lambda, self.state()?)?;
        s.time = self.time;
        s.steps = self.steps;
        s.h = self.boundary_value;
        Ok(s)
    }
}
