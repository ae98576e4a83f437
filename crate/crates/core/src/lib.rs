//! Rapid boundary stabilization of the Kuramoto–Sivashinsky equation
//! `v_t + v_xxxx + λv_xx + v v_x = 0` on (0, 1) with `v = 0` at both ends,
//! `v_xx(0) = f(t)` and `v_xx(1) = 0`.
//!
//! The pipeline: admissibility of (λ, a, ν) in [`spectral`], the kernel of
//! the Fredholm transform in [`kernel`], its discretization in [`transform`],
//! time stepping in [`solver`], the feedback loop in [`closed_loop`].

pub mod closed_loop;
pub mod controllability;
pub mod error;
pub mod experiments;
pub mod kernel;
pub mod modal;
pub mod quadrature;
pub mod scalar;
pub mod spectral;
pub mod solver;
pub mod state;
pub mod transform;

pub use error::{KsError, Result};
pub use scalar::Real;

pub type ModeShapeF64 = kernel::ModeShape<f64>;
pub type ModeShapeF32 = kernel::ModeShape<f32>;
pub type RootsF64 = kernel::CharacteristicRoots<f64>;
pub type RootsF32 = kernel::CharacteristicRoots<f32>;
