//! Galerkin discretization of `(Kv)(x) = ∫ k(x, y) v(y) dy` on the first M sine modes.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector, LU, Dyn};

use crate::error::{KsError, Result};
use crate::kernel::KernelModel;
use crate::state::StateField;

pub const CONDITION_LIMIT: f64 = 1e12;
const DUMP_MAGIC: &[u8; 4] = b"KSKN";

#[derive(Debug, Clone)]
pub struct TransformOperator {
    basis_size: usize,
    n_kernel: usize,
    matrix: DMatrix<f64>,
    factor: LU<f64, Dyn, Dyn>,
    singular_values: Vec<f64>,
}

/// `K_{mn} = ⟨ρ_n, φ_m⟩` for `n ≤ N`, zero columns beyond.
pub fn assemble_transform(model: &KernelModel, m: usize) -> Result<TransformOperator> {
    let n = model.n();
    if m < n {
        return Err(KsError::DimensionMismatch {
            expected: n,
            got: m,
        });
    }
    let matrix = DMatrix::from_fn(m, m, |r, c| {
        if c < n {
            model.row_sine_coefficient(c + 1, r + 1)
        } else {
            0.0
        }
    });
    TransformOperator::from_matrix(matrix, n)
}

impl TransformOperator {
    /// Wraps an arbitrary square matrix whose columns beyond `n_kernel` vanish.
    pub fn from_matrix(matrix: DMatrix<f64>, n_kernel: usize) -> Result<Self> {
        let m = matrix.nrows();
        if matrix.ncols() != m {
            return Err(KsError::DimensionMismatch {
                expected: m,
                got: matrix.ncols(),
            });
        }
        let i_minus_k = DMatrix::identity(m, m) - &matrix;
        let singular_values: Vec<f64> = i_minus_k
            .clone()
            .singular_values()
            .iter()
            .copied()
            .collect();
        Ok(TransformOperator {
            basis_size: m,
            n_kernel,
            matrix,
            factor: i_minus_k.lu(),
            singular_values,
        })
    }

    pub fn basis_size(&self) -> usize {
        self.basis_size
    }

    pub fn n_kernel(&self) -> usize {
        self.n_kernel
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn sigma_max(&self) -> f64 {
        self.singular_values.iter().cloned().fold(0.0, f64::max)
    }

    pub fn sigma_min(&self) -> f64 {
        self.singular_values
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    /// 2-norm condition number of `I - K`.
    pub fn condition(&self) -> f64 {
        self.sigma_max() / self.sigma_min()
    }

    /// `‖(I - K)⁻¹‖₂`.
    pub fn inverse_norm(&self) -> f64 {
        1.0 / self.sigma_min()
    }

    /// `‖K‖₂`.
    pub fn norm(&self) -> f64 {
        self.matrix.clone().singular_values().max()
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.basis_size {
            return Err(KsError::DimensionMismatch {
                expected: self.basis_size,
                got: len,
            });
        }
        Ok(())
    }

    /// `Kv` on sine coefficients.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_len(v.len())?;
        let out = &self.matrix * DVector::from_column_slice(v);
        Ok(out.iter().copied().collect())
    }

    /// `(I - K)v` on sine coefficients.
    pub fn apply_transform(&self, v: &[f64]) -> Result<Vec<f64>> {
        let kv = self.apply(v)?;
        Ok(v.iter().zip(kv).map(|(a, b)| a - b).collect())
    }

    /// Solves `(I - K)v = w`.
    pub fn solve_inverse(&self, w: &[f64]) -> Result<Vec<f64>> {
        self.check_len(w.len())?;
        let cond = self.condition();
        if !(cond <= CONDITION_LIMIT) {
            return Err(KsError::NearSingular(cond));
        }
        let rhs = DVector::from_column_slice(w);
        let v = self
            .factor
            .solve(&rhs)
            .ok_or(KsError::NearSingular(f64::INFINITY))?;
        let residual = (&v - &self.matrix * &v - &rhs).norm();
        let limit = 1e-10 * rhs.norm();
        if residual > limit && residual > f64::MIN_POSITIVE {
            return Err(KsError::StepRejected { residual, limit });
        }
        Ok(v.iter().copied().collect())
    }

    pub fn apply_field(&self, v: &StateField) -> Result<StateField> {
        let out = self.apply(&v.modes())?;
        Ok(StateField::from_modes(v.intervals(), &out))
    }

    pub fn solve_inverse_field(&self, w: &StateField) -> Result<StateField> {
        let out = self.solve_inverse(&w.modes())?;
        Ok(StateField::from_modes(w.intervals(), &out))
    }

    /// Gelfand proxy `‖K^m‖₂^{1/m}` alongside the largest eigenvalue modulus.
    pub fn spectral_radius_estimate(&self, m_powers: usize) -> Result<SpectralRadiusEstimate> {
        if m_powers < 4 {
            return Err(KsError::InvalidParameters("m_powers must be >= 4".into()));
        }
        Ok(spectral_radius_of(&self.matrix, self.n_kernel, m_powers))
    }

    /// Row-major little-endian dump with a 16-byte header.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(DUMP_MAGIC)?;
        w.write_all(&(self.basis_size as u32).to_le_bytes())?;
        w.write_all(&(self.n_kernel as u32).to_le_bytes())?;
        w.write_all(&[0u8; 4])?;
        for r in 0..self.basis_size {
            for c in 0..self.basis_size {
                w.write_all(&self.matrix[(r, c)].to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut header = [0u8; 16];
        r.read_exact(&mut header)?;
        if &header[..4] != DUMP_MAGIC {
            return Err(KsError::Schema("bad operator dump magic".into()));
        }
        let m = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
        let n = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
        let mut data = vec![0u8; m * m * 8];
        r.read_exact(&mut data)?;
        let values: Vec<f64> = data
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        TransformOperator::from_matrix(DMatrix::from_row_slice(m, m, &values), n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralRadiusEstimate {
    pub powers: usize,
    /// `‖K^m‖₂^{1/m}`.
    pub gelfand: f64,
    pub max_abs_eigenvalue: f64,
    /// `‖K‖₂`.
    pub norm: f64,
}

/// Spectral diagnostics of a matrix whose columns beyond `leading` vanish.
///
/// Such a matrix is block lower triangular with a zero trailing block, so
/// its spectrum is that of the leading block plus zeros.
pub fn spectral_radius_of(k: &DMatrix<f64>, leading: usize, m_powers: usize) -> SpectralRadiusEstimate {
    let mut power = k.clone();
    for _ in 1..m_powers {
        power = &power * k;
    }
    let pn = power.singular_values().max();
    let lead = k.view((0, 0), (leading, leading)).into_owned();
    let max_eig = lead
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    SpectralRadiusEstimate {
        powers: m_powers,
        gelfand: pn.powf(1.0 / m_powers as f64),
        max_abs_eigenvalue: max_eig,
        norm: k.clone().singular_values().max(),
    }
}
