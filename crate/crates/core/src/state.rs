//! Spatial state on a uniform grid with `v(0) = v(1) = 0`, convertible to
//! coefficients on `φ_j = √2 sin(jπx)`, `j = 1..M-1`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

/// `√2 sin(jπ i / M)` for `i, j = 1..M-1`, row-major in j.
fn sine_table(intervals: usize) -> Arc<Vec<f64>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Vec<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("sine table cache poisoned");
    guard
        .entry(intervals)
        .or_insert_with(|| {
            let n = intervals - 1;
            let mut t = vec![0.0; n * n];
            for j in 1..=n {
                for i in 1..=n {
                    // Reduce j·i mod 2M so the argument stays small.
                    let k = (j * i) % (2 * intervals);
                    t[(j - 1) * n + (i - 1)] =
                        2f64.sqrt() * (PI * k as f64 / intervals as f64).sin();
                }
            }
            Arc::new(t)
        })
        .clone()
}

/// Discrete sine transform: grid interior values to mode coefficients.
pub fn grid_to_modes(intervals: usize, values: &[f64]) -> Vec<f64> {
    let n = intervals - 1;
    assert_eq!(values.len(), n, "grid length must be intervals - 1");
    let t = sine_table(intervals);
    let scale = 1.0 / intervals as f64;
    (0..n)
        .map(|j| {
            let row = &t[j * n..(j + 1) * n];
            scale * row.iter().zip(values).map(|(s, v)| s * v).sum::<f64>()
        })
        .collect()
}

/// Inverse of [`grid_to_modes`]; extra coefficients beyond `intervals - 1` are rejected.
pub fn modes_to_grid(intervals: usize, coeffs: &[f64]) -> Vec<f64> {
    let n = intervals - 1;
    assert!(coeffs.len() <= n, "more modes than grid points");
    let t = sine_table(intervals);
    let mut out = vec![0.0; n];
    for (j, c) in coeffs.iter().enumerate() {
        if *c == 0.0 {
            continue;
        }
        let row = &t[j * n..(j + 1) * n];
        for (o, s) in out.iter_mut().zip(row) {
            *o += c * s;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateField {
    intervals: usize,
    values: Vec<f64>,
}

impl StateField {
    pub fn zeros(intervals: usize) -> Self {
        assert!(intervals >= 2, "grid needs at least two intervals");
        StateField {
            intervals,
            values: vec![0.0; intervals - 1],
        }
    }

    pub fn from_values(intervals: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), intervals - 1, "grid length must be intervals - 1");
        StateField { intervals, values }
    }

    pub fn from_fn<F: Fn(f64) -> f64>(intervals: usize, f: F) -> Self {
        let dx = 1.0 / intervals as f64;
        StateField {
            intervals,
            values: (1..intervals).map(|i| f(i as f64 * dx)).collect(),
        }
    }

    pub fn from_modes(intervals: usize, coeffs: &[f64]) -> Self {
        StateField {
            intervals,
            values: modes_to_grid(intervals, coeffs),
        }
    }

    /// `amplitude · φ_j`.
    pub fn mode(intervals: usize, j: usize, amplitude: f64) -> Self {
        let mut c = vec![0.0; j];
        c[j - 1] = amplitude;
        Self::from_modes(intervals, &c)
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.intervals as f64
    }

    /// Interior values at `x_i = i/M`, `i = 1..M-1`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Grid nodes of the interior values.
    pub fn nodes(&self) -> Vec<f64> {
        (1..self.intervals).map(|i| i as f64 * self.dx()).collect()
    }

    pub fn modes(&self) -> Vec<f64> {
        grid_to_modes(self.intervals, &self.values)
    }

    /// `sqrt(dx Σ v_i²)`, equal to the Euclidean norm of the modes.
    pub fn l2_norm(&self) -> f64 {
        (self.dx() * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    /// `‖v'‖` from the mode coefficients.
    pub fn h1_seminorm(&self) -> f64 {
        weighted_modal_norm(&self.modes(), 2)
    }

    /// `‖v''‖` from the mode coefficients.
    pub fn h2_seminorm(&self) -> f64 {
        weighted_modal_norm(&self.modes(), 4)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

fn weighted_modal_norm(modes: &[f64], power: i32) -> f64 {
    modes
        .iter()
        .enumerate()
        .map(|(i, c)| ((i + 1) as f64 * PI).powi(power) * c * c)
        .sum::<f64>()
        .sqrt()
}
