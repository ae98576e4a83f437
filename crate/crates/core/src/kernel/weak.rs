//! Weak (transposition) form residual of the kernel equation.

use crate::error::{KsError, Result};
use crate::quadrature::GaussLegendre;
use crate::spectral::eigenfunction_derivative;

use super::KernelModel;

/// Polynomial with ascending coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn x() -> Poly {
        Poly(vec![0.0, 1.0])
    }

    pub fn one_minus_x() -> Poly {
        Poly(vec![1.0, -1.0])
    }

    pub fn constant(c: f64) -> Poly {
        Poly(vec![c])
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }

    pub fn pow(&self, n: u32) -> Poly {
        (0..n).fold(Poly::constant(1.0), |acc, _| acc.mul(self))
    }

    /// `x^p (1-x)^q`.
    pub fn bump(p: u32, q: u32) -> Poly {
        Poly::x().pow(p).mul(&Poly::one_minus_x().pow(q))
    }

    pub fn derivative(&self) -> Poly {
        if self.0.len() <= 1 {
            return Poly::constant(0.0);
        }
        Poly(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * i as f64)
                .collect(),
        )
    }

    pub fn nth_derivative(&self, n: u32) -> Poly {
        (0..n).fold(self.clone(), |p, _| p.derivative())
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }
}

/// Smooth test function on the unit square with partial derivatives.
pub trait TestFunction {
    /// `∂_x^p ∂_y^q ρ(x, y)`.
    fn partial(&self, x: f64, y: f64, p: u32, q: u32) -> f64;

    fn value(&self, x: f64, y: f64) -> f64 {
        self.partial(x, y, 0, 0)
    }
}

/// Sum of separable polynomial products `Σ X_i(x) Y_i(y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyTestFunction {
    pub terms: Vec<(Poly, Poly)>,
}

impl PolyTestFunction {
    pub fn separable(x: Poly, y: Poly) -> Self {
        PolyTestFunction {
            terms: vec![(x, y)],
        }
    }

    /// `x³(1-x)³ y²(1-y)³`.
    pub fn standard() -> Self {
        Self::separable(Poly::bump(3, 3), Poly::bump(2, 3))
    }
}

impl TestFunction for PolyTestFunction {
    fn partial(&self, x: f64, y: f64, p: u32, q: u32) -> f64 {
        self.terms
            .iter()
            .map(|(px, py)| px.nth_derivative(p).eval(x) * py.nth_derivative(q).eval(y))
            .sum()
    }
}

/// Checks the eight edge constraints of the test class at 33 points per edge.
pub fn check_test_function<F: TestFunction + ?Sized>(rho: &F) -> Result<()> {
    let constraints: [(&str, fn(f64) -> (f64, f64), u32, u32); 8] = [
        ("rho(0,y)", |s| (0.0, s), 0, 0),
        ("rho(1,y)", |s| (1.0, s), 0, 0),
        ("rho(x,0)", |s| (s, 0.0), 0, 0),
        ("rho(x,1)", |s| (s, 1.0), 0, 0),
        ("rho_x(0,y)", |s| (0.0, s), 1, 0),
        ("rho_xx(0,y)", |s| (0.0, s), 2, 0),
        ("rho_xx(1,y)", |s| (1.0, s), 2, 0),
        ("rho_yy(x,1)", |s| (s, 1.0), 0, 2),
    ];
    for (name, at, p, q) in constraints {
        for i in 0..=32 {
            let (x, y) = at(i as f64 / 32.0);
            let d = rho.partial(x, y, p, q).abs();
            if d > 1e-8 {
                return Err(KsError::InvalidTestFunction {
                    constraint: name.to_string(),
                    defect: d,
                });
            }
        }
    }
    Ok(())
}

/// Quadrature order used for a kernel with `n` modes.
pub fn weak_quadrature_order(n: usize) -> usize {
    64usize.max(2 * n)
}

fn adjoint_operator<F: TestFunction + ?Sized>(rho: &F, lambda: f64, a: f64, x: f64, y: f64) -> f64 {
    rho.partial(x, y, 4, 0) + lambda * rho.partial(x, y, 2, 0)
        - rho.partial(x, y, 0, 4)
        - lambda * rho.partial(x, y, 0, 2)
        + a * rho.partial(x, y, 0, 0)
}

/// `|∬ (ρ_xxxx + λρ_xx − ρ_yyyy − λρ_yy + aρ) k − a ∫ ρ(x, x)|`.
pub fn weak_residual<F: TestFunction + ?Sized>(model: &KernelModel, rho: &F) -> Result<f64> {
    weak_residual_with_order(model, rho, weak_quadrature_order(model.n()))
}

pub fn weak_residual_with_order<F: TestFunction + ?Sized>(
    model: &KernelModel,
    rho: &F,
    order: usize,
) -> Result<f64> {
    check_test_function(rho)?;
    let (lambda, a) = (model.params.lambda, model.params.a);
    let quad = GaussLegendre::new(order);
    let q = quad.len();
    let op: Vec<f64> = (0..q * q)
        .map(|idx| {
            let (ix, iy) = (idx / q, idx % q);
            adjoint_operator(rho, lambda, a, quad.nodes[ix], quad.nodes[iy])
        })
        .collect();
    let mut total = 0.0;
    let mut row = vec![0.0; q];
    let mut col = vec![0.0; q];
    for j in 1..=model.n() {
        for i in 0..q {
            row[i] = quad.weights[i] * model.row(j, quad.nodes[i], 0);
            col[i] = quad.weights[i] * eigenfunction_derivative(j, quad.nodes[i], 0);
        }
        for ix in 0..q {
            let line = &op[ix * q..(ix + 1) * q];
            let inner: f64 = line.iter().zip(&col).map(|(o, c)| o * c).sum();
            total += row[ix] * inner;
        }
    }
    let diag = quad.integrate(|x| rho.value(x, x));
    Ok((total - a * diag).abs())
}

/// Residual with the kernel replaced by zero: `a |∫ ρ(x, x) dx|`.
pub fn weak_residual_zero_kernel<F: TestFunction + ?Sized>(a: f64, rho: &F) -> Result<f64> {
    check_test_function(rho)?;
    let quad = GaussLegendre::new(64);
    Ok((a * quad.integrate(|x| rho.value(x, x))).abs())
}
