//! Characteristic roots and closed-form mode shapes `ψ̌_j`, the solutions of
//! `ψ'''' + λψ'' + (a + μ_j)ψ = 0` with `ψ(0) = ψ(1) = ψ''(1) = 0`, `ψ''(0) = 1`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{KsError, Result};
use crate::scalar::Real;
use crate::spectral::eigenvalue;

/// The four roots of `r⁴ + λr² + a + μ_j`; `r2 = -r1`, `r4 = -r3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicRoots<T> {
    pub j: usize,
    pub r1: Complex<T>,
    pub r3: Complex<T>,
    /// When `r3 = i s` is purely imaginary: `jπ - s`, computed without cancellation.
    pub r3_shift: Option<T>,
}

impl<T: Real> CharacteristicRoots<T> {
    pub fn r2(&self) -> Complex<T> {
        -self.r1
    }

    pub fn r4(&self) -> Complex<T> {
        -self.r3
    }

    /// `i·r4`, real and close to `jπ` for large j.
    pub fn i_r4(&self) -> Complex<T> {
        Complex::<T>::i() * self.r4()
    }

    /// `jπ - i·r4`, free of cancellation when the root is purely imaginary.
    pub fn i_r4_offset(&self) -> Complex<T> {
        match self.r3_shift {
            Some(d) => Complex::new(d, T::zero()),
            None => Complex::new(T::of_usize(self.j) * T::PI(), T::zero()) - self.i_r4(),
        }
    }

    pub fn all(&self) -> [Complex<T>; 4] {
        [self.r1, self.r2(), self.r3, self.r4()]
    }
}

/// Value of the characteristic polynomial at `r`.
pub fn quartic<T: Real>(r: Complex<T>, lambda: T, sigma: T) -> Complex<T> {
    let r2 = r * r;
    r2 * r2 + r2 * lambda + sigma
}

pub fn characteristic_roots<T: Real>(
    j: usize,
    lambda: T,
    a: T,
    eps: T,
) -> Result<CharacteristicRoots<T>> {
    let sigma = a + eigenvalue(j, lambda);
    let disc = lambda * lambda - T::of(4.0) * sigma;
    if sigma.abs() <= eps {
        return Err(KsError::DegenerateRoots {
            j,
            reason: format!("a + mu_j = {sigma:e}; perturb a by 10*eps"),
        });
    }
    if disc.abs() <= eps {
        return Err(KsError::DegenerateRoots {
            j,
            reason: format!("lambda^2 - 4(a + mu_j) = {disc:e}; perturb a by 10*eps"),
        });
    }
    let two = T::of(2.0);
    let sd = Complex::new(disc, T::zero()).sqrt();
    let r1 = positive_zero((sd - lambda) / two).sqrt();
    let mut r3 = positive_zero((-sd - lambda) / two).sqrt();
    let mut r3_shift = None;
    let k2 = {
        let k = T::of_usize(j) * T::PI();
        k * k
    };
    let lead = two * k2 - lambda;
    if disc > T::zero() && lead > T::zero() && -lambda - sd.re < T::zero() {
        // λ² - 4σ = (2K - λ)²(1 - ε) with K = j²π², ε = 4a/(2K - λ)², so
        // r3² = -K + η with η = 2a / ((2K - λ)(1 + √(1 - ε))).
        let eps_ratio = T::of(4.0) * a / (lead * lead);
        let eta = two * a / (lead * (T::one() + (T::one() - eps_ratio).sqrt()));
        let q = eta / k2;
        let k = k2.sqrt();
        let s = k * (T::one() - q).sqrt();
        r3 = Complex::new(T::zero(), s);
        r3_shift = Some(k * q / (T::one() + (T::one() - q).sqrt()));
    }
    Ok(CharacteristicRoots { j, r1, r3, r3_shift })
}

/// Replaces a negative zero imaginary part so the principal square root
/// stays on the upper side of the branch cut.
fn positive_zero<T: Real>(z: Complex<T>) -> Complex<T> {
    Complex::new(z.re, z.im + T::zero())
}

/// Accurate `(sin s, cos s)` for `s = jπ - shift`.
fn shifted_sin_cos<T: Real>(j: usize, s: T, shift: T) -> (T, T) {
    if shift.abs() < T::of(0.5) {
        let sign = if j % 2 == 1 { T::one() } else { -T::one() };
        (sign * shift.sin(), -sign * shift.cos())
    } else {
        (s.sin(), s.cos())
    }
}

/// `(-r)^n · S(r(1-x)) / sinh(r)` for `r = i s`, S as in [`hyperbolic_ratio`].
fn trigonometric_ratio<T: Real>(s: T, sin_s: T, cos_s: T, x: T, n: u32) -> Complex<T> {
    let odd = n % 2 == 1;
    let y = T::one() - x;
    let (num_sin, num_cos) = if x <= T::of(0.5) {
        let (sx, cx) = ((s * x).sin(), (s * x).cos());
        (sin_s * cx - cos_s * sx, cos_s * cx + sin_s * sx)
    } else {
        ((s * y).sin(), (s * y).cos())
    };
    let i = Complex::<T>::i();
    let r = i * s;
    // sinh(i z) = i sin z, cosh(i z) = cos z.
    let h = if odd {
        Complex::new(num_cos / sin_s, T::zero()) / i
    } else {
        Complex::new(num_sin / sin_s, T::zero())
    };
    (-r).powu(n) * h
}

/// `(-r)^n · S(r(1-x)) / sinh(r)` where S is sinh for even n, cosh for odd n.
///
/// The product is unchanged by `r -> -r`, so it is evaluated with `Re r ≥ 0`
/// where every exponential below is bounded by one.
fn hyperbolic_ratio<T: Real>(r: Complex<T>, x: T, n: u32) -> Complex<T> {
    let u = if r.re < T::zero() { -r } else { r };
    let one = Complex::new(T::one(), T::zero());
    let odd = n % 2 == 1;
    let h = if u.norm() < T::one() {
        let arg = u * (T::one() - x);
        let num = if odd { arg.cosh() } else { arg.sinh() };
        num / u.sinh()
    } else {
        let two = T::of(2.0);
        let e = (-u * x).exp();
        let q = (-u * (T::one() - x) * two).exp();
        let d = one - (-u * two).exp();
        if odd {
            e * (one + q) / d
        } else {
            e * (one - q) / d
        }
    };
    (-u).powu(n) * h
}

/// Closed-form `ψ̌_j` with its expansion coefficients α1..α4.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeShape<T> {
    pub j: usize,
    pub lambda: T,
    /// `a + μ_j`.
    pub sigma: T,
    pub roots: CharacteristicRoots<T>,
    pub alpha: [Complex<T>; 4],
    pub degenerate: bool,
    /// `(sin s, cos s)` when `r3 = i s`.
    trig: Option<(T, T)>,
}

pub fn mode_shape<T: Real>(j: usize, lambda: T, a: T, eps: T) -> Result<ModeShape<T>> {
    let roots = characteristic_roots(j, lambda, a, eps)?;
    let sigma = a + eigenvalue(j, lambda);
    let disc = lambda * lambda - T::of(4.0) * sigma;
    let one = Complex::new(T::one(), T::zero());
    let alpha1 = one / Complex::new(disc, T::zero()).sqrt();
    let trig = roots
        .r3_shift
        .map(|shift| shifted_sin_cos(j, roots.r3.im, shift));
    // sinh(r) = 0 happens only for a in the forbidden set.
    let vanishing = |r: Complex<T>| {
        let u = if r.re < T::zero() { -r } else { r };
        (one - (-u * T::of(2.0)).exp()).norm() <= T::min_positive_value()
    };
    let r3_vanishes = match trig {
        Some((sin_s, _)) => sin_s == T::zero(),
        None => vanishing(roots.r3),
    };
    if vanishing(roots.r1) || r3_vanishes {
        return Err(KsError::DegenerateRoots {
            j,
            reason: "sinh of a characteristic root vanishes; a lies in the forbidden set".into(),
        });
    }
    let i_r4 = Complex::<T>::i() * roots.r4();
    // Overflow is possible only in the expanded coefficients, which are kept
    // for inspection; evaluation goes through the scaled ratios.
    let alpha2 = -alpha1 / roots.r1.tanh();
    let alpha3 = -alpha1;
    let cot = match trig {
        Some((sin_s, cos_s)) => Complex::new(cos_s / sin_s, T::zero()),
        None => i_r4.cos() / i_r4.sin(),
    };
    let alpha4 = alpha1 * cot;
    let shape = ModeShape {
        j,
        lambda,
        sigma,
        roots,
        alpha: [alpha1, alpha2, alpha3, alpha4],
        degenerate: false,
        trig,
    };
    let probe = shape.derivative_complex(T::of(0.5), 0);
    if !probe.re.is_finite() || !probe.im.is_finite() {
        return Err(KsError::NumericalOverflow(format!("mode shape {j}")));
    }
    Ok(shape)
}

impl<T: Real> ModeShape<T> {
    /// n-th derivative of `ψ̌_j` at x, complex-valued before taking the real part.
    pub fn derivative_complex(&self, x: T, n: u32) -> Complex<T> {
        let second = match self.trig {
            Some((sin_s, cos_s)) => trigonometric_ratio(self.roots.r3.im, sin_s, cos_s, x, n),
            None => hyperbolic_ratio(self.roots.r3, x, n),
        };
        self.alpha[0] * (hyperbolic_ratio(self.roots.r1, x, n) - second)
    }

    pub fn value(&self, x: T) -> T {
        self.derivative_complex(x, 0).re
    }

    pub fn derivative(&self, x: T, n: u32) -> T {
        self.derivative_complex(x, n).re
    }

    /// Direct four-term evaluation `α1 cosh(r1 x) + α2 sinh(r1 x) + α3 cos(i r3 x) + α4 sin(i r4 x)`.
    /// Overflows for large j; used only as a cross-check.
    pub fn value_expanded(&self, x: T) -> Complex<T> {
        let i = Complex::<T>::i();
        let [a1, a2, a3, a4] = self.alpha;
        let r1 = self.roots.r1;
        a1 * (r1 * x).cosh()
            + a2 * (r1 * x).sinh()
            + a3 * (i * self.roots.r3 * x).cos()
            + a4 * (i * self.roots.r4() * x).sin()
    }

    /// ODE residual `ψ'''' + λψ'' + σψ` at x.
    pub fn ode_residual(&self, x: T) -> Complex<T> {
        self.derivative_complex(x, 4)
            + self.derivative_complex(x, 2) * self.lambda
            + self.derivative_complex(x, 0) * self.sigma
    }

    /// Factor `√2 / (α1 cot(i r4))` turning `ψ̌_j` into the unit-normalized variant.
    pub fn normalization_factor(&self) -> Complex<T> {
        Complex::new(T::SQRT_2(), T::zero()) / self.alpha[3]
    }

    /// Exact sine coefficient `⟨ψ̌_j, φ_m⟩ = -√2 mπ / (a + μ_j - μ_m)`.
    ///
    /// Follows from `∫ sinh(r(1-x)) sin(mπx) dx = mπ sinh r / (r² + m²π²)`
    /// together with `r1² - r3² = √(λ² - 4σ)`.
    pub fn sine_coefficient(&self, m: usize) -> T {
        let mu_m = eigenvalue(m, self.lambda);
        let mp = T::of_usize(m) * T::PI();
        -T::SQRT_2() * mp / (self.sigma - mu_m)
    }
}
