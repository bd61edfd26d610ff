//! Boundary (Frobenius) series of second-order radial factors `Δ + c`.
//!
//! In `x = e^{−r}` one has `∂_r = −x∂_x` and `coth r = (1+x²)/(1−x²)`, so
//! `(Δ + c)f = 0` becomes
//!
//! ```text
//! (1−x²)θ²f − (n−1)(1+x²)θf + c(1−x²)f = 0,      θ = x∂_x.
//! ```
//!
//! For an indicial root `ζ` of `I(e) = e² − (n−1)e + c` the solution
//! `Ψ_ζ = x^ζ Σ_k c_k x^{2k}` has `c₀ = 1` and
//!
//! ```text
//! c_k = c_{k−1}·(m² + (n−1)m + c) / I(m + 2),      m = ζ + 2k − 2.
//! ```
//!
//! The series converges for `x < 1`, i.e. away from the centre of the ball.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Frobenius solution of `(Δ + c)f = 0` attached to one boundary exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct FrobeniusSeries {
    /// Leading exponent `ζ`.
    pub zeta: Complex64,
    /// Coefficients `c_k` of `x^{ζ+2k}`.
    pub coefficients: Vec<Complex64>,
}

impl FrobeniusSeries {
    /// Builds the series with `terms` coefficients, failing on a resonance
    /// (`I(ζ + 2k) = 0` for some `k ≥ 1`, which would require a log term).
    pub fn new(n: f64, c: f64, zeta: Complex64, terms: usize) -> Result<Self> {
        let indicial = |e: Complex64| e * e - e * (n - 1.0) + c;
        let mut coefficients = Vec::with_capacity(terms);
        coefficients.push(Complex64::new(1.0, 0.0));
        for k in 1..terms {
            let m = zeta + (2 * k - 2) as f64;
            let denom = indicial(m + 2.0);
            if denom.norm() < 1e-12 {
                return Err(Error::Precondition(format!(
                    "exponent {zeta} resonates at order {k}: a logarithmic term is required"
                )));
            }
            let prev = coefficients[k - 1];
            coefficients.push(prev * (m * m + m * (n - 1.0) + c) / denom);
        }
        Ok(Self { zeta, coefficients })
    }

    /// `(Ψ(r), Ψ'(r))`, derivative with respect to the geodesic radius.
    pub fn eval(&self, r: f64) -> (Complex64, Complex64) {
        let x2 = (-2.0 * r).exp();
        let lead = (-self.zeta * r).exp();
        let mut value = Complex64::new(0.0, 0.0);
        let mut deriv = Complex64::new(0.0, 0.0);
        let mut xp = 1.0;
        for (k, c) in self.coefficients.iter().enumerate() {
            let term = c * xp;
            value += term;
            deriv -= term * (self.zeta + 2.0 * k as f64);
            if term.norm() < 1e-18 * value.norm() && k > 2 {
                break;
            }
            xp *= x2;
        }
        (value * lead, deriv * lead)
    }
}

/// Default number of series terms (enough for `r ≥ 1`).
pub const DEFAULT_TERMS: usize = 200;
