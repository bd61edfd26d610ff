//! Indicial polynomials, boundary spectra and weight windows of the two
//! linearized operator families.
//!
//! With `x = e^{−r}` one has `Δ(x^ζ) = (ζ² − (n−1)ζ)x^ζ (1 + O(x²))`, so a
//! polynomial in Δ acts on boundary powers through its indicial polynomial:
//!
//! ```text
//! Q family (dimension n):  I(ζ) = (s − n)(s + (n²−4)/2),          s = ζ² − (n−1)ζ
//! U family (n = 4):        I(ζ) = ((1+α)s + 6α)(s − 4),           s = ζ² − 3ζ
//! ```
//!
//! Roots are produced from closed forms and, independently, as eigenvalues of
//! the companion matrix of the expanded quartic; the two must agree.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Dimension;

/// Agreement required between closed-form and companion-matrix roots.
pub const ROOT_TOLERANCE: f64 = 1e-10;

/// A quadratic factor `lead·ζ² + lin·ζ + constant` with real coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadraticFactor {
    /// Coefficient of `ζ²`.
    pub lead: f64,
    /// Coefficient of `ζ`.
    pub lin: f64,
    /// Constant coefficient.
    pub constant: f64,
}

impl QuadraticFactor {
    /// The factor `lead·(ζ² − (n−1)ζ) + shift`, i.e. `lead·Δ + shift` on boundary powers.
    pub fn from_laplacian(n: f64, lead: f64, shift: f64) -> Self {
        Self { lead, lin: -lead * (n - 1.0), constant: shift }
    }

    /// Value at a complex argument.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        z * z * self.lead + z * self.lin + self.constant
    }

    /// Both roots (closed form; complex when the discriminant is negative).
    pub fn roots(&self) -> [Complex64; 2] {
        let centre = -self.lin / (2.0 * self.lead);
        let disc = self.lin * self.lin - 4.0 * self.lead * self.constant;
        let half = Complex64::new(disc, 0.0).sqrt() / (2.0 * self.lead.abs());
        [centre + half, centre - half]
    }
}

/// Product of quadratic factors; degree four for both operator families.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndicialPolynomial {
    /// Factors. For both families the first factor has the real roots
    /// `{ζ₊, −1}` (`(s − n)`, resp. `(s − 4)`) and the second one carries the
    /// kernel roots (`(s + (n²−4)/2)`, resp. `(1+α)s + 6α`).
    pub factors: Vec<QuadraticFactor>,
}

impl IndicialPolynomial {
    /// Degree of the product.
    pub fn degree(&self) -> usize {
        2 * self.factors.len()
    }

    /// Value of the product at `z`.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.factors.iter().map(|f| f.eval(z)).product()
    }

    /// Coefficients of the expanded product, highest degree first.
    pub fn coefficients(&self) -> Vec<f64> {
        let mut c = vec![1.0];
        for f in &self.factors {
            let q = [f.lead, f.lin, f.constant];
            let mut next = vec![0.0; c.len() + 2];
            for (i, a) in c.iter().enumerate() {
                for (j, b) in q.iter().enumerate() {
                    next[i + j] += a * b;
                }
            }
            c = next;
        }
        c
    }

    /// Closed-form roots, factor by factor.
    pub fn closed_form_roots(&self) -> Vec<Complex64> {
        self.factors.iter().flat_map(|f| f.roots()).collect()
    }

    /// Roots as eigenvalues of the companion matrix of the expanded polynomial.
    pub fn companion_roots(&self) -> Vec<Complex64> {
        let c = self.coefficients();
        let d = c.len() - 1;
        let mut m = DMatrix::<f64>::zeros(d, d);
        for j in 0..d {
            m[(0, j)] = -c[j + 1] / c[0];
        }
        for i in 1..d {
            m[(i, i - 1)] = 1.0;
        }
        m.complex_eigenvalues().iter().copied().collect()
    }
}

/// Which operator family a spectrum belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum OperatorFamily {
    /// Linearized constant-Q operator `(Δ − n)(Δ + (n²−4)/2)` in dimension `n`.
    Q {
        /// Dimension.
        n: usize,
    },
    /// Linearized U-operator `((1+α)Δ + 6α)(Δ − 4)` (dimension four).
    U {
        /// Parameter `α = γ₂/(12γ₃)`.
        alpha: f64,
    },
}

impl OperatorFamily {
    /// Dimension of the underlying manifold.
    pub fn n(&self) -> usize {
        match self {
            OperatorFamily::Q { n } => *n,
            OperatorFamily::U { .. } => 4,
        }
    }

    /// Indicial polynomial of the family.
    pub fn polynomial(&self) -> IndicialPolynomial {
        match *self {
            OperatorFamily::Q { n } => {
                let nf = n as f64;
                IndicialPolynomial {
                    factors: vec![
                        QuadraticFactor::from_laplacian(nf, 1.0, -nf),
                        QuadraticFactor::from_laplacian(nf, 1.0, (nf * nf - 4.0) / 2.0),
                    ],
                }
            }
            OperatorFamily::U { alpha } => IndicialPolynomial {
                factors: vec![
                    QuadraticFactor::from_laplacian(4.0, 1.0, -4.0),
                    QuadraticFactor::from_laplacian(4.0, 1.0 + alpha, 6.0 * alpha),
                ],
            },
        }
    }
}

/// Boundary spectrum of a linearized operator with its weight data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundarySpectrum {
    /// Operator family.
    pub family: OperatorFamily,
    /// Indicial roots (closed under conjugation).
    pub roots: Vec<Complex64>,
    /// Index set `{1/2 + Re ζ}`, one entry per root.
    pub lambda_set: Vec<f64>,
    /// Per-root flag: nonzero imaginary part.
    pub oscillatory: Vec<bool>,
    /// Injectivity threshold `δ̄` of the model operator.
    pub delta_bar: f64,
    /// Surjectivity threshold `δ̲` of the model operator.
    pub delta_under: f64,
    /// Open interval of Hölder weights `ν` on which the operator is essentially surjective.
    pub nu_window: (f64, f64),
    /// True when two roots in the decaying half-plane coincide or differ by an integer.
    pub log_terms_possible: bool,
    /// `α̃² = 9/4 − 6α/(1+α)` (U family only).
    pub alpha_tilde_sq: Option<f64>,
    /// Largest distance between a closed-form root and the companion-matrix oracle.
    pub oracle_discrepancy: f64,
}

impl BoundarySpectrum {
    /// Largest `|I(ζ)|` over the returned roots.
    pub fn max_polynomial_residual(&self) -> f64 {
        let p = self.family.polynomial();
        self.roots.iter().map(|z| p.eval(*z).norm()).fold(0.0, f64::max)
    }

    /// True when the root set is closed under complex conjugation (to `tol`).
    pub fn is_conjugation_closed(&self, tol: f64) -> bool {
        self.roots.iter().all(|z| self.roots.iter().any(|w| (w - z.conj()).norm() <= tol))
    }
}

fn matches_oracle(closed: &[Complex64], oracle: &[Complex64]) -> f64 {
    let mut used = vec![false; oracle.len()];
    let mut worst = 0.0_f64;
    for z in closed {
        let (k, d) = oracle
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, w)| (k, (w - z).norm() / z.norm().max(1.0)))
            .fold((usize::MAX, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best });
        if k != usize::MAX {
            used[k] = true;
        }
        worst = worst.max(d);
    }
    worst
}

fn has_multiple_root(roots: &[Complex64]) -> bool {
    roots.iter().enumerate().any(|(i, a)| roots[i + 1..].iter().any(|b| (a - b).norm() < 1e-6))
}

fn integer_resonance(roots: &[Complex64]) -> bool {
    let decaying: Vec<&Complex64> = roots.iter().filter(|z| z.re > 0.0).collect();
    decaying.iter().enumerate().any(|(i, a)| {
        decaying[i + 1..].iter().any(|b| {
            let d = *a - *b;
            d.im.abs() < 1e-12 && (d.re - d.re.round()).abs() < 1e-12
        })
    })
}

fn assemble(
    family: OperatorFamily,
    delta_bar: f64,
    delta_under: f64,
    nu_window: (f64, f64),
) -> Result<BoundarySpectrum> {
    let poly = family.polynomial();
    let roots = poly.closed_form_roots();
    let oracle = poly.companion_roots();
    let discrepancy = matches_oracle(&roots, &oracle);
    // A repeated root is only determined to ~√ε by any eigenvalue method.
    let tol = if has_multiple_root(&roots) { 1e-6 } else { ROOT_TOLERANCE };
    if discrepancy > tol {
        return Err(Error::RootMismatch(discrepancy));
    }
    let alpha_tilde_sq = match family {
        OperatorFamily::U { alpha } => Some(9.0 / 4.0 - 6.0 * alpha / (1.0 + alpha)),
        OperatorFamily::Q { .. } => None,
    };
    Ok(BoundarySpectrum {
        family,
        lambda_set: roots.iter().map(|z| 0.5 + z.re).collect(),
        oscillatory: roots.iter().map(|z| z.im != 0.0).collect(),
        log_terms_possible: integer_resonance(&roots),
        roots,
        delta_bar,
        delta_under,
        nu_window,
        alpha_tilde_sq,
        oracle_discrepancy: discrepancy,
    })
}

/// Boundary spectrum of the linearized constant-Q operator in dimension `n`.
///
/// Roots `{n, −1, (n−1)/2 ± i√(n²+2n−9)/2}`; `δ̄ = δ̲ = n/2`; Hölder window
/// `0 < ν < (n−1)/2`.
pub fn q_indicial_spectrum(dim: Dimension) -> Result<BoundarySpectrum> {
    let n = dim.nf();
    assemble(OperatorFamily::Q { n: dim.n() }, n / 2.0, n / 2.0, (0.0, (n - 1.0) / 2.0))
}

/// Boundary spectrum of the linearized U-operator (dimension four).
///
/// Roots `{4, −1, 3/2 ± α̃}` with `α̃² = 9/4 − 6α/(1+α)`;
/// `δ̄ = max(−1/2, 2 − Re α̃)`, `δ̲ = min(9/2, 2 + Re α̃)`.
pub fn u_indicial_spectrum(alpha: f64) -> Result<BoundarySpectrum> {
    if !alpha.is_finite() {
        return Err(Error::Precondition(format!("alpha must be finite (got {alpha})")));
    }
    if (alpha + 1.0).abs() < 1e-12 {
        return Err(Error::DegenerateAlpha);
    }
    let at2 = 9.0 / 4.0 - 6.0 * alpha / (1.0 + alpha);
    let re_at = if at2 > 0.0 { at2.sqrt() } else { 0.0 };
    let delta_bar = (-0.5_f64).max(2.0 - re_at);
    let delta_under = 4.5_f64.min(2.0 + re_at);
    // Essential surjectivity holds below the slowest decaying root, capped at 3/2.
    let slowest = OperatorFamily::U { alpha }
        .polynomial()
        .closed_form_roots()
        .iter()
        .filter(|z| z.re > 0.0)
        .map(|z| z.re)
        .fold(f64::INFINITY, f64::min);
    assemble(OperatorFamily::U { alpha }, delta_bar, delta_under, (0.0, slowest.min(1.5)))
}

/// Spectra of the transpose `L₀ᵗ` (`ζ ↦ −ζ−1`) and of the adjoint `L₀*` in
/// `t^δ L²` (`ζ ↦ −ζ + 2δ − 1`).
pub fn adjoint_spectra(spec: &BoundarySpectrum, delta: f64) -> (BoundarySpectrum, BoundarySpectrum) {
    let map = |f: &dyn Fn(Complex64) -> Complex64, bar: f64, under: f64| {
        let roots: Vec<Complex64> = spec.roots.iter().map(|z| f(*z)).collect();
        BoundarySpectrum {
            family: spec.family,
            lambda_set: roots.iter().map(|z| 0.5 + z.re).collect(),
            oscillatory: roots.iter().map(|z| z.im != 0.0).collect(),
            log_terms_possible: integer_resonance(&roots),
            roots,
            delta_bar: bar,
            delta_under: under,
            nu_window: spec.nu_window,
            alpha_tilde_sq: spec.alpha_tilde_sq,
            oracle_discrepancy: spec.oracle_discrepancy,
        }
    };
    let transpose = map(&|z| -z - 1.0, -spec.delta_under, -spec.delta_bar);
    let adjoint = map(&|z| -z + (2.0 * delta - 1.0), 2.0 * delta - spec.delta_under, 2.0 * delta - spec.delta_bar);
    (transpose, adjoint)
}

/// True when two root lists agree as sets (to `tol`).
pub fn same_root_set(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
    a.len() == b.len() && matches_oracle(a, b) <= tol
}
