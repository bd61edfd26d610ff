//! Modified Bessel functions of complex order and the explicit solutions of
//! the model (normal) operators.
//!
//! `I_α(t)` is summed from its ascending series with compensated accumulation.
//! `K_α(t)` is evaluated from `K_α(t) = ∫₀^∞ e^{−t cosh s} cosh(αs) ds` with
//! the trapezoidal rule. The integrand is analytic in a strip and decays
//! doubly exponentially, so the rule converges geometrically. This avoids
//! the catastrophic cancellation of `π/2·(I_{−α} − I_α)/sin(απ)` at large
//! `t` and near integer orders; the reflection formula is kept as a
//! cross-check ([`bessel_k_reflection`]).
//!
//! Each model factor `θ² − (n−1)θ − t² − c` (`θ = t∂_t`) is reduced by
//! `u = t^p Z(t)`, `p = (n−1)/2`, to Bessel's equation of order
//! `α = √(p² + c)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Beyond this argument values are reported with an explicit `e^{∓t}` scaling.
pub const SCALING_THRESHOLD: f64 = 30.0;
/// Largest argument accepted by the series.
pub const MAX_ARGUMENT: f64 = 600.0;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Γ(z) for complex `z` (Lanczos approximation with reflection).
pub fn gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        let s = (z * PI).sin();
        Complex64::new(PI, 0.0) / (s * gamma(Complex64::new(1.0, 0.0) - z))
    } else {
        let z = z - 1.0;
        let mut x = Complex64::new(LANCZOS[0], 0.0);
        for (i, c) in LANCZOS.iter().enumerate().skip(1) {
            x += *c / (z + i as f64);
        }
        let t = z + LANCZOS_G + 0.5;
        (2.0 * PI).sqrt() * t.powc(z + 0.5) * (-t).exp() * x
    }
}

/// 1/Γ(z), exactly zero at the poles `z = 0, −1, −2, …`.
pub fn rgamma(z: Complex64) -> Complex64 {
    if z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round() {
        return Complex64::new(0.0, 0.0);
    }
    if z.re < 0.5 {
        // 1/Γ(z) = Γ(1−z)·sin(πz)/π, avoiding the division by sin.
        gamma(Complex64::new(1.0, 0.0) - z) * (z * PI).sin() / PI
    } else {
        1.0 / gamma(z)
    }
}

/// Error-free transformation `a + b = s + e`.
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Compensated complex accumulator (double-double on each component).
#[derive(Debug, Clone, Copy, Default)]
struct Compensated {
    re: (f64, f64),
    im: (f64, f64),
}

impl Compensated {
    fn add(&mut self, z: Complex64) {
        let (s, e) = two_sum(self.re.0, z.re);
        self.re = (s, self.re.1 + e);
        let (s, e) = two_sum(self.im.0, z.im);
        self.im = (s, self.im.1 + e);
    }

    fn value(&self) -> Complex64 {
        Complex64::new(self.re.0 + self.re.1, self.im.0 + self.im.1)
    }
}

/// A Bessel value, possibly carrying an exponential scaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BesselValue {
    /// The value (times `e^{−t}` for I, `e^{t}` for K when `scaled`).
    pub value: Complex64,
    /// True when the exponential scaling has been applied.
    pub scaled: bool,
}

fn check_argument(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Precondition(format!("Bessel argument must be positive and finite (got {t})")));
    }
    if t > MAX_ARGUMENT {
        return Err(Error::Precondition(format!("Bessel argument {t} exceeds {MAX_ARGUMENT}")));
    }
    Ok(())
}

fn is_negative_integer(a: Complex64) -> bool {
    a.im == 0.0 && a.re < 0.0 && a.re == a.re.round()
}

/// Unscaled ascending series of `I_α(t)`.
fn bessel_i_series(alpha: Complex64, t: f64) -> Complex64 {
    // I_{−m} = I_m for integers m.
    let alpha = if is_negative_integer(alpha) { -alpha } else { alpha };
    let q = t * t / 4.0;
    let mut term = Complex64::new(t / 2.0, 0.0).powc(alpha) * rgamma(alpha + 1.0);
    let mut acc = Compensated::default();
    acc.add(term);
    let mut k = 1.0;
    loop {
        term = term * q / (k * (alpha + k));
        acc.add(term);
        let v = acc.value().norm();
        if k > t && term.norm() <= 1e-18 * v.max(f64::MIN_POSITIVE) {
            break;
        }
        if k > 4.0 * (t + 60.0) {
            break;
        }
        k += 1.0;
    }
    acc.value()
}

/// `I_α(t)` for complex order; scaled by `e^{−t}` beyond [`SCALING_THRESHOLD`].
pub fn bessel_i(alpha: Complex64, t: f64) -> Result<BesselValue> {
    check_argument(t)?;
    let v = bessel_i_series(alpha, t);
    Ok(if t > SCALING_THRESHOLD {
        BesselValue { value: v * (-t).exp(), scaled: true }
    } else {
        BesselValue { value: v, scaled: false }
    })
}

/// `e^{t}·K_α(t)` by the trapezoidal rule on `∫₀^∞ e^{−t(cosh s − 1)} cosh(αs) ds`.
fn bessel_k_scaled_integral(alpha: Complex64, t: f64) -> Complex64 {
    let h = 0.02;
    let mut acc = Compensated::default();
    let mut s: f64 = 0.0;
    let mut k = 0usize;
    loop {
        let decay = -t * (s.cosh() - 1.0);
        let grow = alpha.re.abs() * s;
        let w = if k == 0 { 0.5 } else { 1.0 };
        acc.add((alpha * s).cosh() * (decay.exp() * w));
        if decay + grow < -745.0 || s > 60.0 {
            break;
        }
        k += 1;
        s = k as f64 * h;
    }
    acc.value() * h
}

/// `K_α(t)` for complex order; scaled by `e^{t}` beyond [`SCALING_THRESHOLD`].
pub fn bessel_k(alpha: Complex64, t: f64) -> Result<BesselValue> {
    check_argument(t)?;
    let scaled = bessel_k_scaled_integral(alpha, t);
    Ok(if t > SCALING_THRESHOLD {
        BesselValue { value: scaled, scaled: true }
    } else {
        BesselValue { value: scaled * (-t).exp(), scaled: false }
    })
}

/// `K_α(t) = π/2·(I_{−α}(t) − I_α(t))/sin(απ)`, for non-integer order.
///
/// Loses roughly `2t/ln 10` digits to cancellation; intended as an oracle
/// for moderate arguments.
pub fn bessel_k_reflection(alpha: Complex64, t: f64) -> Result<Complex64> {
    check_argument(t)?;
    let s = (alpha * PI).sin();
    if s.norm() < 1e-3 {
        return Err(Error::Precondition(format!(
            "order {alpha} is too close to an integer for the reflection formula"
        )));
    }
    Ok((bessel_i_series(-alpha, t) - bessel_i_series(alpha, t)) * (PI / 2.0) / s)
}

/// Value and first two derivatives of a Bessel-type function at `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    /// Z(t).
    pub value: Complex64,
    /// Z'(t).
    pub d1: Complex64,
    /// Z''(t).
    pub d2: Complex64,
}

/// Kind of modified Bessel function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BesselKind {
    /// `I_α`: grows exponentially as `t → ∞`.
    I,
    /// `K_α`: decays exponentially as `t → ∞`.
    K,
}

fn unscaled(kind: BesselKind, alpha: Complex64, t: f64) -> Result<Complex64> {
    check_argument(t)?;
    Ok(match kind {
        BesselKind::I => bessel_i_series(alpha, t),
        BesselKind::K => bessel_k_scaled_integral(alpha, t) * (-t).exp(),
    })
}

/// `Z_α`, `Z_α'`, `Z_α''` from the recurrences
/// `I' = (I_{α−1} + I_{α+1})/2`, `K' = −(K_{α−1} + K_{α+1})/2` and their iterates.
pub fn bessel_jet(kind: BesselKind, alpha: Complex64, t: f64) -> Result<Jet> {
    let z = |a: Complex64| unscaled(kind, a, t);
    let (m2, m1, z0, p1, p2) = (z(alpha - 2.0)?, z(alpha - 1.0)?, z(alpha)?, z(alpha + 1.0)?, z(alpha + 2.0)?);
    let sign = match kind {
        BesselKind::I => 1.0,
        BesselKind::K => -1.0,
    };
    Ok(Jet { value: z0, d1: (m1 + p1) * (0.5 * sign), d2: (m2 + z0 * 2.0 + p2) * 0.25 })
}

/// Which model factor a solution belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "factor", rename_all = "snake_case")]
pub enum ModelFactor {
    /// `θ² − (n−1)θ − t² − n` (from `Δ − n`).
    L1 {
        /// Dimension.
        n: usize,
    },
    /// `θ² − (n−1)θ − t² + (n²−4)/2` (from `Δ + (n²−4)/2`).
    L2 {
        /// Dimension.
        n: usize,
    },
    /// `θ² − 3θ − t² + 6α/(1+α)` (from `(1+α)Δ + 6α`, dimension four).
    L3 {
        /// U-curvature parameter.
        alpha: f64,
    },
}

impl ModelFactor {
    /// `(n−1, c)` in `θ² − (n−1)θ − t² − c`.
    fn coefficients(&self) -> Result<(f64, f64)> {
        match *self {
            ModelFactor::L1 { n } | ModelFactor::L2 { n } if n < 4 => Err(Error::Dimension(n as i64)),
            ModelFactor::L1 { n } => Ok((n as f64 - 1.0, n as f64)),
            ModelFactor::L2 { n } => {
                let nf = n as f64;
                Ok((nf - 1.0, -(nf * nf - 4.0) / 2.0))
            }
            ModelFactor::L3 { alpha } => {
                if (alpha + 1.0).abs() < 1e-12 {
                    Err(Error::DegenerateAlpha)
                } else {
                    Ok((3.0, -6.0 * alpha / (1.0 + alpha)))
                }
            }
        }
    }
}

/// One solution `t^p·Z_α(t)` of a model factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelSolution {
    /// Model factor.
    pub factor: ModelFactor,
    /// I-type (growing) or K-type (decaying).
    pub kind: BesselKind,
    /// Prefactor exponent `p = (n−1)/2`.
    pub prefactor: f64,
    /// Bessel order `α = √(p² + c)` (principal branch).
    pub order: Complex64,
    /// `c` in `θ² − (n−1)θ − t² − c`.
    pub model_constant: f64,
}

impl ModelSolution {
    /// Value at `t`.
    pub fn eval(&self, t: f64) -> Result<Complex64> {
        Ok(unscaled(self.kind, self.order, t)? * t.powf(self.prefactor))
    }

    /// Leading small-`t` exponent: `p + Re α` (I-type) or `p − Re α` (K-type).
    pub fn small_t_exponent(&self) -> f64 {
        match self.kind {
            BesselKind::I => self.prefactor + self.order.re,
            BesselKind::K => self.prefactor - self.order.re,
        }
    }

    /// Weights `δ` with `t^{−δ}u ∈ L²(dt)` near `t = 0` are those below this
    /// threshold (`small_t_exponent + 1/2`).
    pub fn membership_threshold(&self) -> f64 {
        self.small_t_exponent() + 0.5
    }

    /// Pointwise relative residual of the model operator at `t`:
    /// `|L u| / (sum of the magnitudes of the terms of L u)`.
    pub fn pointwise_residual(&self, t: f64) -> Result<f64> {
        let (m, c) = self.factor.coefficients()?;
        let j = bessel_jet(self.kind, self.order, t)?;
        let p = self.prefactor;
        let tp = t.powf(p);
        // θu = t^p(pZ + tZ'),  θ²u = t^p(p²Z + (2p+1)tZ' + t²Z'').
        let u = j.value * tp;
        let th = (j.value * p + j.d1 * t) * tp;
        let th2 = (j.value * (p * p) + j.d1 * ((2.0 * p + 1.0) * t) + j.d2 * (t * t)) * tp;
        let lu = th2 - th * m - u * (t * t + c);
        let scale = th2.norm() + (th * m).norm() + (u * (t * t)).norm() + (u * c).norm();
        Ok(if scale == 0.0 { 0.0 } else { lu.norm() / scale })
    }
}

/// The two-solution basis `t^p·{I_α, K_α}` of a model factor.
pub fn model_solutions(factor: ModelFactor) -> Result<Vec<ModelSolution>> {
    let (m, c) = factor.coefficients()?;
    let p = m / 2.0;
    let order = Complex64::new(p * p + c, 0.0).sqrt();
    Ok([BesselKind::I, BesselKind::K]
        .into_iter()
        .map(|kind| ModelSolution { factor, kind, prefactor: p, order, model_constant: c })
        .collect())
}

/// Supremum of the relative model residual over `n_samples` equispaced
/// points of `[t_lo, t_hi]`.
pub fn model_residual(sol: &ModelSolution, t_lo: f64, t_hi: f64, n_samples: usize) -> Result<f64> {
    if !(t_lo > 0.0 && t_hi > t_lo) || n_samples < 2 {
        return Err(Error::Window(format!("invalid residual window [{t_lo}, {t_hi}] with {n_samples} samples")));
    }
    let mut worst = 0.0_f64;
    for k in 0..n_samples {
        let t = t_lo + (t_hi - t_lo) * k as f64 / (n_samples - 1) as f64;
        worst = worst.max(sol.pointwise_residual(t)?);
    }
    Ok(worst)
}
