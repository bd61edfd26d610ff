//! Contraction solver for prescribed Q-curvature near the hyperbolic metric.
//!
//! With `L = P − (n+4)/2·Q` (resp. `P − 8Q` for `n = 4`) the curvature
//! equation becomes `L u = 𝒯(u)`:
//!
//! ```text
//! n = 4:  𝒯(u) = 2f(e^{4u} − 1 − 4u) + 2(f − Q) + 8(f − Q)u,
//! n ≥ 5:  𝒯(u) = κf((1+u)^p − 1 − pu) + κ(f − Q) + (n+4)/2·(f − Q)u,
//! ```
//!
//! where `κ = (n−4)/2`, `p = (n+4)/(n−4)` and `g̃ = e^{2u}g` (n = 4) or
//! `g̃ = (1+u)^{4/(n−4)}g` (n ≥ 5). A kernel datum `u₁ = a·k̂` is fixed and the
//! correction is iterated as `u₂ ← G𝒯(u₁ + u₂)`, so that `P₁u = u₁`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::edge::{FactoredOperator, InjectiveInverse, KernelElement, ProjectionP1};
use crate::error::{Error, Result};
use crate::expansion::{fit_leading, weighted_norm, EnvelopeFit, ExpansionFit};
use crate::geometry::{hyperbolic_curvature_report, q_of_conformal_with, Dimension, RadialCalculus};
use crate::grid::{sup_dist, sup_norm, RadialFunction, RadialGrid};

/// Distance from the centre excluded from interior residuals (the composed
/// fourth-order stencil at the origin row is only consistent to low order).
pub const INTERIOR_INNER: f64 = 0.5;

/// Distance from `R_max` excluded from interior residuals (boundary closures
/// replace the equation on the outermost rows).
pub const INTERIOR_OUTER: f64 = 0.5;

/// Interior window `[INTERIOR_INNER, R_max − INTERIOR_OUTER]` used by residual checks.
pub fn interior_window(grid: &RadialGrid) -> (f64, f64) {
    (INTERIOR_INNER, grid.r_max() - INTERIOR_OUTER)
}

/// Prescribed curvature `f` together with its deviation from `Q_g`.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetCurvature {
    values: RadialFunction,
    background: f64,
    nu: f64,
    deviation_norm: f64,
    warnings: Vec<String>,
}

impl TargetCurvature {
    /// `f = background + deviation`, with the deviation measured in the
    /// discrete `x^ν`-weighted sup-norm. A deviation that does not decay
    /// like `x^ν` is accepted with a warning.
    pub fn from_deviation(background: f64, deviation: &RadialFunction, nu: f64) -> Result<Self> {
        if !nu.is_finite() {
            return Err(Error::Precondition(format!("deviation weight must be finite (got {nu})")));
        }
        let mut warnings = Vec::new();
        let wn = weighted_norm(deviation, nu, 0)?;
        let deviation_norm = match wn.value {
            Some(v) => v,
            None => {
                warnings
                    .push(format!("f − Q_g does not decay like x^{nu} (weighted growth rate {:.3e})", wn.growth_rate));
                f64::INFINITY
            }
        };
        let values = deviation.map(|d| background + d)?;
        Ok(Self { values, background, nu, deviation_norm, warnings })
    }

    /// The hyperbolic value `f ≡ Q_g` for dimension `dim`.
    pub fn hyperbolic(dim: Dimension, grid: Arc<RadialGrid>) -> Result<Self> {
        let q = hyperbolic_curvature_report(dim).q_hyp;
        let nu = default_nu(dim);
        Ok(Self {
            values: RadialFunction::constant(grid, q)?,
            background: q,
            nu,
            deviation_norm: 0.0,
            warnings: vec![],
        })
    }

    /// `f = Q_g(1 + η·sech²r)`: an `x²`-weighted bump (`sech²r ≈ 4x²` near
    /// the boundary) with admissibility checked for `dim`.
    pub fn sech_bump(dim: Dimension, grid: Arc<RadialGrid>, eta: f64, nu: f64) -> Result<Self> {
        check_nu(dim, nu)?;
        if nu > 2.0 {
            return Err(Error::Precondition(format!("sech² decays like x², slower than the requested x^{nu}")));
        }
        let q = hyperbolic_curvature_report(dim).q_hyp;
        let dev = RadialFunction::from_fn(grid, |r| q * eta / r.cosh().powi(2))?;
        Self::from_deviation(q, &dev, nu)
    }

    /// Sampled `f`.
    pub fn values(&self) -> &RadialFunction {
        &self.values
    }

    /// Background constant `Q_g`.
    pub fn background(&self) -> f64 {
        self.background
    }

    /// Deviation weight `ν`.
    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// `sup |x^{−ν}(f − Q_g)|` (`∞` when the deviation decays too slowly).
    pub fn deviation_norm(&self) -> f64 {
        self.deviation_norm
    }

    /// Admissibility warnings.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Whether `f ≡ Q_g` on the grid.
    pub fn is_background(&self) -> bool {
        self.values.values().iter().all(|v| *v == self.background)
    }
}

/// Default deviation weight `0.4(n−1)`, inside `((n−1)/4, (n−1)/2)`.
pub fn default_nu(dim: Dimension) -> f64 {
    0.4 * (dim.nf() - 1.0)
}

/// Enforces `ν ∈ ((n−1)/4, (n−1)/2)`.
pub fn check_nu(dim: Dimension, nu: f64) -> Result<()> {
    let n = dim.nf();
    let (lo, hi) = ((n - 1.0) / 4.0, (n - 1.0) / 2.0);
    if nu > lo && nu < hi {
        Ok(())
    } else {
        Err(Error::Precondition(format!("deviation weight ν = {nu} must lie in ({lo}, {hi}) for n = {}", dim.n())))
    }
}

/// Iteration parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationConfig {
    /// Bound on the kernel amplitude.
    pub epsilon: f64,
    /// Stopping tolerance on the sup-norm of increments.
    pub tol: f64,
    /// Iteration cap.
    pub max_iter: usize,
    /// Weight used in diagnostics.
    pub nu: Option<f64>,
}

impl Default for IterationConfig {
    fn default() -> Self {
        Self { epsilon: 1e-3, tol: 1e-10, max_iter: 50, nu: None }
    }
}

impl IterationConfig {
    /// Checks `epsilon > 0`, `tol > 0`, `max_iter ≥ 1`.
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Precondition(format!("epsilon must be positive (got {})", self.epsilon)));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::Precondition(format!("tol must be positive (got {})", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::Precondition("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// Advisory smallness conditions evaluated with measured constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmallnessCheck {
    /// Measured operator norm of `G` (sup-norm, over probe functions).
    pub inverse_norm: f64,
    /// `16·‖G‖·ε·|Q_g|` (the kernel-amplitude condition; informational,
    /// since the probe bound on `‖G‖` is far from sharp).
    pub kernel_condition: f64,
    /// Measured norm of the linearized fixed-point map on the ball of radius `2ε`.
    pub predicted_ratio: f64,
    /// Deviation allowance `1/(8·C₀·‖G‖)`, `C₀` the coefficient of `f − Q` in `𝒯`.
    pub deviation_bound: f64,
    /// Sup-norm of `f − Q_g`.
    pub deviation: f64,
    /// `predicted_ratio < 1/2` and `deviation ≤ deviation_bound`.
    pub satisfied: bool,
}

/// Outcome of a contraction solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    /// Increments fell below `tol` within `max_iter` steps with a last ratio below one.
    pub converged: bool,
    /// Number of fixed-point steps taken.
    pub iterations: usize,
    /// `sup|u₂^{(k+1)} − u₂^{(k)}|` per step.
    pub increments: Vec<f64>,
    /// Successive increment ratios.
    pub contraction_ratios: Vec<f64>,
    /// Last increment (the fixed-point residual; `≤ tol` when converged).
    pub fixed_point_residual: f64,
    /// Sup of the curvature-equation residual on the interior window.
    pub equation_residual: f64,
    /// Sup over the interior window of the recomputed curvature minus its target.
    pub curvature_deviation: f64,
    /// Requested kernel amplitude.
    pub amplitude: f64,
    /// `P₁` amplitude re-fitted from the solution.
    pub fitted_amplitude: f64,
    /// Sup-norm of the correction `u₂`.
    pub correction_norm: f64,
    /// Leading boundary fit of the solution (when the window permits).
    pub expansion: Option<ExpansionFit>,
    /// Free envelope/frequency fit on the kernel window (U solves).
    pub envelope: Option<EnvelopeFit>,
    /// Measured smallness constants.
    pub smallness: SmallnessCheck,
    /// Logarithmic boundary terms cannot be excluded.
    pub log_terms_possible: bool,
    /// Reason the iteration stopped early (domain violation, overflow).
    pub failure: Option<String>,
    /// Advisory messages.
    pub warnings: Vec<String>,
}

/// Inverse of the linearized operator used by the iteration.
#[derive(Debug, Clone)]
pub enum LinearInverse {
    /// `G` with `GL = I − P₁` (a decaying radial kernel exists).
    Generalized(ProjectionP1),
    /// `L⁻¹` (no radial kernel).
    Injective(InjectiveInverse),
}

impl LinearInverse {
    /// Builds `G` when the operator has a radial kernel, `L⁻¹` otherwise.
    pub fn for_operator(op: &FactoredOperator) -> Result<Self> {
        match op.projection() {
            Ok(p) => Ok(Self::Generalized(p)),
            Err(Error::NoKernel(_)) => Ok(Self::Injective(op.injective_inverse()?)),
            Err(e) => Err(e),
        }
    }

    /// Applies the inverse.
    pub fn apply(&self, op: &FactoredOperator, f: &[f64]) -> Result<Vec<f64>> {
        match self {
            Self::Generalized(p) => op.generalized_inverse(f, p),
            Self::Injective(inv) => op.solve_injective(f, inv),
        }
    }

    /// Kernel element (generalized case).
    pub fn kernel(&self) -> Option<&KernelElement> {
        match self {
            Self::Generalized(p) => Some(p.kernel()),
            Self::Injective(_) => None,
        }
    }

    /// Projection `P₁` (generalized case).
    pub fn projection(&self) -> Option<&ProjectionP1> {
        match self {
            Self::Generalized(p) => Some(p),
            Self::Injective(_) => None,
        }
    }

    /// `P₁` amplitude of `u` (zero without a kernel).
    pub fn amplitude(&self, u: &[f64]) -> f64 {
        self.projection().map_or(0.0, |p| p.amplitude(u))
    }

    /// `u₁ = a·k̂`; fails for nonzero `a` without a kernel.
    pub fn kernel_datum(&self, amplitude: f64, len: usize) -> Result<Vec<f64>> {
        match self.kernel() {
            Some(k) => Ok(k.base.values().iter().map(|v| amplitude * v).collect()),
            None if amplitude == 0.0 => Ok(vec![0.0; len]),
            None => Err(Error::NoKernel(format!("cannot prescribe kernel amplitude {amplitude}"))),
        }
    }
}

/// Measured sup-norm bound of the inverse over smooth decaying probes.
pub fn measure_inverse_norm(op: &FactoredOperator, inverse: &LinearInverse) -> Result<f64> {
    let r = op.grid().r();
    let probes: [Box<dyn Fn(f64) -> f64>; 3] = [
        Box::new(|t: f64| 1.0 / t.cosh().powi(2)),
        Box::new(|t: f64| (t).cos() / (t / 2.0).cosh().powi(2)),
        Box::new(|t: f64| (-(t - 3.0).powi(2)).exp()),
    ];
    let mut best: f64 = 0.0;
    for p in probes.iter() {
        let f: Vec<f64> = r.iter().map(|&t| p(t)).collect();
        let g = inverse.apply(op, &f)?;
        best = best.max(sup_norm(&g) / sup_norm(&f));
    }
    Ok(best)
}

/// Trace of a contraction iteration `u₂ ← G(rhs(u₁ + u₂))`.
#[derive(Debug, Clone)]
pub(crate) struct IterationTrace {
    pub correction: Vec<f64>,
    pub increments: Vec<f64>,
    pub ratios: Vec<f64>,
    pub converged: bool,
    pub failure: Option<String>,
}

/// Runs the contraction from `initial` (zero when `None`).
pub(crate) fn contraction_iterate(
    op: &FactoredOperator,
    inverse: &LinearInverse,
    u1: &[f64],
    initial: Option<&[f64]>,
    cfg: &IterationConfig,
    rhs: impl Fn(&[f64]) -> Result<Vec<f64>>,
) -> Result<IterationTrace> {
    let len = u1.len();
    let mut u2 = match initial {
        Some(v) if v.len() != len => return Err(Error::LengthMismatch { expected: len, got: v.len() }),
        Some(v) => v.to_vec(),
        None => vec![0.0; len],
    };
    let mut increments = Vec::new();
    let mut ratios = Vec::new();
    let mut failure = None;
    let mut converged = false;
    for _ in 0..cfg.max_iter {
        let u: Vec<f64> = u1.iter().zip(&u2).map(|(a, b)| a + b).collect();
        let t = match rhs(&u) {
            Ok(t) => t,
            Err(e @ Error::Domain { .. }) => {
                failure = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        };
        if t.iter().any(|v| !v.is_finite()) {
            failure = Some("nonlinear term overflowed".into());
            break;
        }
        let next = inverse.apply(op, &t)?;
        let inc = sup_dist(&next, &u2);
        if let Some(prev) = increments.last() {
            let prev: f64 = *prev;
            ratios.push(if prev > 0.0 { inc / prev } else { 0.0 });
        }
        increments.push(inc);
        u2 = next;
        if !inc.is_finite() {
            failure = Some("iterate overflowed".into());
            break;
        }
        if inc < cfg.tol {
            converged = ratios.last().is_none_or(|r| *r < 1.0);
            break;
        }
    }
    Ok(IterationTrace { correction: u2, increments, ratios, converged, failure })
}

/// `𝒯(u)` on raw values for target values `f` with background `q`.
pub fn nonlinear_map(dim: Dimension, f: &[f64], q: f64, u: &[f64], r: &[f64]) -> Result<Vec<f64>> {
    if f.len() != u.len() {
        return Err(Error::LengthMismatch { expected: u.len(), got: f.len() });
    }
    if dim.is_critical() {
        Ok(u.iter()
            .zip(f)
            .map(|(&v, &fv)| 2.0 * fv * ((4.0 * v).exp_m1() - 4.0 * v) + 2.0 * (fv - q) + 8.0 * (fv - q) * v)
            .collect())
    } else {
        let n = dim.nf();
        let kappa = (n - 4.0) / 2.0;
        let p = (n + 4.0) / (n - 4.0);
        let mut out = Vec::with_capacity(u.len());
        for (i, (&v, &fv)) in u.iter().zip(f).enumerate() {
            if 1.0 + v <= 0.0 {
                return Err(Error::Domain { index: i, r: r[i], value: 1.0 + v });
            }
            let power = (p * v.ln_1p()).exp_m1() - p * v;
            out.push(kappa * fv * power + kappa * (fv - q) + (n + 4.0) / 2.0 * (fv - q) * v);
        }
        Ok(out)
    }
}

/// `d𝒯/du` at a point, for target value `f` and background `q`.
pub fn nonlinear_derivative(dim: Dimension, f: f64, q: f64, u: f64) -> f64 {
    if dim.is_critical() {
        8.0 * f * (4.0 * u).exp_m1() + 8.0 * (f - q)
    } else {
        let n = dim.nf();
        let kappa = (n - 4.0) / 2.0;
        let p = (n + 4.0) / (n - 4.0);
        let base = (1.0 + u).max(f64::MIN_POSITIVE);
        kappa * f * p * ((p - 1.0) * base.ln()).exp_m1() + (n + 4.0) / 2.0 * (f - q)
    }
}

/// Power-iteration estimate of the sup-norm growth of `φ ↦ G(D φ)` for a
/// linear map `D` (the linearized nonlinearity).
pub(crate) fn power_ratio(
    op: &FactoredOperator,
    inverse: &LinearInverse,
    linearized: impl Fn(&[f64]) -> Result<Vec<f64>>,
) -> Result<f64> {
    let r = op.grid().r();
    let mut phi: Vec<f64> = r.iter().map(|t| 1.0 / t.cosh()).collect();
    let mut ratio = 0.0;
    for _ in 0..6 {
        let norm = sup_norm(&phi);
        if norm == 0.0 {
            return Ok(0.0);
        }
        let unit: Vec<f64> = phi.iter().map(|p| p / norm).collect();
        let d = linearized(&unit)?;
        if d.iter().all(|v| *v == 0.0) {
            return Ok(0.0);
        }
        phi = inverse.apply(op, &d)?;
        ratio = sup_norm(&phi);
    }
    Ok(ratio)
}

/// `𝒯(u₁ + u₂)` pointwise.
pub fn nonlinear_rhs(
    u1: &KernelElement,
    u2: &RadialFunction,
    f: &TargetCurvature,
    dim: Dimension,
) -> Result<RadialFunction> {
    let u = u1.profile.lin_comb(1.0, u2, 1.0)?;
    let vals = nonlinear_map(dim, f.values().values(), f.background(), u.values(), u.grid().r())?;
    u.with_values(vals)
}

/// Pointwise `ℰ(u)`: `P u + 2Q − 2f e^{4u}` (n = 4) or
/// `P u + κQ − κf(1+u)^p` (n ≥ 5).
pub fn equation_residual_profile(calc: &RadialCalculus, u: &[f64], f: &[f64]) -> Result<Vec<f64>> {
    let dim = calc.dim();
    let k = hyperbolic_curvature_report(dim);
    let pu = calc.paneitz(u);
    if dim.is_critical() {
        Ok(pu.iter().zip(u).zip(f).map(|((p, v), fv)| p + 2.0 * k.q_hyp - 2.0 * fv * (4.0 * v).exp()).collect())
    } else {
        let n = dim.nf();
        let kappa = (n - 4.0) / 2.0;
        let expo = (n + 4.0) / (n - 4.0);
        let mut out = Vec::with_capacity(u.len());
        for (i, ((p, v), fv)) in pu.iter().zip(u).zip(f).enumerate() {
            if 1.0 + v <= 0.0 {
                return Err(Error::Domain { index: i, r: calc.grid().r()[i], value: 1.0 + v });
            }
            out.push(p + kappa * k.q_hyp - kappa * fv * (1.0 + v).powf(expo));
        }
        Ok(out)
    }
}

/// Sup over the interior window of `|ℰ(u)|`.
pub fn e_residual(u: &RadialFunction, f: &TargetCurvature, dim: Dimension) -> Result<f64> {
    let calc = RadialCalculus::new(u.grid().clone(), dim)?;
    let e = equation_residual_profile(&calc, u.values(), f.values().values())?;
    let (lo, hi) = interior_window(u.grid());
    Ok(sup_norm(&e[u.grid().window(lo, hi)]))
}

/// Prebuilt machinery for Q solves on one grid: the factored operator, its
/// inverse and measured constants.
#[derive(Debug, Clone)]
pub struct QSolver {
    dim: Dimension,
    op: FactoredOperator,
    inverse: LinearInverse,
    inverse_norm: f64,
    log_terms_possible: bool,
}

impl QSolver {
    /// Assembles the machinery for `dim` on `grid`.
    pub fn new(dim: Dimension, grid: Arc<RadialGrid>) -> Result<Self> {
        let op = FactoredOperator::for_dimension(dim, grid)?;
        let inverse = LinearInverse::for_operator(&op)?;
        let inverse_norm = measure_inverse_norm(&op, &inverse)?;
        let log_terms_possible = crate::indicial::q_indicial_spectrum(dim)?.log_terms_possible;
        Ok(Self { dim, op, inverse, inverse_norm, log_terms_possible })
    }

    /// Dimension.
    pub fn dim(&self) -> Dimension {
        self.dim
    }

    /// Grid.
    pub fn grid(&self) -> &Arc<RadialGrid> {
        self.op.grid()
    }

    /// The factored linearized operator.
    pub fn operator(&self) -> &FactoredOperator {
        &self.op
    }

    /// The inverse used by the iteration.
    pub fn inverse(&self) -> &LinearInverse {
        &self.inverse
    }

    /// Normalized kernel element `k̂`.
    pub fn kernel(&self) -> Result<&KernelElement> {
        self.inverse.kernel().ok_or_else(|| Error::NoKernel("Q operator without radial kernel".into()))
    }

    /// Measured `‖G‖` (sup-norm).
    pub fn inverse_norm(&self) -> f64 {
        self.inverse_norm
    }

    /// Smallness conditions for amplitude bound `epsilon` and target `f`.
    ///
    /// The contraction ratio is predicted by power iteration of
    /// `φ ↦ G(𝒯′(u)·φ)` with `|𝒯′|` taken at `u = ±2ε·k̂` (the edge of the
    /// ball the iteration lives in).
    pub fn smallness(&self, epsilon: f64, f: &TargetCurvature) -> Result<SmallnessCheck> {
        let q = f.background();
        let fv = f.values().values();
        let dev = fv.iter().fold(0.0_f64, |m, v| m.max((v - q).abs()));
        let c0 = if self.dim.is_critical() { 2.0 } else { (self.dim.nf() - 4.0) / 2.0 };
        let edge = self.inverse.kernel_datum(2.0 * epsilon, fv.len()).unwrap_or_else(|_| vec![0.0; fv.len()]);
        let multiplier: Vec<f64> = edge
            .iter()
            .zip(fv)
            .map(|(&u, &fi)| {
                let d = |v: f64| nonlinear_derivative(self.dim, fi, q, v).abs();
                d(u).max(d(-u))
            })
            .collect();
        let predicted_ratio =
            power_ratio(&self.op, &self.inverse, |phi| Ok(phi.iter().zip(&multiplier).map(|(p, m)| p * m).collect()))?;
        let kernel_condition = 16.0 * self.inverse_norm * epsilon * q.abs();
        let deviation_bound = 1.0 / (8.0 * c0 * self.inverse_norm);
        Ok(SmallnessCheck {
            inverse_norm: self.inverse_norm,
            kernel_condition,
            predicted_ratio,
            deviation_bound,
            deviation: dev,
            satisfied: predicted_ratio < 0.5 && dev <= deviation_bound,
        })
    }

    /// Solves `L(u₁ + u₂) = 𝒯(u₁ + u₂)` with `u₁ = amplitude·k̂`, starting the
    /// correction from `initial` (zero when `None`).
    pub fn solve_from(
        &self,
        amplitude: f64,
        f: &TargetCurvature,
        cfg: &IterationConfig,
        initial: Option<&[f64]>,
    ) -> Result<(SolveReport, RadialFunction)> {
        cfg.validate()?;
        if !amplitude.is_finite() {
            return Err(Error::Precondition(format!("amplitude must be finite (got {amplitude})")));
        }
        let grid = self.grid().clone();
        if f.values().values().len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), got: f.values().values().len() });
        }
        if let Some(nu) = cfg.nu {
            check_nu(self.dim, nu)?;
        }
        let mut warnings: Vec<String> = f.warnings().to_vec();
        if amplitude.abs() > cfg.epsilon {
            warnings.push(format!("amplitude {amplitude:e} exceeds the bound ε = {:e}", cfg.epsilon));
        }
        let smallness = self.smallness(cfg.epsilon.max(amplitude.abs()), f)?;
        if !smallness.satisfied {
            warnings.push("measured smallness conditions do not hold; convergence is not guaranteed".into());
        }
        let u1 = self.inverse.kernel_datum(amplitude, grid.len())?;
        let fv = f.values().values().to_vec();
        let q = f.background();
        let r = grid.r().to_vec();
        let dim = self.dim;
        let trace =
            contraction_iterate(&self.op, &self.inverse, &u1, initial, cfg, |u| nonlinear_map(dim, &fv, q, u, &r))?;
        let u: Vec<f64> = u1.iter().zip(&trace.correction).map(|(a, b)| a + b).collect();
        let solution = RadialFunction::new(grid.clone(), u)?;
        let (lo, hi) = interior_window(&grid);
        let window = grid.window(lo, hi);
        let calc = self.op.calculus();
        let (equation_residual, curvature_deviation) = match equation_residual_profile(calc, solution.values(), &fv) {
            Ok(e) => {
                let qt = q_of_conformal_with(calc, solution.values())?;
                let dev = window.clone().fold(0.0_f64, |m, i| m.max((qt[i] - fv[i]).abs()));
                (sup_norm(&e[window.clone()]), dev)
            }
            Err(_) => (f64::INFINITY, f64::INFINITY),
        };
        let expansion = if trace.converged { fit_leading(&solution, dim, None).ok() } else { None };
        let report = SolveReport {
            converged: trace.converged && trace.failure.is_none(),
            iterations: trace.increments.len(),
            fixed_point_residual: trace.increments.last().copied().unwrap_or(0.0),
            increments: trace.increments,
            contraction_ratios: trace.ratios,
            equation_residual,
            curvature_deviation,
            amplitude,
            fitted_amplitude: self.inverse.amplitude(solution.values()),
            correction_norm: sup_norm(&trace.correction),
            expansion,
            envelope: None,
            smallness,
            log_terms_possible: self.log_terms_possible,
            failure: trace.failure,
            warnings,
        };
        Ok((report, solution))
    }

    /// [`QSolver::solve_from`] with zero initial correction.
    pub fn solve(
        &self,
        amplitude: f64,
        f: &TargetCurvature,
        cfg: &IterationConfig,
    ) -> Result<(SolveReport, RadialFunction)> {
        self.solve_from(amplitude, f, cfg, None)
    }
}

/// One-shot solve: assembles a [`QSolver`] on the grid of `f`.
pub fn fixed_point_solve(
    amplitude: f64,
    f: &TargetCurvature,
    cfg: &IterationConfig,
    dim: Dimension,
) -> Result<(SolveReport, RadialFunction)> {
    QSolver::new(dim, f.values().grid().clone())?.solve(amplitude, f, cfg)
}

/// One entry of a family sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepEntry {
    /// Kernel amplitude.
    pub amplitude: f64,
    /// Solve report, or `None` when the entry failed.
    pub report: Option<SolveReport>,
    /// Error message of a failed entry.
    pub error: Option<String>,
}

/// Result of [`sweep_family`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    /// Entries in input order.
    pub entries: Vec<SweepEntry>,
    /// `‖u_a − u_b‖_sup` for every pair (`None` when either entry failed).
    pub pairwise_distances: Vec<Vec<Option<f64>>>,
    /// `‖k̂‖_sup`.
    pub kernel_sup: f64,
}

/// Independent solves for each amplitude (in parallel, reported in input order).
pub fn sweep_family(
    solver: &QSolver,
    amplitudes: &[f64],
    f: &TargetCurvature,
    cfg: &IterationConfig,
) -> Result<(SweepReport, Vec<Option<RadialFunction>>)> {
    let results: Vec<Result<(SolveReport, RadialFunction)>> =
        amplitudes.par_iter().map(|&a| solver.solve(a, f, cfg)).collect();
    let mut entries = Vec::with_capacity(amplitudes.len());
    let mut solutions = Vec::with_capacity(amplitudes.len());
    for (&amplitude, res) in amplitudes.iter().zip(results) {
        match res {
            Ok((report, u)) => {
                entries.push(SweepEntry { amplitude, report: Some(report), error: None });
                solutions.push(Some(u));
            }
            Err(e) => {
                entries.push(SweepEntry { amplitude, report: None, error: Some(e.to_string()) });
                solutions.push(None);
            }
        }
    }
    let pairwise_distances = solutions
        .iter()
        .map(|a| {
            solutions
                .iter()
                .map(|b| match (a, b) {
                    (Some(a), Some(b)) => Some(sup_dist(a.values(), b.values())),
                    _ => None,
                })
                .collect()
        })
        .collect();
    let kernel_sup = solver.kernel().map_or(0.0, |k| k.base.sup_norm());
    Ok((SweepReport { entries, pairwise_distances, kernel_sup }, solutions))
}
