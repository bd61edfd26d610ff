//! U-curvature of four-dimensional conformal metrics `g̃ = e^{2w}g` on the
//! hyperbolic ball and the constant-U problem.
//!
//! `U = γ₁|W|² + γ₂Q − γ₃ΔR` with `α = γ₂/(12γ₃)`. On the model `W = 0`,
//! `ΔR = 0`, `Q = 3`, so `U(g) = 3γ₂ = 36αγ₃`. The conformal law reads
//!
//! ```text
//! Ũe^{4w}/(6γ₃) = (1+α)Δ²w + Δ|∇w|² − 2∇^i[(Δw + |∇w|²)∇_iw]
//!                + 2α Ric(∇,∇)w + (1/3 − 2α/3)RΔw + U/(6γ₃),
//! ```
//!
//! and, expanded, `(1+α)Δ²w + (2α−4)Δw + N(w) + U/(6γ₃)` with
//!
//! ```text
//! N(w) = 2Ric(∇w,∇w) + 2(|∇²w|² − (Δw)²) − 4∇²w(∇w,∇w) − 2|∇w|²Δw.
//! ```
//!
//! Radially, with `q = coth r·w'`: `Ric(∇w,∇w) = −3w'²`,
//! `|∇²w|² = w''² + 3q²`, `Δw = w'' + 3q`, `∇²w(∇w,∇w) = w''w'²`.
//! The linearization at `w = 0` is `L = ((1+α)Δ + 6α)(Δ − 4)`, and the
//! equation `L w = 𝒯(w)` has
//! `𝒯(w) = Ũe^{4w}/(6γ₃) − U/(6γ₃) − 24αw − N(w)`.

use std::sync::Arc;

use serde::Serialize;

use crate::edge::FactoredOperator;
use crate::error::{Error, Result};
use crate::expansion::{fit_envelope_frequency, fit_leading_with, EnvelopeFit, ExpansionFit};
use crate::geometry::{hyperbolic_curvature_report, Dimension, RadialCalculus};
use crate::grid::{sup_norm, RadialFunction, RadialGrid};
use crate::indicial::{u_indicial_spectrum, BoundarySpectrum};
use crate::qcurv::{
    contraction_iterate, interior_window, measure_inverse_norm, power_ratio, IterationConfig, LinearInverse,
    SmallnessCheck, SolveReport,
};

/// Named coefficient triples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// `(1, −4, −2/3)`, `α = 1/2`.
    ConformalLaplacian,
    /// `(7, −88, −14/3)`, `α = 11/7`.
    SpinLaplacian,
    /// `(−1/4, −14, 8/3)`, `α = −7/16`.
    Paneitz,
    /// User-supplied coefficients.
    Custom,
}

impl Preset {
    /// Parses the short tags `A`, `D2`, `P` (case-insensitive) and the snake-case names.
    pub fn parse(tag: &str) -> Option<Self> {
        match tag.to_ascii_lowercase().as_str() {
            "a" | "conformal_laplacian" => Some(Self::ConformalLaplacian),
            "d2" | "spin_laplacian" => Some(Self::SpinLaplacian),
            "p" | "paneitz" => Some(Self::Paneitz),
            _ => None,
        }
    }
}

/// Coefficients `(γ₁, γ₂, γ₃)` of the U-curvature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetParams {
    /// Weyl coefficient.
    pub gamma1: f64,
    /// Q coefficient.
    pub gamma2: f64,
    /// `ΔR` coefficient.
    pub gamma3: f64,
    /// Preset tag.
    pub preset: Preset,
}

impl DetParams {
    /// Custom coefficients; `γ₃ ≠ 0` is required.
    pub fn new(gamma1: f64, gamma2: f64, gamma3: f64) -> Result<Self> {
        Self::tagged(gamma1, gamma2, gamma3, Preset::Custom)
    }

    fn tagged(gamma1: f64, gamma2: f64, gamma3: f64, preset: Preset) -> Result<Self> {
        if ![gamma1, gamma2, gamma3].iter().all(|g| g.is_finite()) {
            return Err(Error::Precondition("U-curvature coefficients must be finite".into()));
        }
        if gamma3 == 0.0 {
            return Err(Error::Precondition("gamma3 must be nonzero".into()));
        }
        Ok(Self { gamma1, gamma2, gamma3, preset })
    }

    /// Coefficients of a named preset.
    pub fn preset(preset: Preset) -> Result<Self> {
        match preset {
            Preset::ConformalLaplacian => Self::tagged(1.0, -4.0, -2.0 / 3.0, preset),
            Preset::SpinLaplacian => Self::tagged(7.0, -88.0, -14.0 / 3.0, preset),
            Preset::Paneitz => Self::tagged(-0.25, -14.0, 8.0 / 3.0, preset),
            Preset::Custom => Err(Error::Precondition("the custom preset needs explicit coefficients".into())),
        }
    }

    /// `α = γ₂/(12γ₃)`.
    pub fn alpha(&self) -> f64 {
        self.gamma2 / (12.0 * self.gamma3)
    }

    /// Fails with [`Error::DegenerateAlpha`] at `α = −1`.
    pub fn check_solvable(&self) -> Result<()> {
        if (self.alpha() + 1.0).abs() < 1e-12 {
            Err(Error::DegenerateAlpha)
        } else {
            Ok(())
        }
    }
}

fn four() -> Dimension {
    Dimension::new(4).expect("4 is a valid dimension")
}

/// `U(g)` on the hyperbolic model: `γ₁|W|² + γ₂Q − γ₃ΔR = 3γ₂`.
pub fn u_curvature_hyperbolic(params: &DetParams) -> f64 {
    let k = hyperbolic_curvature_report(four());
    // ΔR = 0 on the model (constant scalar curvature).
    params.gamma1 * k.weyl_norm_sq + params.gamma2 * k.q_hyp - params.gamma3 * 0.0
}

/// Radial derivative data of `w`.
struct Jets {
    d1: Vec<f64>,
    d2: Vec<f64>,
    q: Vec<f64>,
    lap: Vec<f64>,
}

fn jets(calc: &RadialCalculus, w: &[f64]) -> Jets {
    let d1 = calc.d1(w);
    let d2 = calc.d2(w);
    let q = calc.coth_times_odd(&d1);
    let lap = calc.laplacian(w);
    Jets { d1, d2, q, lap }
}

/// `N(w)` on the radial model (expanded form).
pub fn gradient_nonlinearity(calc: &RadialCalculus, w: &[f64]) -> Vec<f64> {
    let j = jets(calc, w);
    (0..w.len())
        .map(|i| {
            let (w1, w2, q, lap) = (j.d1[i], j.d2[i], j.q[i], j.lap[i]);
            let grad_sq = w1 * w1;
            let ric = -3.0 * grad_sq;
            let hess_sq = w2 * w2 + 3.0 * q * q;
            let hess_grad = w2 * grad_sq;
            2.0 * ric + 2.0 * (hess_sq - lap * lap) - 4.0 * hess_grad - 2.0 * grad_sq * lap
        })
        .collect()
}

/// `𝒯(w)` for a constant target `Ũ`.
pub fn u_nonlinear_map(calc: &RadialCalculus, w: &[f64], params: &DetParams, target: f64) -> Vec<f64> {
    let s = 6.0 * params.gamma3;
    let u0 = u_curvature_hyperbolic(params);
    let nl = gradient_nonlinearity(calc, w);
    w.iter()
        .zip(&nl)
        .map(|(&v, n)| target / s * ((4.0 * v).exp_m1() - 4.0 * v) + (target - u0) / s * (1.0 + 4.0 * v) - n)
        .collect()
}

/// `𝒯(w)` on a profile (right-hand side of the fixed-point map).
pub fn u_nonlinear_rhs(w: &RadialFunction, params: &DetParams, target: f64) -> Result<RadialFunction> {
    let calc = RadialCalculus::new(w.grid().clone(), four())?;
    w.with_values(u_nonlinear_map(&calc, w.values(), params, target))
}

/// `Ũ` of `e^{2w}g`, evaluated independently from the divergence form.
pub fn u_curvature_of_conformal(calc: &RadialCalculus, w: &[f64], params: &DetParams) -> Vec<f64> {
    let alpha = params.alpha();
    let k = hyperbolic_curvature_report(four());
    let u0 = u_curvature_hyperbolic(params);
    let lap = calc.laplacian(w);
    let bilap = calc.laplacian(&lap);
    let d1 = calc.d1(w);
    let grad_sq: Vec<f64> = d1.iter().map(|v| v * v).collect();
    let lap_grad_sq = calc.laplacian(&grad_sq);
    // ∇^i(V∇_i w) = (Vw')' + 3coth r·(Vw') with the odd flux Vw'.
    let flux: Vec<f64> = (0..w.len()).map(|i| (lap[i] + grad_sq[i]) * d1[i]).collect();
    let div_flux: Vec<f64> =
        calc.d1_of_odd(&flux).iter().zip(calc.coth_times_odd(&flux)).map(|(a, b)| a + 3.0 * b).collect();
    // Ric^{ij}∇_i∇_j w = λ·Δw on the Einstein model.
    let ric_hess: Vec<f64> = lap.iter().map(|l| k.ricci_eigenvalue * l).collect();
    (0..w.len())
        .map(|i| {
            let bracket = (1.0 + alpha) * bilap[i] + lap_grad_sq[i] - 2.0 * div_flux[i]
                + 2.0 * alpha * ric_hess[i]
                + (1.0 / 3.0 - 2.0 * alpha / 3.0) * k.r_hyp * lap[i]
                + u0 / (6.0 * params.gamma3);
            6.0 * params.gamma3 * (-4.0 * w[i]).exp() * bracket
        })
        .collect()
}

/// `L w = ((1+α)Δ + 6α)(Δ − 4)w` by factored application.
pub fn u_linearized_apply(w: &RadialFunction, params: &DetParams) -> Result<RadialFunction> {
    params.check_solvable()?;
    let op = FactoredOperator::for_alpha(params.alpha(), w.grid().clone())?;
    op.apply(w)
}

/// `(U/(12γ₃), −2σ₂(g))` on the hyperbolic model, for `α = −1`, `γ₁ = 0`.
pub fn sigma2_identity_check(params: &DetParams) -> Result<(f64, f64)> {
    if (params.alpha() + 1.0).abs() > 1e-12 {
        return Err(Error::Precondition(format!("the σ₂ identity needs alpha = -1 (got {})", params.alpha())));
    }
    if params.gamma1 != 0.0 {
        return Err(Error::Precondition(format!("the σ₂ identity needs gamma1 = 0 (got {})", params.gamma1)));
    }
    let k = hyperbolic_curvature_report(four());
    let n = 4.0;
    // Schouten tensor A = (Ric − R/(2(n−1))g)/(n−2) = a·g.
    let a = (k.ricci_eigenvalue - k.r_hyp / (2.0 * (n - 1.0))) / (n - 2.0);
    let trace = n * a;
    let norm_sq = n * a * a;
    let sigma2 = 0.5 * (trace * trace - norm_sq);
    Ok((u_curvature_hyperbolic(params) / (12.0 * params.gamma3), -2.0 * sigma2))
}

/// Prebuilt machinery for U solves on one grid.
#[derive(Debug, Clone)]
pub struct USolver {
    params: DetParams,
    op: FactoredOperator,
    inverse: LinearInverse,
    inverse_norm: f64,
    spectrum: BoundarySpectrum,
}

impl USolver {
    /// Assembles `L = ((1+α)Δ + 6α)(Δ − 4)` and its (generalized) inverse.
    pub fn new(params: DetParams, grid: Arc<RadialGrid>) -> Result<Self> {
        params.check_solvable()?;
        let spectrum = u_indicial_spectrum(params.alpha())?;
        let op = FactoredOperator::for_alpha(params.alpha(), grid)?;
        let inverse = LinearInverse::for_operator(&op)?;
        let inverse_norm = measure_inverse_norm(&op, &inverse)?;
        Ok(Self { params, op, inverse, inverse_norm, spectrum })
    }

    /// Coefficients.
    pub fn params(&self) -> &DetParams {
        &self.params
    }

    /// The factored linearized operator.
    pub fn operator(&self) -> &FactoredOperator {
        &self.op
    }

    /// The inverse used by the iteration.
    pub fn inverse(&self) -> &LinearInverse {
        &self.inverse
    }

    /// Boundary spectrum of `L`.
    pub fn spectrum(&self) -> &BoundarySpectrum {
        &self.spectrum
    }

    /// Grid.
    pub fn grid(&self) -> &Arc<RadialGrid> {
        self.op.grid()
    }

    /// Measured smallness constants for amplitude bound `epsilon`.
    pub fn smallness(&self, epsilon: f64, target: f64) -> Result<SmallnessCheck> {
        let calc = self.op.calculus();
        let len = self.grid().len();
        let edge = self.inverse.kernel_datum(2.0 * epsilon, len).unwrap_or_else(|_| vec![0.0; len]);
        let step = 1e-6;
        let predicted_ratio = power_ratio(&self.op, &self.inverse, |phi| {
            let plus: Vec<f64> = edge.iter().zip(phi).map(|(a, b)| a + step * b).collect();
            let minus: Vec<f64> = edge.iter().zip(phi).map(|(a, b)| a - step * b).collect();
            let tp = u_nonlinear_map(calc, &plus, &self.params, target);
            let tm = u_nonlinear_map(calc, &minus, &self.params, target);
            Ok(tp.iter().zip(&tm).map(|(a, b)| (a - b) / (2.0 * step)).collect())
        })?;
        let s = 6.0 * self.params.gamma3.abs();
        let u0 = u_curvature_hyperbolic(&self.params);
        let deviation = (target - u0).abs();
        let deviation_bound = s / (8.0 * self.inverse_norm);
        Ok(SmallnessCheck {
            inverse_norm: self.inverse_norm,
            kernel_condition: 16.0 * self.inverse_norm * epsilon * (u0 / s).abs(),
            predicted_ratio,
            deviation_bound,
            deviation,
            satisfied: predicted_ratio < 0.5 && deviation <= deviation_bound,
        })
    }

    /// Solves `L(w₁ + w₂) = 𝒯(w₁ + w₂)` with `w₁ = amplitude·k̂` and constant
    /// target `Ũ` (default `U(g)`), starting the correction from `initial`.
    pub fn solve_from(
        &self,
        amplitude: f64,
        target: Option<f64>,
        cfg: &IterationConfig,
        initial: Option<&[f64]>,
    ) -> Result<(SolveReport, RadialFunction)> {
        cfg.validate()?;
        if !amplitude.is_finite() {
            return Err(Error::Precondition(format!("amplitude must be finite (got {amplitude})")));
        }
        let target = target.unwrap_or_else(|| u_curvature_hyperbolic(&self.params));
        if !target.is_finite() {
            return Err(Error::Precondition(format!("target U must be finite (got {target})")));
        }
        let grid = self.grid().clone();
        let mut warnings = Vec::new();
        if amplitude.abs() > cfg.epsilon {
            warnings.push(format!("amplitude {amplitude:e} exceeds the bound ε = {:e}", cfg.epsilon));
        }
        let smallness = self.smallness(cfg.epsilon.max(amplitude.abs()), target)?;
        if !smallness.satisfied {
            warnings.push("measured smallness conditions do not hold; convergence is not guaranteed".into());
        }
        if self.spectrum.log_terms_possible {
            warnings.push("boundary roots differ by an integer: logarithmic terms may appear".into());
        }
        let u1 = self.inverse.kernel_datum(amplitude, grid.len())?;
        let calc = self.op.calculus();
        let params = self.params;
        let trace = contraction_iterate(&self.op, &self.inverse, &u1, initial, cfg, |w| {
            Ok(u_nonlinear_map(calc, w, &params, target))
        })?;
        let w: Vec<f64> = u1.iter().zip(&trace.correction).map(|(a, b)| a + b).collect();
        let solution = RadialFunction::new(grid.clone(), w)?;
        let (lo, hi) = interior_window(&grid);
        let window = grid.window(lo, hi);
        let lw = self.op.apply_l(solution.values());
        let tw = u_nonlinear_map(calc, solution.values(), &params, target);
        let equation_residual = window.clone().fold(0.0_f64, |m, i| m.max((lw[i] - tw[i]).abs()));
        let ut = u_curvature_of_conformal(calc, solution.values(), &params);
        let curvature_deviation = window.clone().fold(0.0_f64, |m, i| m.max((ut[i] - target).abs()));
        let (expansion, envelope) =
            if trace.converged && amplitude != 0.0 { self.boundary_fits(&solution) } else { (None, None) };
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
            envelope,
            smallness,
            log_terms_possible: self.spectrum.log_terms_possible,
            failure: trace.failure,
            warnings,
        };
        Ok((report, solution))
    }

    /// [`USolver::solve_from`] with zero initial correction.
    pub fn solve(
        &self,
        amplitude: f64,
        target: Option<f64>,
        cfg: &IterationConfig,
    ) -> Result<(SolveReport, RadialFunction)> {
        self.solve_from(amplitude, target, cfg, None)
    }

    /// Leading fit (oscillatory kernel) and free envelope fit on the outer window.
    fn boundary_fits(&self, w: &RadialFunction) -> (Option<ExpansionFit>, Option<EnvelopeFit>) {
        let Some(proj) = self.inverse.projection() else {
            return (None, None);
        };
        let envelope = fit_envelope_frequency(w, proj.window()).ok();
        let expansion = match proj.kernel().asymptotics {
            crate::edge::KernelAsymptotics::Oscillatory { zeta } => {
                let window = crate::expansion::default_window(w.grid(), zeta.im);
                fit_leading_with(w, zeta.re, zeta.im, window, self.spectrum.log_terms_possible).ok()
            }
            crate::edge::KernelAsymptotics::RealPair { .. } => None,
        };
        (expansion, envelope)
    }
}

/// One-shot U solve on `grid`.
pub fn u_fixed_point_solve(
    amplitude: f64,
    params: &DetParams,
    cfg: &IterationConfig,
    grid: Arc<RadialGrid>,
) -> Result<(SolveReport, RadialFunction)> {
    USolver::new(*params, grid)?.solve(amplitude, None, cfg)
}
