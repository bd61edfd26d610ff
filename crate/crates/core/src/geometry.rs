//! Curvature operators and conformal transformation laws on the radial
//! hyperbolic model of dimension `n ≥ 4`.
//!
//! In geodesic polar coordinates the hyperbolic metric is
//! `g = dr² + sinh²r·g_{S^{n−1}}`, so for radial `f`
//!
//! ```text
//! Δf = f'' + (n−1)·coth(r)·f',        Δf(0) = n·f''(0).
//! ```
//!
//! The sign convention is the trace of the Hessian (negative spectrum).
//! On this Einstein background `Ric = −(n−1)g`, `R = −n(n−1)`, the Weyl
//! tensor vanishes, and the Paneitz operator reduces to a polynomial in Δ:
//!
//! ```text
//! P φ = Δ²φ − div((a_n R g − b_n Ric)∇φ) + (n−4)/2·Q·φ
//!     = Δ²φ − (a_n R + b_n(n−1))·Δφ + (n−4)/2·Q·φ.
//! ```
//!
//! All operators here compose the same discrete Laplacian, so the factored
//! linearized operator of [`crate::edge`] and the Paneitz operator agree to
//! rounding on the grid.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{RadialFunction, RadialGrid};
use crate::stencil::{derivative, Parity, StencilOperator};

/// Manifold dimension, validated to satisfy `n ≥ 4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Dimension(usize);

impl Dimension {
    /// Validates `n ≥ 4`.
    pub fn new(n: i64) -> Result<Self> {
        if n < 4 {
            Err(Error::Dimension(n))
        } else {
            Ok(Self(n as usize))
        }
    }

    /// The dimension as an integer.
    pub fn n(self) -> usize {
        self.0
    }

    /// The dimension as a float.
    pub fn nf(self) -> f64 {
        self.0 as f64
    }

    /// True for the exponential regime `n = 4`.
    pub fn is_critical(self) -> bool {
        self.0 == 4
    }
}

/// Exact curvature data of the hyperbolic model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvatureConstants {
    /// Dimension.
    pub n: usize,
    /// Scalar curvature `−n(n−1)`.
    pub r_hyp: f64,
    /// Q-curvature: `n(n²−4)/8` for `n ≥ 5`, and 3 for `n = 4`
    /// (four-dimensional normalization, see [`q_curvature_formula`]).
    pub q_hyp: f64,
    /// Paneitz coefficient `a_n = ((n−2)² + 4) / (2(n−1)(n−2))`.
    pub a_n: f64,
    /// Paneitz coefficient `b_n = 4/(n−2)`.
    pub b_n: f64,
    /// Ricci eigenvalue: `Ric = −(n−1)·g`.
    pub ricci_eigenvalue: f64,
    /// `|Ric|² = n(n−1)²`.
    pub ricci_norm_sq: f64,
    /// `|W|² = 0` (conformally flat model).
    pub weyl_norm_sq: f64,
}

impl CurvatureConstants {
    /// Coefficient `c₁` in `P = Δ² + c₁Δ + c₀`.
    pub fn paneitz_c1(&self) -> f64 {
        -(self.a_n * self.r_hyp - self.b_n * self.ricci_eigenvalue)
    }

    /// Coefficient `c₀ = (n−4)/2·Q` in `P = Δ² + c₁Δ + c₀`.
    pub fn paneitz_c0(&self) -> f64 {
        (self.n as f64 - 4.0) / 2.0 * self.q_hyp
    }
}

/// Exact curvature constants of the hyperbolic model of dimension `n`.
pub fn hyperbolic_curvature_report(dim: Dimension) -> CurvatureConstants {
    let n = dim.nf();
    let r_hyp = -n * (n - 1.0);
    let ricci_eigenvalue = -(n - 1.0);
    let ricci_norm_sq = n * ricci_eigenvalue * ricci_eigenvalue;
    let a_n = ((n - 2.0).powi(2) + 4.0) / (2.0 * (n - 1.0) * (n - 2.0));
    let b_n = 4.0 / (n - 2.0);
    CurvatureConstants {
        n: dim.n(),
        r_hyp,
        q_hyp: q_curvature_formula(n, r_hyp, ricci_norm_sq, 0.0),
        a_n,
        b_n,
        ricci_eigenvalue,
        ricci_norm_sq,
        weyl_norm_sq: 0.0,
    }
}

/// Q-curvature from its local formula.
///
/// For `n ≥ 5`:
/// `Q = −ΔR/(2(n−1)) − 2|Ric|²/(n−2)² + (n³−4n²+16n−16)·R²/(8(n−1)²(n−2)²)`,
/// which is `n(n²−4)/8` on hyperbolic space.
/// For `n = 4` the four-dimensional normalization
/// `Q = (−ΔR + R² − 3|Ric|²)/12` is used (half of the expression above),
/// so that `P u + 2Q = 2Q̃e^{4u}` and hyperbolic space has `Q = 3`.
pub fn q_curvature_formula(n: f64, r: f64, ric_sq: f64, lap_r: f64) -> f64 {
    let general = -lap_r / (2.0 * (n - 1.0)) - 2.0 * ric_sq / (n - 2.0).powi(2)
        + (n.powi(3) - 4.0 * n * n + 16.0 * n - 16.0) * r * r / (8.0 * (n - 1.0).powi(2) * (n - 2.0).powi(2));
    if n == 4.0 {
        general / 2.0
    } else {
        general
    }
}

/// Discrete radial calculus on a grid: first/second derivatives and the
/// hyperbolic Laplacian, all of formal order four.
#[derive(Debug, Clone)]
pub struct RadialCalculus {
    grid: Arc<RadialGrid>,
    dim: Dimension,
    d1_even: StencilOperator,
    d1_odd: StencilOperator,
    d2_even: StencilOperator,
    lap: StencilOperator,
    coth: Vec<f64>,
}

impl RadialCalculus {
    /// Builds the stencils for `grid` and dimension `dim`.
    pub fn new(grid: Arc<RadialGrid>, dim: Dimension) -> Result<Self> {
        let d1_even = derivative(&grid, 1, Parity::Even)?;
        let d1_odd = derivative(&grid, 1, Parity::Odd)?;
        let d2_even = derivative(&grid, 2, Parity::Even)?;
        let coth: Vec<f64> = grid.r().iter().map(|&r| if r == 0.0 { 0.0 } else { 1.0 / r.tanh() }).collect();
        let n = dim.nf();
        let mut lap_coeff = coth.iter().map(|c| (n - 1.0) * c).collect::<Vec<_>>();
        lap_coeff[0] = 0.0;
        let mut lap = d2_even.combine(1.0, &d1_even.scale_rows(&lap_coeff), 1.0);
        // Regular limit at the centre: Δf(0) = n·f''(0).
        let row0 = d2_even.rows()[0].clone();
        let mut rows = lap.rows().to_vec();
        rows[0] =
            crate::stencil::RowStencil { start: row0.start, weights: row0.weights.iter().map(|w| n * w).collect() };
        lap = StencilOperator::from_rows(rows);
        Ok(Self { grid, dim, d1_even, d1_odd, d2_even, lap, coth })
    }

    /// The grid.
    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    /// The dimension.
    pub fn dim(&self) -> Dimension {
        self.dim
    }

    /// Discrete Laplacian as a sparse operator.
    pub fn laplacian_operator(&self) -> &StencilOperator {
        &self.lap
    }

    /// `coth(r_i)` (zero placeholder at the origin).
    pub fn coth(&self) -> &[f64] {
        &self.coth
    }

    /// Δf on the grid.
    pub fn laplacian(&self, f: &[f64]) -> Vec<f64> {
        self.lap.apply(f)
    }

    /// f' of an even profile (odd result).
    pub fn d1(&self, f: &[f64]) -> Vec<f64> {
        self.d1_even.apply(f)
    }

    /// Row `i` of the first-derivative stencil for even profiles.
    pub fn d1_row(&self, i: usize) -> crate::stencil::RowStencil {
        self.d1_even.rows()[i].clone()
    }

    /// g' of an odd profile (even result).
    pub fn d1_of_odd(&self, g: &[f64]) -> Vec<f64> {
        self.d1_odd.apply(g)
    }

    /// f'' of an even profile.
    pub fn d2(&self, f: &[f64]) -> Vec<f64> {
        self.d2_even.apply(f)
    }

    /// `coth(r)·g` for an odd profile `g`, using the limit `g'(0)` at the centre.
    pub fn coth_times_odd(&self, g: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = g.iter().zip(&self.coth).map(|(a, c)| a * c).collect();
        out[0] = self.d1_odd.rows()[0].apply(g);
        out
    }

    /// Hyperbolic Paneitz operator: `Δ²φ + c₁Δφ + c₀φ`.
    pub fn paneitz(&self, phi: &[f64]) -> Vec<f64> {
        let k = hyperbolic_curvature_report(self.dim);
        let lap = self.laplacian(phi);
        let lap2 = self.laplacian(&lap);
        let (c1, c0) = (k.paneitz_c1(), k.paneitz_c0());
        lap2.iter().zip(&lap).zip(phi).map(|((a, b), p)| a + c1 * b + c0 * p).collect()
    }
}

/// Δ_g f for a radial profile (builds the stencils on the fly).
pub fn laplacian_radial(f: &RadialFunction, dim: Dimension) -> Result<RadialFunction> {
    let calc = RadialCalculus::new(f.grid().clone(), dim)?;
    f.with_values(calc.laplacian(f.values()))
}

/// P_g φ on the hyperbolic background.
pub fn paneitz_apply(phi: &RadialFunction, dim: Dimension) -> Result<RadialFunction> {
    let calc = RadialCalculus::new(phi.grid().clone(), dim)?;
    phi.with_values(calc.paneitz(phi.values()))
}

/// How the conformal factor is parametrized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `g̃ = e^{2u} g` (n = 4).
    Exp,
    /// `g̃ = (1+u)^{4/(n−4)} g` (n ≥ 5).
    Power,
}

/// A conformal factor `u` together with its parametrization.
#[derive(Debug, Clone, PartialEq)]
pub struct ConformalFactor {
    regime: Regime,
    u: RadialFunction,
}

impl ConformalFactor {
    /// Chooses the regime from the dimension and checks `1 + u > 0` when needed.
    pub fn new(u: RadialFunction, dim: Dimension) -> Result<Self> {
        let regime = if dim.is_critical() { Regime::Exp } else { Regime::Power };
        if regime == Regime::Power {
            check_positive(&u)?;
        }
        Ok(Self { regime, u })
    }

    /// The parametrization.
    pub fn regime(&self) -> Regime {
        self.regime
    }

    /// The profile `u`.
    pub fn u(&self) -> &RadialFunction {
        &self.u
    }

    /// Logarithmic factor `w` with `g̃ = e^{2w} g`.
    pub fn log_factor(&self, dim: Dimension) -> Vec<f64> {
        match self.regime {
            Regime::Exp => self.u.values().to_vec(),
            Regime::Power => {
                let e = 2.0 / (dim.nf() - 4.0);
                self.u.values().iter().map(|v| e * v.ln_1p()).collect()
            }
        }
    }
}

/// Fails with a domain error at the first node where `1 + u ≤ 0`.
pub fn check_positive(u: &RadialFunction) -> Result<()> {
    for (i, &v) in u.values().iter().enumerate() {
        if 1.0 + v <= 0.0 {
            return Err(Error::Domain { index: i, r: u.grid().r()[i], value: 1.0 + v });
        }
    }
    Ok(())
}

/// Q-curvature of the conformal metric, from the transformation law.
///
/// n = 4: `Q̃ = e^{−4u}(P u + 2Q)/2`;
/// n ≥ 5: `Q̃ = 2/(n−4)·(1+u)^{−(n+4)/(n−4)}·P(1+u)`.
pub fn q_of_conformal(factor: &ConformalFactor, dim: Dimension) -> Result<RadialFunction> {
    let calc = RadialCalculus::new(factor.u().grid().clone(), dim)?;
    factor.u().with_values(q_of_conformal_with(&calc, factor.u().values())?)
}

/// [`q_of_conformal`] on raw values with prebuilt stencils.
pub fn q_of_conformal_with(calc: &RadialCalculus, u: &[f64]) -> Result<Vec<f64>> {
    let dim = calc.dim();
    let k = hyperbolic_curvature_report(dim);
    if dim.is_critical() {
        let pu = calc.paneitz(u);
        Ok(pu.iter().zip(u).map(|(p, v)| (-4.0 * v).exp() * (p + 2.0 * k.q_hyp) / 2.0).collect())
    } else {
        let n = dim.nf();
        let expo = (n + 4.0) / (n - 4.0);
        let one_plus: Vec<f64> = u.iter().map(|v| 1.0 + v).collect();
        if let Some(i) = one_plus.iter().position(|v| *v <= 0.0) {
            return Err(Error::Domain { index: i, r: calc.grid().r()[i], value: one_plus[i] });
        }
        // P(1+u) = Pu + c₀ by linearity; applying Δ² to the constant would
        // only add rounding noise of size ε/h⁴.
        let c0 = k.paneitz_c0();
        let p = calc.paneitz(u);
        Ok(p.iter().zip(&one_plus).map(|(pv, w)| 2.0 / (n - 4.0) * w.powf(-expo) * (pv + c0)).collect())
    }
}

/// Scalar curvature of the conformal metric.
///
/// n = 4: `R̃ = e^{−3u}(−6Δ + R)e^{u}`; n ≥ 5: the conformal-Laplacian law
/// for `g̃ = φ^{4/(n−2)}g` with `φ = (1+u)^{(n−2)/(n−4)}`.
pub fn scalar_of_conformal(factor: &ConformalFactor, dim: Dimension) -> Result<RadialFunction> {
    let calc = RadialCalculus::new(factor.u().grid().clone(), dim)?;
    factor.u().with_values(scalar_of_conformal_with(&calc, factor.u().values())?)
}

/// [`scalar_of_conformal`] on raw values with prebuilt stencils.
pub fn scalar_of_conformal_with(calc: &RadialCalculus, u: &[f64]) -> Result<Vec<f64>> {
    let dim = calc.dim();
    let n = dim.nf();
    let r_hyp = -n * (n - 1.0);
    // φ − 1 evaluated without cancellation; Δφ = Δ(φ − 1) exactly.
    let phi_m1: Vec<f64> = if dim.is_critical() {
        u.iter().map(|v| v.exp_m1()).collect()
    } else {
        if let Some(i) = u.iter().position(|v| 1.0 + v <= 0.0) {
            return Err(Error::Domain { index: i, r: calc.grid().r()[i], value: 1.0 + u[i] });
        }
        let e = (n - 2.0) / (n - 4.0);
        u.iter().map(|v| (e * v.ln_1p()).exp_m1()).collect()
    };
    let lap = calc.laplacian(&phi_m1);
    let c = 4.0 * (n - 1.0) / (n - 2.0);
    let expo = -(n + 2.0) / (n - 2.0);
    Ok(phi_m1
        .iter()
        .zip(&lap)
        .map(|(pm, l)| {
            let p = 1.0 + pm;
            p.powf(expo) * (-c * l + r_hyp * p)
        })
        .collect())
}

/// `R_g̃ − R_g` evaluated without cancellation against `R_g`:
/// `R(φ^{4/(n−2)} − 1)φ^{−(n+2)/(n−2)}·φ − cφ^{−(n+2)/(n−2)}Δφ`.
pub fn scalar_deviation_with(calc: &RadialCalculus, u: &[f64]) -> Result<Vec<f64>> {
    let dim = calc.dim();
    let n = dim.nf();
    let r_hyp = -n * (n - 1.0);
    // ln φ, with g̃ = φ^{4/(n−2)} g.
    let log_phi: Vec<f64> = if dim.is_critical() {
        u.to_vec()
    } else {
        if let Some(i) = u.iter().position(|v| 1.0 + v <= 0.0) {
            return Err(Error::Domain { index: i, r: calc.grid().r()[i], value: 1.0 + u[i] });
        }
        let e = (n - 2.0) / (n - 4.0);
        u.iter().map(|v| e * v.ln_1p()).collect()
    };
    let phi_m1: Vec<f64> = log_phi.iter().map(|l| l.exp_m1()).collect();
    let lap = calc.laplacian(&phi_m1);
    let c = 4.0 * (n - 1.0) / (n - 2.0);
    let expo = -(n + 2.0) / (n - 2.0);
    Ok(log_phi
        .iter()
        .zip(&lap)
        .map(|(l, lp)| r_hyp * ((expo + 1.0) * l).exp_m1() - c * (expo * l).exp() * lp)
        .collect())
}

/// Curvature of the radial metric `g̃ = e^{2w}(dr² + sinh²r·g_{S^{n−1}})`,
/// computed intrinsically (not through transformation laws).
#[derive(Debug, Clone)]
pub struct WarpedCurvature {
    /// `e^{−2w}`.
    pub e: Vec<f64>,
    /// `w'`.
    pub w1: Vec<f64>,
    /// Ricci eigenvalue on the radial direction (orthonormal frame).
    pub ric_rr: Vec<f64>,
    /// Ricci eigenvalue on the spherical directions.
    pub ric_tt: Vec<f64>,
    /// Scalar curvature.
    pub scalar: Vec<f64>,
}

impl RadialCalculus {
    /// Intrinsic curvature of `e^{2w}g`.
    ///
    /// With `A = e^w` and `B = e^w sinh r` one has `B'/A = cosh r + w' sinh r`, hence
    /// `Ric_rr = −(n−1)e^{−2w}(1 + w'' + coth(r)w')` and
    /// `Ric_θθ = −e^{−2w}[(1 + w'' + coth(r)w') + (n−2)(1 + 2coth(r)w' + w'²)]`.
    pub fn warped_curvature(&self, w: &[f64]) -> WarpedCurvature {
        let n = self.dim.nf();
        let w1 = self.d1(w);
        let w2 = self.d2(w);
        let cw = self.coth_times_odd(&w1);
        let e: Vec<f64> = w.iter().map(|v| (-2.0 * v).exp()).collect();
        let len = w.len();
        let mut ric_rr = vec![0.0; len];
        let mut ric_tt = vec![0.0; len];
        let mut scalar = vec![0.0; len];
        for i in 0..len {
            let k = 1.0 + w2[i] + cw[i];
            ric_rr[i] = -(n - 1.0) * e[i] * k;
            ric_tt[i] = -e[i] * (k + (n - 2.0) * (1.0 + 2.0 * cw[i] + w1[i] * w1[i]));
            scalar[i] = ric_rr[i] + (n - 1.0) * ric_tt[i];
        }
        WarpedCurvature { e, w1, ric_rr, ric_tt, scalar }
    }

    /// `div_{g̃}(λ ∇_{g̃} f)` for radial `λ`, `f` (`λ ≡ 1` gives the Laplacian of `g̃`).
    fn warped_div(&self, curv: &WarpedCurvature, lambda: &[f64], f: &[f64]) -> Vec<f64> {
        let n = self.dim.nf();
        let f1 = self.d1(f);
        let g: Vec<f64> = lambda.iter().zip(&f1).map(|(l, d)| l * d).collect();
        let dg = self.d1_of_odd(&g);
        let cg = self.coth_times_odd(&g);
        (0..f.len()).map(|i| curv.e[i] * (dg[i] + (n - 2.0) * curv.w1[i] * g[i] + (n - 1.0) * cg[i])).collect()
    }

    /// Laplacian of `g̃ = e^{2w}g` applied to `f`.
    pub fn warped_laplacian(&self, curv: &WarpedCurvature, f: &[f64]) -> Vec<f64> {
        let ones = vec![1.0; f.len()];
        self.warped_div(curv, &ones, f)
    }

    /// Q-curvature of `e^{2w}g` from its local formula.
    pub fn warped_q(&self, curv: &WarpedCurvature) -> Vec<f64> {
        let n = self.dim.nf();
        let lap_r = self.warped_laplacian(curv, &curv.scalar);
        (0..lap_r.len())
            .map(|i| {
                let ric_sq = curv.ric_rr[i].powi(2) + (n - 1.0) * curv.ric_tt[i].powi(2);
                q_curvature_formula(n, curv.scalar[i], ric_sq, lap_r[i])
            })
            .collect()
    }

    /// Paneitz operator of `e^{2w}g` applied to `φ`, computed intrinsically.
    pub fn warped_paneitz(&self, w: &[f64], phi: &[f64]) -> Vec<f64> {
        let n = self.dim.nf();
        let k = hyperbolic_curvature_report(self.dim);
        let curv = self.warped_curvature(w);
        let lap = self.warped_laplacian(&curv, phi);
        let lap2 = self.warped_laplacian(&curv, &lap);
        let lambda: Vec<f64> = curv.scalar.iter().zip(&curv.ric_rr).map(|(s, rr)| k.a_n * s - k.b_n * rr).collect();
        let div = self.warped_div(&curv, &lambda, phi);
        let q = if n > 4.0 { self.warped_q(&curv) } else { vec![0.0; phi.len()] };
        (0..phi.len()).map(|i| lap2[i] - div[i] + (n - 4.0) / 2.0 * q[i] * phi[i]).collect()
    }
}
