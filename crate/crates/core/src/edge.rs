//! The linearized operators as products of two second-order radial factors,
//! their banded solves, the radial kernel element and the projection `P₁`.
//!
//! ```text
//! Q family:  L = (Δ − n)(Δ + (n²−4)/2)                 = P − (n+4)/2·Q   (n ≥ 5),  P − 8Q  (n = 4)
//! U family:  L = ((1+α)Δ + 6α)(Δ − 4) = (1+α)(Δ + 6α/(1+α))(Δ − 4)
//! ```
//!
//! The first ("Robin") factor `Δ + c_R` has boundary roots `{ζ₊, −1}` with
//! `ζ₊ > 0`, so the outer condition `v' + ζ₊v = 0` selects the decaying
//! branch and the factor is injective on decaying data. The second ("kernel")
//! factor `Δ + c_K` has two decaying boundary roots in the Q family; its
//! solution that is regular at the centre is the radial kernel element `k̂`.
//! No local outer condition separates two decaying branches, so the kernel
//! factor is closed by a row `ℓ(w) = 0` with `ℓ(k̂) ≠ 0` and the kernel is
//! removed afterwards by `w ↦ w − P₁(w)·k̂`.

use std::ops::Range;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::banded::{BandedLu, BandedMatrix};
use crate::error::{Error, Result};
use crate::frobenius::{FrobeniusSeries, DEFAULT_TERMS};
use crate::geometry::{Dimension, RadialCalculus};
use crate::grid::{RadialFunction, RadialGrid};
use crate::indicial::OperatorFamily;
use crate::stencil::RowStencil;

/// Smallest grid accepted for operator assembly.
pub const MIN_POINTS: usize = 64;
/// RK4 substeps per grid cell in the shooting integrator.
pub const SHOOT_SUBSTEPS: usize = 8;
/// Distance kept between the fitting window and the outer radius.
pub const WINDOW_MARGIN: f64 = 0.3;
/// Minimum length of a fitting window in `r`.
pub const MIN_WINDOW_LENGTH: f64 = 2.5;
/// Preferred window length in oscillation periods.
pub const WINDOW_PERIODS: f64 = 1.2;
/// Minimum number of oscillation periods a window must contain.
pub const MIN_PERIODS: f64 = 1.0;
/// Conditioning floor of the boundary fit.
pub const MIN_RCOND: f64 = 1e-10;

/// Boundary behaviour of the kernel factor's solutions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelAsymptotics {
    /// Complex pair `ζ, ζ̄` with `Re ζ > 0`: `x^{Re ζ}(a cos(β ln x) + b sin(β ln x))`.
    Oscillatory {
        /// The root with positive imaginary part.
        zeta: Complex64,
    },
    /// Two real decaying roots `0 < slow < fast`: `a·x^{slow} + b·x^{fast}`.
    RealPair {
        /// Slower decaying exponent.
        slow: f64,
        /// Faster decaying exponent.
        fast: f64,
    },
}

impl KernelAsymptotics {
    /// Leading decay exponent of kernel elements.
    pub fn decay_exponent(&self) -> f64 {
        match *self {
            KernelAsymptotics::Oscillatory { zeta } => zeta.re,
            KernelAsymptotics::RealPair { slow, .. } => slow,
        }
    }

    /// Oscillation frequency in `ln x` (zero for real roots).
    pub fn frequency(&self) -> f64 {
        match *self {
            KernelAsymptotics::Oscillatory { zeta } => zeta.im,
            KernelAsymptotics::RealPair { .. } => 0.0,
        }
    }
}

/// `Δ + c` written with the sign of `c` folded in (`Δ − 4.666667`).
fn factor_label(c: f64) -> String {
    if c < 0.0 {
        format!("Δ − {:.6}", -c)
    } else {
        format!("Δ + {c:.6}")
    }
}

/// Regular solution of `k'' + (n−1)coth(r)k' + c·k = 0` with `k(0) = 1`,
/// `k'(0) = 0`, sampled on the grid: returns `(k, k')`.
///
/// Classical RK4 with [`SHOOT_SUBSTEPS`] substeps per cell; at the centre the
/// equation is replaced by its regular limit `k''(0) = −c·k(0)/n`.
pub fn shoot_regular(grid: &RadialGrid, n: f64, c: f64) -> (Vec<f64>, Vec<f64>) {
    let rhs = |r: f64, k: f64, dk: f64| -> f64 {
        if r < 1e-12 {
            -c * k / n
        } else {
            -(n - 1.0) / r.tanh() * dk - c * k
        }
    };
    let len = grid.len();
    let mut k = vec![0.0; len];
    let mut dk = vec![0.0; len];
    k[0] = 1.0;
    let (mut y, mut z) = (1.0, 0.0);
    let r = grid.r();
    for i in 1..len {
        let h = (r[i] - r[i - 1]) / SHOOT_SUBSTEPS as f64;
        for s in 0..SHOOT_SUBSTEPS {
            let t = r[i - 1] + s as f64 * h;
            let (k1y, k1z) = (z, rhs(t, y, z));
            let (k2y, k2z) = (z + 0.5 * h * k1z, rhs(t + 0.5 * h, y + 0.5 * h * k1y, z + 0.5 * h * k1z));
            let (k3y, k3z) = (z + 0.5 * h * k2z, rhs(t + 0.5 * h, y + 0.5 * h * k2y, z + 0.5 * h * k2z));
            let (k4y, k4z) = (z + h * k3z, rhs(t + h, y + h * k3y, z + h * k3z));
            y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
            z += h / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z);
        }
        k[i] = y;
        dk[i] = z;
    }
    (k, dk)
}

/// Normalized radial kernel element of the linearized operator.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelElement {
    /// `amplitude · k̂`.
    pub profile: RadialFunction,
    /// The phase-normalized base profile `k̂` (fitted leading amplitude 1).
    pub base: RadialFunction,
    /// `k̂'` on the grid.
    pub base_derivative: Vec<f64>,
    /// Kernel amplitude.
    pub amplitude: f64,
    /// Leading boundary coefficients `(a₀, b₀)` of `k̂`.
    pub leading_fit: (f64, f64),
    /// Boundary behaviour.
    pub asymptotics: KernelAsymptotics,
}

impl KernelElement {
    /// The same base profile with a different amplitude.
    pub fn with_amplitude(&self, amplitude: f64) -> Result<Self> {
        let profile = self.base.map(|v| amplitude * v)?;
        Ok(Self { profile, amplitude, ..self.clone() })
    }
}

/// Least-squares boundary fit against the two Frobenius solutions of the
/// kernel factor; realizes `P₁` by leading-coefficient matching.
#[derive(Debug, Clone)]
pub struct ProjectionP1 {
    kernel: KernelElement,
    window: Range<usize>,
    window_r: (f64, f64),
    weights_a: Vec<f64>,
    weights_b: Vec<f64>,
    rcond: f64,
    kernel_lu: BandedLu,
}

impl ProjectionP1 {
    /// Fitted boundary coefficients `(a, b)` of `u`.
    pub fn fit_coefficients(&self, u: &[f64]) -> (f64, f64) {
        let seg = &u[self.window.clone()];
        let a = self.weights_a.iter().zip(seg).map(|(w, v)| w * v).sum();
        let b = self.weights_b.iter().zip(seg).map(|(w, v)| w * v).sum();
        (a, b)
    }

    /// Kernel amplitude `c` with `P₁u = c·k̂`.
    pub fn amplitude(&self, u: &[f64]) -> f64 {
        let (a, b) = self.fit_coefficients(u);
        let (a0, b0) = self.kernel.leading_fit;
        match self.kernel.asymptotics {
            KernelAsymptotics::Oscillatory { .. } => (a * a0 + b * b0) / (a0 * a0 + b0 * b0),
            KernelAsymptotics::RealPair { .. } => a / a0,
        }
    }

    /// `P₁u` as a kernel element.
    pub fn project(&self, u: &RadialFunction) -> Result<KernelElement> {
        self.kernel.with_amplitude(self.amplitude(u.values()))
    }

    /// The reference kernel element (amplitude 1).
    pub fn kernel(&self) -> &KernelElement {
        &self.kernel
    }

    /// Fitting window in `r`.
    pub fn window(&self) -> (f64, f64) {
        self.window_r
    }

    /// Reciprocal condition estimate of the (column-scaled) design matrix.
    pub fn rcond(&self) -> f64 {
        self.rcond
    }
}

/// Factorization of the kernel factor closed by a Robin condition at its
/// decaying boundary root (used when `L` has no radial kernel).
#[derive(Debug, Clone)]
pub struct InjectiveInverse {
    kernel_lu: BandedLu,
    decay: f64,
}

impl InjectiveInverse {
    /// Decaying boundary root selected at the outer node.
    pub fn decay(&self) -> f64 {
        self.decay
    }
}

/// Result of a Robin-factor solve.
#[derive(Debug, Clone, PartialEq)]
pub struct RobinSolve {
    /// Solution values.
    pub values: Vec<f64>,
    /// `|(Δ + c_R)v − f|` at the outer node (the equation replaced by the
    /// boundary condition), relative to `max(1, sup|f|)`.
    pub boundary_residual: f64,
}

/// Discretized factored operator on a grid.
#[derive(Debug, Clone)]
pub struct FactoredOperator {
    family: OperatorFamily,
    calc: RadialCalculus,
    lead: f64,
    robin_c: f64,
    kernel_c: f64,
    zeta_plus: f64,
    robin_lu: BandedLu,
}

impl FactoredOperator {
    /// Assembles the factors of `family` on `grid`.
    pub fn assemble(family: OperatorFamily, grid: Arc<RadialGrid>) -> Result<Self> {
        if grid.len() < MIN_POINTS {
            return Err(Error::GridTooCoarse { points: grid.len(), min: MIN_POINTS });
        }
        let n = family.n() as f64;
        let (lead, robin_c, kernel_c, zeta_plus) = match family {
            OperatorFamily::Q { n: ni } => {
                Dimension::new(ni as i64)?;
                (1.0, -n, (n * n - 4.0) / 2.0, n)
            }
            OperatorFamily::U { alpha } => {
                if !alpha.is_finite() {
                    return Err(Error::Precondition(format!("alpha must be finite (got {alpha})")));
                }
                if (alpha + 1.0).abs() < 1e-12 {
                    return Err(Error::DegenerateAlpha);
                }
                (1.0 + alpha, -4.0, 6.0 * alpha / (1.0 + alpha), 4.0)
            }
        };
        let dim = Dimension::new(family.n() as i64)?;
        let calc = RadialCalculus::new(grid, dim)?;
        let mut m = Self::factor_matrix(&calc, robin_c);
        let last = calc.grid().len() - 1;
        let d1_last = calc.d1_row(last);
        m.set_row(last, &d1_last.add_at(last, zeta_plus));
        let robin_lu = m.factor()?;
        Ok(Self { family, calc, lead, robin_c, kernel_c, zeta_plus, robin_lu })
    }

    /// Q family in dimension `dim`.
    pub fn for_dimension(dim: Dimension, grid: Arc<RadialGrid>) -> Result<Self> {
        Self::assemble(OperatorFamily::Q { n: dim.n() }, grid)
    }

    /// U family with parameter `alpha`.
    pub fn for_alpha(alpha: f64, grid: Arc<RadialGrid>) -> Result<Self> {
        Self::assemble(OperatorFamily::U { alpha }, grid)
    }

    fn factor_matrix(calc: &RadialCalculus, c: f64) -> BandedMatrix {
        let op = calc.laplacian_operator().add_diagonal(&vec![c; calc.grid().len()]);
        BandedMatrix::from_operator(&op)
    }

    /// Operator family.
    pub fn family(&self) -> OperatorFamily {
        self.family
    }

    /// Radial calculus (grid, stencils) of the operator.
    pub fn calculus(&self) -> &RadialCalculus {
        &self.calc
    }

    /// Grid.
    pub fn grid(&self) -> &Arc<RadialGrid> {
        self.calc.grid()
    }

    /// Leading coefficient (`1`, or `1+α` for the U family).
    pub fn lead(&self) -> f64 {
        self.lead
    }

    /// `c_R` in the Robin factor `Δ + c_R`.
    pub fn robin_constant(&self) -> f64 {
        self.robin_c
    }

    /// `c_K` in the kernel factor `Δ + c_K`.
    pub fn kernel_constant(&self) -> f64 {
        self.kernel_c
    }

    /// Decaying root `ζ₊` of the Robin factor.
    pub fn zeta_plus(&self) -> f64 {
        self.zeta_plus
    }

    /// Zeroth-order coefficient of the kernel factor as written in the
    /// operator (`(n²−4)/2` for `T₂`, `6α` for `T₃ = (1+α)Δ + 6α`).
    pub fn kernel_factor_shift(&self) -> f64 {
        self.lead * self.kernel_c
    }

    /// Robin factor `(Δ + c_R)u` (`T₁ = Δ − n`, resp. `Δ − 4`).
    pub fn apply_robin_factor(&self, u: &[f64]) -> Vec<f64> {
        let lap = self.calc.laplacian(u);
        lap.iter().zip(u).map(|(l, v)| l + self.robin_c * v).collect()
    }

    /// Kernel factor as written in the operator: `T₂ = Δ + (n²−4)/2`, resp.
    /// `T₃ = (1+α)Δ + 6α`.
    pub fn apply_kernel_factor(&self, u: &[f64]) -> Vec<f64> {
        let lap = self.calc.laplacian(u);
        lap.iter().zip(u).map(|(l, v)| self.lead * (l + self.kernel_c * v)).collect()
    }

    /// `L u` by factored application.
    pub fn apply_l(&self, u: &[f64]) -> Vec<f64> {
        self.apply_kernel_factor(&self.apply_robin_factor(u))
    }

    /// [`FactoredOperator::apply_l`] on a profile.
    pub fn apply(&self, u: &RadialFunction) -> Result<RadialFunction> {
        u.with_values(self.apply_l(u.values()))
    }

    /// Solves `(Δ + c_R)v = f` with `v'(0) = 0` and `v' + ζ₊v = 0` at `R_max`.
    pub fn solve_robin(&self, f: &[f64]) -> Result<RobinSolve> {
        if f.len() != self.grid().len() {
            return Err(Error::LengthMismatch { expected: self.grid().len(), got: f.len() });
        }
        let last = f.len() - 1;
        let mut b = f.to_vec();
        b[last] = 0.0;
        let values = self.robin_lu.solve(&b);
        let t = self.apply_robin_factor(&values);
        let scale = crate::grid::sup_norm(f).max(1.0);
        let boundary_residual = (t[last] - f[last]).abs() / scale;
        Ok(RobinSolve { values, boundary_residual })
    }

    /// `T₁⁻¹ f` on profiles (Robin factor).
    pub fn solve_t1(&self, f: &RadialFunction) -> Result<RadialFunction> {
        f.with_values(self.solve_robin(f.values())?.values)
    }

    /// Boundary behaviour of the kernel factor; fails when some boundary
    /// root does not decay (then the regular radial solution is not a
    /// decaying kernel element).
    pub fn kernel_asymptotics(&self) -> Result<KernelAsymptotics> {
        let n = self.family.n() as f64;
        let p = (n - 1.0) / 2.0;
        let disc = p * p - self.kernel_c;
        if disc < 0.0 {
            return Ok(KernelAsymptotics::Oscillatory { zeta: Complex64::new(p, (-disc).sqrt()) });
        }
        let (slow, fast) = (p - disc.sqrt(), p + disc.sqrt());
        if slow <= 0.0 {
            return Err(Error::NoKernel(format!(
                "the kernel factor {} has boundary roots {{{slow:.6}, {fast:.6}}}; the regular solution grows like x^{slow:.6} and the Robin factor is injective",
                factor_label(self.kernel_c)
            )));
        }
        if (fast - slow).abs() < 1e-12 {
            return Err(Error::Precondition("repeated kernel-factor root: logarithmic boundary term".into()));
        }
        Ok(KernelAsymptotics::RealPair { slow, fast })
    }

    /// Frobenius basis of the kernel factor.
    fn boundary_basis(&self, asym: KernelAsymptotics) -> Result<[FrobeniusSeries; 2]> {
        let n = self.family.n() as f64;
        Ok(match asym {
            KernelAsymptotics::Oscillatory { zeta } => {
                let s = FrobeniusSeries::new(n, self.kernel_c, zeta, DEFAULT_TERMS)?;
                [s.clone(), s]
            }
            KernelAsymptotics::RealPair { slow, fast } => [
                FrobeniusSeries::new(n, self.kernel_c, Complex64::new(slow, 0.0), DEFAULT_TERMS)?,
                FrobeniusSeries::new(n, self.kernel_c, Complex64::new(fast, 0.0), DEFAULT_TERMS)?,
            ],
        })
    }

    /// Fitting window for the boundary basis.
    fn fit_window(&self, asym: KernelAsymptotics) -> Result<(f64, f64)> {
        let r_max = self.grid().r_max();
        let hi = r_max - WINDOW_MARGIN;
        let length = match asym {
            KernelAsymptotics::Oscillatory { zeta } => {
                let period = 2.0 * std::f64::consts::PI / zeta.im;
                let length = (WINDOW_PERIODS * period).max(MIN_WINDOW_LENGTH);
                if length < MIN_PERIODS * period {
                    return Err(Error::Window(format!("window of length {length:.3} holds less than one period")));
                }
                length
            }
            KernelAsymptotics::RealPair { .. } => MIN_WINDOW_LENGTH,
        };
        let lo = hi - length;
        if lo < 1.0 {
            return Err(Error::Window(format!(
                "fitting window [{lo:.3}, {hi:.3}] reaches into the interior; increase R_max (currently {r_max})"
            )));
        }
        Ok((lo, hi))
    }

    /// Design matrix columns of the boundary fit at radius `r`.
    fn basis_at(basis: &[FrobeniusSeries; 2], asym: KernelAsymptotics, r: f64) -> (f64, f64) {
        match asym {
            KernelAsymptotics::Oscillatory { .. } => {
                let v = basis[0].eval(r).0;
                (v.re, v.im)
            }
            KernelAsymptotics::RealPair { .. } => (basis[0].eval(r).0.re, basis[1].eval(r).0.re),
        }
    }

    /// Least-squares weights of the boundary fit on `window`.
    fn fit_weights(
        &self,
        basis: &[FrobeniusSeries; 2],
        asym: KernelAsymptotics,
        window: Range<usize>,
    ) -> Result<(Vec<f64>, Vec<f64>, f64)> {
        let r = self.grid().r();
        let m = window.len();
        if m < 4 {
            return Err(Error::Window(format!("fitting window holds only {m} grid points")));
        }
        let mut a = DMatrix::<f64>::zeros(m, 2);
        for (row, i) in window.clone().enumerate() {
            let (p, q) = Self::basis_at(basis, asym, r[i]);
            a[(row, 0)] = p;
            a[(row, 1)] = q;
        }
        let scale: Vec<f64> = (0..2).map(|j| a.column(j).norm()).collect();
        if scale.iter().any(|s| *s == 0.0 || !s.is_finite()) {
            return Err(Error::IllConditionedFit { rcond: 0.0 });
        }
        for j in 0..2 {
            let s = scale[j];
            a.column_mut(j).scale_mut(1.0 / s);
        }
        let svd = a.clone().svd(true, true);
        let (smax, smin) = (svd.singular_values.max(), svd.singular_values.min());
        let rcond = smin / smax;
        if rcond < MIN_RCOND {
            return Err(Error::IllConditionedFit { rcond });
        }
        let pinv = svd.pseudo_inverse(0.0).map_err(|_| Error::IllConditionedFit { rcond })?;
        let weights_a = (0..m).map(|k| pinv[(0, k)] / scale[0]).collect();
        let weights_b = (0..m).map(|k| pinv[(1, k)] / scale[1]).collect();
        Ok((weights_a, weights_b, rcond))
    }

    /// Radial kernel element by shooting the kernel factor from the centre,
    /// normalized so that its fitted leading amplitude is one, then scaled
    /// by `amplitude`.
    pub fn kernel_element(&self, amplitude: f64) -> Result<KernelElement> {
        self.kernel_and_projection()?.0.with_amplitude(amplitude)
    }

    /// The projection `P₁` built on the shooting kernel element.
    pub fn projection(&self) -> Result<ProjectionP1> {
        Ok(self.kernel_and_projection()?.1)
    }

    fn kernel_and_projection(&self) -> Result<(KernelElement, ProjectionP1)> {
        let asym = self.kernel_asymptotics()?;
        let basis = self.boundary_basis(asym)?;
        let (lo, hi) = self.fit_window(asym)?;
        let grid = self.grid().clone();
        let window = grid.window(lo, hi);
        let (weights_a, weights_b, rcond) = self.fit_weights(&basis, asym, window.clone())?;
        let n = self.family.n() as f64;
        let (k, dk) = shoot_regular(&grid, n, self.kernel_c);
        let fit = |u: &[f64]| -> (f64, f64) {
            let seg = &u[window.clone()];
            (weights_a.iter().zip(seg).map(|(w, v)| w * v).sum(), weights_b.iter().zip(seg).map(|(w, v)| w * v).sum())
        };
        let (a, b) = fit(&k);
        let norm = match asym {
            KernelAsymptotics::Oscillatory { .. } => (a * a + b * b).sqrt(),
            KernelAsymptotics::RealPair { .. } => a,
        };
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NoKernel("shooting solution has no leading boundary component".into()));
        }
        let base_vals: Vec<f64> = k.iter().map(|v| v / norm).collect();
        let base_derivative: Vec<f64> = dk.iter().map(|v| v / norm).collect();
        let leading_fit = (a / norm, b / norm);
        let base = RadialFunction::new(grid.clone(), base_vals)?;
        let kernel = KernelElement {
            profile: base.clone(),
            base,
            base_derivative,
            amplitude: 1.0,
            leading_fit,
            asymptotics: asym,
        };
        let closure = self.closure_row(&kernel, asym);
        let mut m = Self::factor_matrix(&self.calc, self.kernel_c);
        m.set_row(grid.len() - 1, &closure);
        let kernel_lu = m.factor()?;
        let proj = ProjectionP1 {
            kernel: kernel.clone(),
            window: window.clone(),
            window_r: (lo, hi),
            weights_a,
            weights_b,
            rcond,
            kernel_lu,
        };
        Ok((kernel, proj))
    }

    /// Outer closure row `ℓ(w) = k̂(R)w(R) + k̂'(R)w'(R)/|ζ|²`, scaled to unit size.
    fn closure_row(&self, kernel: &KernelElement, asym: KernelAsymptotics) -> RowStencil {
        let last = self.grid().len() - 1;
        let zeta_sq = match asym {
            KernelAsymptotics::Oscillatory { zeta } => zeta.norm_sqr(),
            KernelAsymptotics::RealPair { slow, .. } => slow * slow,
        };
        let kv = kernel.base.values()[last];
        let kd = kernel.base_derivative[last] / zeta_sq;
        let scale = kv.abs().max(kd.abs());
        let d1 = self.calc.d1_row(last);
        let row = RowStencil { start: d1.start, weights: d1.weights.iter().map(|w| w * kd / scale).collect() };
        row.add_at(last, kv / scale)
    }

    /// Solves `(Δ + c_K)w = g` with origin regularity and `ℓ(w) = 0`.
    pub fn solve_kernel_factor(&self, g: &[f64], proj: &ProjectionP1) -> Result<Vec<f64>> {
        if g.len() != self.grid().len() {
            return Err(Error::LengthMismatch { expected: self.grid().len(), got: g.len() });
        }
        let last = g.len() - 1;
        let mut b = g.to_vec();
        b[last] = 0.0;
        Ok(proj.kernel_lu.solve(&b))
    }

    /// Generalized inverse: `G f = w − P₁(w)·k̂` where `(Δ + c_R)v = f/lead`
    /// (Robin closure) and `(Δ + c_K)w = v` (closure row), so `P₁Gf = 0` and
    /// `L G f = f` away from the outer node.
    pub fn generalized_inverse(&self, f: &[f64], proj: &ProjectionP1) -> Result<Vec<f64>> {
        let scaled: Vec<f64> = f.iter().map(|v| v / self.lead).collect();
        let v = self.solve_robin(&scaled)?.values;
        let w = self.solve_kernel_factor(&v, proj)?;
        let c = proj.amplitude(&w);
        Ok(w.iter().zip(proj.kernel.base.values()).map(|(wi, ki)| wi - c * ki).collect())
    }

    /// [`FactoredOperator::generalized_inverse`] on profiles.
    pub fn apply_g(&self, f: &RadialFunction, proj: &ProjectionP1) -> Result<RadialFunction> {
        f.with_values(self.generalized_inverse(f.values(), proj)?)
    }

    /// Inverse of `L` when the regular radial solution of the kernel factor
    /// grows (no radial kernel): both factors are closed by Robin conditions
    /// selecting their decaying boundary roots.
    pub fn injective_inverse(&self) -> Result<InjectiveInverse> {
        let n = self.family.n() as f64;
        let p = (n - 1.0) / 2.0;
        let disc = p * p - self.kernel_c;
        let slow = p - disc.max(0.0).sqrt();
        if disc <= 0.0 || slow > 0.0 {
            return Err(Error::Precondition(format!(
                "the kernel factor {} has a decaying regular solution; use the generalized inverse",
                factor_label(self.kernel_c)
            )));
        }
        let fast = p + disc.sqrt();
        let last = self.grid().len() - 1;
        let mut m = Self::factor_matrix(&self.calc, self.kernel_c);
        m.set_row(last, &self.calc.d1_row(last).add_at(last, fast));
        Ok(InjectiveInverse { kernel_lu: m.factor()?, decay: fast })
    }

    /// `L⁻¹ f` through an [`InjectiveInverse`].
    pub fn solve_injective(&self, f: &[f64], inv: &InjectiveInverse) -> Result<Vec<f64>> {
        let scaled: Vec<f64> = f.iter().map(|v| v / self.lead).collect();
        let mut v = self.solve_robin(&scaled)?.values;
        let last = v.len() - 1;
        v[last] = 0.0;
        Ok(inv.kernel_lu.solve(&v))
    }

    /// Decaying exterior solution `Ψ_{ζ₊}` of the Robin factor (singular at
    /// the centre), sampled for `r ≥ r_min` (zero below).
    pub fn exterior_branch(&self, r_min: f64) -> Result<RadialFunction> {
        let n = self.family.n() as f64;
        let s = FrobeniusSeries::new(n, self.robin_c, Complex64::new(self.zeta_plus, 0.0), 4 * DEFAULT_TERMS)?;
        RadialFunction::from_fn(self.grid().clone(), |r| if r < r_min { 0.0 } else { s.eval(r).0.re })
    }
}

/// Convenience: `T₁⁻¹ f`.
pub fn solve_t1(op: &FactoredOperator, f: &RadialFunction) -> Result<RadialFunction> {
    op.solve_t1(f)
}

/// Convenience: `L u`.
pub fn apply_l(op: &FactoredOperator, u: &RadialFunction) -> Result<RadialFunction> {
    op.apply(u)
}

/// Convenience: `P₁ u`.
pub fn project_p1(proj: &ProjectionP1, u: &RadialFunction) -> Result<KernelElement> {
    proj.project(u)
}
