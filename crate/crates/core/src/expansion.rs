//! Boundary-expansion fits, discrete weighted norms and the scalar-curvature
//! asymptotics of solutions.
//!
//! Leading behaviour of kernel-type profiles:
//!
//! ```text
//! u ≈ x^{p}(a·cos(β ln x) + b·sin(β ln x)),     x = e^{−r},
//! ```
//!
//! with `p = (n−1)/2`, `β = √(n²+2n−9)/2` for the Q operator.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{scalar_deviation_with, Dimension, RadialCalculus};
use crate::grid::{sup_norm, RadialFunction, RadialGrid};
use crate::indicial::q_indicial_spectrum;
use crate::stencil::{derivative, Parity};

/// Least-squares fit of the leading boundary term.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionFit {
    /// Envelope exponent `p`.
    pub leading_exponent: f64,
    /// Frequency `β` in `ln x`.
    pub frequency: f64,
    /// Coefficients `(a, b)`; equivalently `u₀₀ = (a − ib)/2`, `u₁₀ = conj(u₀₀)`.
    pub coefficients: (f64, f64),
    /// Fitting window in `x` (`x_lo < x_hi`).
    pub window: (f64, f64),
    /// Fitting window in `r`.
    pub window_r: (f64, f64),
    /// Root-mean-square fit residual relative to the RMS of `u` on the window.
    pub residual: f64,
    /// Decay exponent of `|u − fit|` (`None` when the remainder is at noise level).
    pub remainder_exponent: Option<f64>,
    /// Logarithmic boundary terms cannot be excluded for this spectrum.
    pub log_terms_flag: bool,
}

impl ExpansionFit {
    /// Complex coefficient `u₀₀` of `x^{p+iβ}` (real input: `u₁₀ = conj(u₀₀)`).
    pub fn u00(&self) -> (f64, f64) {
        (self.coefficients.0 / 2.0, -self.coefficients.1 / 2.0)
    }
}

/// Columns `x^p cos(β ln x)`, `x^p sin(β ln x)` at radius `r`.
fn leading_basis(p: f64, beta: f64, r: f64) -> (f64, f64) {
    let env = (-p * r).exp();
    let phase = -beta * r;
    (env * phase.cos(), env * phase.sin())
}

/// Largest number of subleading orders `x^{p+2k}` carried as nuisance columns.
pub const MAX_CORRECTION_ORDERS: usize = 3;

/// Least-squares fit on the index range of
/// `u ≈ Σ_{k ≤ K} x^{p+2k}(a_k cos(β ln x) + b_k sin(β ln x))`
/// (the Frobenius structure of the kernel factor), after rescaling every row
/// by `x^{−p}` so that all nodes carry equal weight. `K` is chosen so that the
/// last column is still above `1e−12` at the inner end of the window
/// (`K ≤ max_orders`).
///
/// Returns `((a₀, b₀), relative RMS residual, rcond)`.
fn oscillatory_fit(
    u: &[f64],
    r: &[f64],
    range: Range<usize>,
    p: f64,
    beta: f64,
    max_orders: usize,
) -> ((f64, f64), f64, f64) {
    let r_lo = r[range.start];
    let orders = (0..=max_orders).take_while(|&k| k == 0 || (-2.0 * k as f64 * r_lo).exp() > 1e-12).count();
    let cols = 2 * orders;
    let rows = range.len();
    let mut design = DMatrix::<f64>::zeros(rows, cols);
    let mut rhs = DVector::<f64>::zeros(rows);
    for (row, i) in range.clone().enumerate() {
        let phase = -beta * r[i];
        let (c, s) = (phase.cos(), phase.sin());
        for k in 0..orders {
            let decay = (-2.0 * k as f64 * r[i]).exp();
            design[(row, 2 * k)] = decay * c;
            design[(row, 2 * k + 1)] = decay * s;
        }
        rhs[row] = u[i] * (p * r[i]).exp();
    }
    let scales: Vec<f64> = (0..cols).map(|j| design.column(j).norm().max(f64::MIN_POSITIVE)).collect();
    for (j, s) in scales.iter().enumerate() {
        design.column_mut(j).scale_mut(1.0 / s);
    }
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let rcond = if smax > 0.0 { smin / smax } else { 0.0 };
    let coef = svd.solve(&rhs, smax * 1e-14).unwrap_or_else(|_| DVector::zeros(cols));
    let fitted = &design * &coef;
    let rr = rhs.norm();
    let residual = if rr > 0.0 { (&rhs - fitted).norm() / rr } else { 0.0 };
    ((coef[0] / scales[0], coef[1] / scales[1]), residual, rcond)
}

/// Indices of `window_r` on the grid, validated to contain `min_periods` periods.
fn checked_window(grid: &RadialGrid, window_r: (f64, f64), beta: f64, min_periods: f64) -> Result<Range<usize>> {
    let (lo, hi) = window_r;
    if !(lo >= 0.0 && hi > lo && hi <= grid.r_max()) {
        return Err(Error::Window(format!("window [{lo}, {hi}] is not inside [0, {}]", grid.r_max())));
    }
    if beta > 0.0 {
        let periods = (hi - lo) * beta / (2.0 * std::f64::consts::PI);
        if periods < min_periods - 1e-9 {
            return Err(Error::Window(format!(
                "window [{lo:.3}, {hi:.3}] holds {periods:.2} oscillation periods, need {min_periods}"
            )));
        }
    }
    let range = grid.window(lo, hi);
    if range.len() < 16 {
        return Err(Error::Window(format!("window [{lo}, {hi}] holds only {} nodes", range.len())));
    }
    Ok(range)
}

/// Block maxima of `|v|` over consecutive `r`-blocks of length `block`
/// covering `[lo, hi]`: returns `(block centre, ln max)` pairs.
fn block_log_maxima(v: &[f64], grid: &RadialGrid, lo: f64, hi: f64, block: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut a = lo;
    while a + block <= hi + 1e-12 {
        let range = grid.window(a, a + block);
        let m = sup_norm(&v[range]);
        if m > 0.0 {
            out.push((a + block / 2.0, m.ln()));
        }
        a += block;
    }
    out
}

/// Least-squares slope of `(t, y)` pairs.
fn slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mt = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mt).powi(2)).sum();
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}

/// Fit of `u ≈ x^p(a cos(β ln x) + b sin(β ln x))` with given `p`, `β` on
/// `window_r` (at least three periods), carrying the subleading orders
/// `x^{p+2k}` as nuisance columns. The remainder `u − leading term` is
/// measured by block maxima on `[window_r.0, R_max − 0.3]`.
pub fn fit_leading_with(
    u: &RadialFunction,
    p: f64,
    beta: f64,
    window_r: (f64, f64),
    log_terms_flag: bool,
) -> Result<ExpansionFit> {
    let grid = u.grid().clone();
    let range = checked_window(&grid, window_r, beta, MIN_FIT_PERIODS)?;
    let r = grid.r();
    let ((a, b), residual, rcond) = oscillatory_fit(u.values(), r, range, p, beta, MAX_CORRECTION_ORDERS);
    if !(rcond > MIN_FIT_RCOND) {
        return Err(Error::Window(format!("leading-term design matrix is ill-conditioned (rcond {rcond:e})")));
    }
    let remainder: Vec<f64> = u
        .values()
        .iter()
        .zip(r)
        .map(|(v, &ri)| {
            let (c, s) = leading_basis(p, beta, ri);
            v - a * c - b * s
        })
        .collect();
    let remainder_exponent = remainder_decay(&remainder, &grid, window_r.0, grid.r_max() - 0.3, beta, u.values());
    Ok(ExpansionFit {
        leading_exponent: p,
        frequency: beta,
        coefficients: (a, b),
        window: ((-window_r.1).exp(), (-window_r.0).exp()),
        window_r,
        residual,
        remainder_exponent,
        log_terms_flag,
    })
}

/// Decay exponent of `|remainder|` from block maxima (one block per half
/// period), ignoring blocks at rounding level relative to `reference`.
fn remainder_decay(
    remainder: &[f64],
    grid: &RadialGrid,
    lo: f64,
    hi: f64,
    beta: f64,
    reference: &[f64],
) -> Option<f64> {
    let scale = sup_norm(reference);
    let block = if beta > 0.0 { std::f64::consts::PI / beta } else { 0.5 }.max(0.25);
    let pts: Vec<(f64, f64)> = block_log_maxima(remainder, grid, lo, hi, block)
        .into_iter()
        .filter(|(_, lm)| lm.exp() > 1e-12 * scale.max(f64::MIN_POSITIVE))
        .collect();
    if pts.len() >= 3 {
        slope(&pts).map(|s| -s)
    } else {
        None
    }
}

/// Minimum number of oscillation periods in a leading-term fitting window.
pub const MIN_FIT_PERIODS: f64 = 3.0;

/// Reciprocal condition number below which a fit is rejected.
pub const MIN_FIT_RCOND: f64 = 1e-10;

/// Default fitting window: three periods ending 0.3 short of `R_max`.
pub fn default_window(grid: &RadialGrid, beta: f64) -> (f64, f64) {
    let hi = grid.r_max() - 0.3;
    let len = if beta > 0.0 { MIN_FIT_PERIODS * 2.0 * std::f64::consts::PI / beta } else { 4.0 };
    ((hi - len * 1.0001).max(0.0), hi)
}

/// Leading fit for the Q operator in dimension `dim`
/// (`p = (n−1)/2`, `β = √(n²+2n−9)/2`).
pub fn fit_leading(u: &RadialFunction, dim: Dimension, window_r: Option<(f64, f64)>) -> Result<ExpansionFit> {
    let spec = q_indicial_spectrum(dim)?;
    let n = dim.nf();
    let p = (n - 1.0) / 2.0;
    let beta = (n * n + 2.0 * n - 9.0).sqrt() / 2.0;
    let w = window_r.unwrap_or_else(|| default_window(u.grid(), beta));
    fit_leading_with(u, p, beta, w, spec.log_terms_possible)
}

/// Envelope exponent and frequency estimated jointly (no prior values used).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnvelopeFit {
    /// Fitted envelope exponent `p` (`|u| ~ x^p`).
    pub exponent: f64,
    /// Fitted frequency in `ln x` (0 for non-oscillating profiles).
    pub frequency: f64,
    /// Relative RMS residual at the optimum.
    pub residual: f64,
}

/// Largest frequency considered by [`fit_envelope_frequency`].
pub const MAX_FREQUENCY: f64 = 8.0;

/// Estimates `(p, β)` of `u ≈ x^p(a cos(β ln x) + b sin(β ln x))` on `window_r`
/// (or `u ≈ a x^p` when `u` keeps one sign there).
///
/// `p` starts from the slope of log block maxima, `β` from a scan of the
/// variable-projection residual; both are then refined by a pattern search.
pub fn fit_envelope_frequency(u: &RadialFunction, window_r: (f64, f64)) -> Result<EnvelopeFit> {
    let grid = u.grid().clone();
    let range = checked_window(&grid, window_r, 0.0, 0.0)?;
    let r = grid.r();
    let v = u.values();
    let sign_changes = (range.start..range.end - 1).filter(|&i| v[i] * v[i + 1] < 0.0).count();
    if sign_changes == 0 {
        let pts: Vec<(f64, f64)> = range.clone().filter(|&i| v[i] != 0.0).map(|i| (r[i], v[i].abs().ln())).collect();
        let s = slope(&pts).ok_or_else(|| Error::Window("no usable samples for the envelope fit".into()))?;
        let n = pts.len() as f64;
        let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let residual = (pts.iter().map(|p| (p.1 - my - s * (p.0 - mt)).powi(2)).sum::<f64>() / n).sqrt();
        return Ok(EnvelopeFit { exponent: -s, frequency: 0.0, residual });
    }
    let objective = |p: f64, beta: f64| -> f64 {
        if beta <= 0.0 {
            return f64::INFINITY;
        }
        let (_, res, rcond) = oscillatory_fit(v, r, range.clone(), p, beta, 0);
        if rcond > MIN_FIT_RCOND {
            res
        } else {
            f64::INFINITY
        }
    };
    let width = window_r.1 - window_r.0;
    let maxima = block_log_maxima(v, &grid, window_r.0, window_r.1, width / 4.0);
    let mut p = slope(&maxima).map(|s| -s).unwrap_or(1.0);
    // Phase resolution of the scan: 0.1 rad across the window.
    let d_beta = 0.1 / width;
    let mut beta = d_beta;
    let mut best = f64::INFINITY;
    let mut b = d_beta;
    while b <= MAX_FREQUENCY {
        let res = objective(p, b);
        if res < best {
            best = res;
            beta = b;
        }
        b += d_beta;
    }
    let mut step = (0.05, d_beta);
    for _ in 0..2000 {
        let mut improved = false;
        for (dp, db) in [(step.0, 0.0), (-step.0, 0.0), (0.0, step.1), (0.0, -step.1)] {
            let trial = objective(p + dp, beta + db);
            if trial < best {
                best = trial;
                p += dp;
                beta += db;
                improved = true;
            }
        }
        if !improved {
            step = (step.0 / 2.0, step.1 / 2.0);
            if step.0 < 1e-10 && step.1 < 1e-10 {
                break;
            }
        }
    }
    Ok(EnvelopeFit { exponent: p, frequency: beta, residual: best })
}

/// Discrete weighted norm: `max_{j ≤ order} sup |x^{−ν}(x∂_x)^j u|`, or `None`
/// (the `+∞` sentinel) when the weighted profile keeps growing towards the
/// boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightedNorm {
    /// Finite estimate, or `None` for divergence.
    pub value: Option<f64>,
    /// Fitted growth rate (per unit `r`) of the weighted block maxima on the outer half.
    pub growth_rate: f64,
}

/// Growth rate above which the weighted profile counts as divergent.
pub const DIVERGENCE_RATE: f64 = 0.02;

/// [`WeightedNorm`] of `u` with weight `ν`, derivatives up to `order ≤ 4`.
///
/// Nodes within 0.5 of `R_max` are excluded (one-sided stencils).
pub fn weighted_norm(u: &RadialFunction, nu: f64, order: usize) -> Result<WeightedNorm> {
    if order > 4 {
        return Err(Error::Precondition(format!("weighted norm order {order} exceeds 4")));
    }
    let grid = u.grid().clone();
    let r = grid.r();
    let mut profiles = vec![u.values().to_vec()];
    for j in 1..=order {
        // (x∂_x)^j = (−∂_r)^j.
        let d = derivative(&grid, j, Parity::Even)?.apply(u.values());
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        profiles.push(d.into_iter().map(|v| sign * v).collect());
    }
    let hi = grid.r_max() - 0.5;
    let range = grid.window(0.0, hi);
    let weighted: Vec<f64> =
        range.clone().map(|i| profiles.iter().map(|p| p[i].abs()).fold(0.0, f64::max) * (nu * r[i]).exp()).collect();
    let mut full = vec![0.0; grid.len()];
    for (k, i) in range.clone().enumerate() {
        full[i] = weighted[k];
    }
    let sup = sup_norm(&weighted);
    let lo = hi / 2.0;
    let block = ((hi - lo) / 8.0).max(0.25);
    let pts = block_log_maxima(&full, &grid, lo, hi, block);
    let growth_rate = slope(&pts).unwrap_or(0.0);
    // The tail (last third of the outer half, longer than a half period of
    // the kernel oscillations) must carry the maximum.
    let tail = grid.window(hi - (hi - lo) / 3.0, hi);
    let tail_max = tail.clone().map(|i| full[i]).fold(0.0, f64::max);
    let tail_is_max = tail_max >= sup;
    let diverges = growth_rate > DIVERGENCE_RATE && tail_is_max;
    Ok(WeightedNorm { value: if diverges { None } else { Some(sup) }, growth_rate })
}

/// Coefficient `C` in `R_g̃ − R_g ≈ C·u` near the boundary, extrapolated
/// over shrinking outer windows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarAsymptotics {
    /// Extrapolated coefficient.
    pub coefficient: f64,
    /// Per-window least-squares estimates (outermost last).
    pub window_estimates: Vec<f64>,
    /// Window left ends in `r`.
    pub window_starts: Vec<f64>,
    /// Closed-form coefficient of the linearized scalar-curvature law,
    /// `2(n−1)(n²+2n−4)/(n−4)` (`60` for `n = 4`).
    pub linearized_value: f64,
}

/// Closed-form coefficient of `R_g̃ − R_g` against a kernel-type `u`:
/// `60` for `n = 4` and `2(n−1)(n²+2n−4)/(n−4)` for `n ≥ 5`.
pub fn scalar_coefficient_closed_form(dim: Dimension) -> f64 {
    let n = dim.nf();
    if dim.is_critical() {
        60.0
    } else {
        2.0 * (n - 1.0) * (n * n + 2.0 * n - 4.0) / (n - 4.0)
    }
}

/// Fits `(R_g̃ − R_g)/u` on windows `[R_max − 0.5 − L_k, R_max − 0.5]` with
/// shrinking `L_k`, then Aitken-extrapolates the last three estimates.
pub fn scalar_asymptotic_coefficient(u: &RadialFunction, dim: Dimension) -> Result<ScalarAsymptotics> {
    let grid = u.grid().clone();
    let calc = RadialCalculus::new(grid.clone(), dim)?;
    let dr = scalar_deviation_with(&calc, u.values())?;
    let hi = grid.r_max() - 0.5;
    let lengths = [6.0, 4.5, 3.5, 2.5];
    let mut estimates = Vec::new();
    let mut starts = Vec::new();
    for len in lengths {
        let lo = hi - len;
        let range = grid.window(lo, hi);
        let uu: f64 = range.clone().map(|i| u.values()[i].powi(2)).sum();
        let ud: f64 = range.clone().map(|i| u.values()[i] * dr[i]).sum();
        let u_sup = sup_norm(&u.values()[range.clone()]);
        if u_sup < 1e-300 || uu == 0.0 {
            return Err(Error::SignalToNoise(format!("u vanishes on the window [{lo:.2}, {hi:.2}]")));
        }
        // Curvature differences below ~1e−13 are at rounding level.
        let d_sup = sup_norm(&dr[range.clone()]);
        if d_sup < 1e-13 {
            return Err(Error::SignalToNoise(format!(
                "R̃ − R is {d_sup:e} on the window [{lo:.2}, {hi:.2}], below rounding level"
            )));
        }
        estimates.push(ud / uu);
        starts.push(lo);
    }
    let k = estimates.len();
    let (a, b, c) = (estimates[k - 3], estimates[k - 2], estimates[k - 1]);
    let denom = a - 2.0 * b + c;
    let coefficient = if denom.abs() > 1e-12 * c.abs().max(1.0) {
        let aitken = c - (c - b).powi(2) / (c - 2.0 * b + a);
        // Keep the raw estimate when the sequence is not geometrically converging.
        if (aitken - c).abs() <= (c - b).abs() * 10.0 {
            aitken
        } else {
            c
        }
    } else {
        c
    };
    Ok(ScalarAsymptotics {
        coefficient,
        window_estimates: estimates,
        window_starts: starts,
        linearized_value: scalar_coefficient_closed_form(dim),
    })
}
