//! Radial grids and sampled radial profiles.
//!
//! The ball is parametrized by the geodesic radius `r ∈ [0, R_max]` of the
//! hyperbolic metric; the boundary defining function is `x = e^{−r}`, so the
//! conformal boundary sits at `r → ∞` (`x → 0`). Grids are uniform in `r`.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Default outer radius of the computational domain.
pub const DEFAULT_R_MAX: f64 = 12.0;
/// Default number of grid points.
pub const DEFAULT_POINTS: usize = 4096;

/// Uniform discretization of the geodesic radius.
///
/// Invariants: `r[0] = 0`, `r[last] = R_max`, strictly increasing; the
/// boundary variable `x = e^{−r}` is therefore strictly decreasing in `(0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    r: Vec<f64>,
    h: f64,
    r_max: f64,
}

impl RadialGrid {
    /// Builds a uniform grid with `points` nodes on `[0, r_max]`.
    pub fn new(r_max: f64, points: usize) -> Result<Self> {
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(Error::Grid(format!("R_max must be positive and finite (got {r_max})")));
        }
        if points < 8 {
            return Err(Error::Grid(format!("need at least 8 points (got {points})")));
        }
        let h = r_max / (points - 1) as f64;
        let mut r: Vec<f64> = (0..points).map(|i| i as f64 * h).collect();
        r[points - 1] = r_max;
        Ok(Self { r, h, r_max })
    }

    /// Default grid: `R_max = 12`, 4096 points.
    pub fn default_grid() -> Self {
        Self::new(DEFAULT_R_MAX, DEFAULT_POINTS).expect("default grid parameters are valid")
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.r.len()
    }

    /// Always false: grids have at least eight nodes.
    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Uniform spacing `h`.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Outer radius.
    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// Node radii.
    pub fn r(&self) -> &[f64] {
        &self.r
    }

    /// Boundary variable `x = e^{−r}` at node `i`.
    pub fn x(&self, i: usize) -> f64 {
        (-self.r[i]).exp()
    }

    /// Boundary variable at every node.
    pub fn x_values(&self) -> Vec<f64> {
        self.r.iter().map(|r| (-r).exp()).collect()
    }

    /// Index of the node closest to radius `r` (clamped to the grid).
    pub fn index_of(&self, r: f64) -> usize {
        let i = (r / self.h).round();
        if i <= 0.0 {
            0
        } else {
            (i as usize).min(self.len() - 1)
        }
    }

    /// Indices of the nodes with `r_lo ≤ r ≤ r_hi`.
    pub fn window(&self, r_lo: f64, r_hi: f64) -> std::ops::Range<usize> {
        let lo = (r_lo / self.h).ceil().max(0.0) as usize;
        let hi = ((r_hi / self.h).floor().max(-1.0) + 1.0) as usize;
        lo.min(self.len())..hi.min(self.len()).max(lo.min(self.len()))
    }
}

/// A radial profile sampled on a grid.
///
/// Values are validated at construction (correct length, all finite). The grid
/// is shared through an [`Arc`], so profiles are cheap to clone and safe to
/// read from several threads.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialFunction {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
}

impl RadialFunction {
    /// Wraps sampled values, rejecting length mismatches and non-finite entries.
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), got: values.len() });
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(r)` at every node.
    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.r().iter().map(|&r| f(r)).collect();
        Self::new(grid, values)
    }

    /// The constant profile `c`.
    pub fn constant(grid: Arc<RadialGrid>, c: f64) -> Result<Self> {
        let values = vec![c; grid.len()];
        Self::new(grid, values)
    }

    /// The zero profile.
    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        let values = vec![0.0; grid.len()];
        Self { grid, values }
    }

    /// Shared grid.
    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    /// Sampled values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Consumes the profile and returns its values.
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Same grid, new values (validated).
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.grid.clone(), values)
    }

    /// Pointwise map.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        self.with_values(self.values.iter().map(|&v| f(v)).collect())
    }

    /// `a·self + b·other` (grids must agree in length).
    pub fn lin_comb(&self, a: f64, other: &RadialFunction, b: f64) -> Result<Self> {
        if other.values.len() != self.values.len() {
            return Err(Error::LengthMismatch { expected: self.values.len(), got: other.values.len() });
        }
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        self.with_values(values)
    }

    /// Supremum norm over the whole grid.
    pub fn sup_norm(&self) -> f64 {
        sup_norm(&self.values)
    }

    /// Supremum norm over the nodes with `r_lo ≤ r ≤ r_hi`.
    pub fn sup_norm_on(&self, r_lo: f64, r_hi: f64) -> f64 {
        sup_norm(&self.values[self.grid.window(r_lo, r_hi)])
    }
}

/// Maximum absolute value of a slice (0 for an empty slice).
pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Maximum absolute difference of two slices of equal length.
pub fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}
