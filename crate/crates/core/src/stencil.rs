//! Finite-difference stencils on uniform radial grids.
//!
//! Interior rows use centered stencils of formal order four. At the origin,
//! values beyond `r = 0` are supplied by reflection according to the parity of
//! the profile (radial functions that are smooth on the ball are even in `r`).
//! At the outer radius the stencils become one-sided while keeping order four.
//! Weights come from Fornberg's recursion, so every row is exact on
//! polynomials of the appropriate degree.

use crate::error::{Error, Result};
use crate::grid::RadialGrid;

/// Formal accuracy of all stencils built here.
pub const ACCURACY: usize = 4;

/// Reflection rule used to fill values at negative radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    /// `f(−r) = f(r)`: smooth radial functions.
    Even,
    /// `f(−r) = −f(r)`: radial derivatives of smooth radial functions.
    Odd,
    /// No reflection; one-sided stencils at the origin.
    None,
}

/// Fornberg's algorithm: weights of the derivatives `0..=m` at `z` for the
/// nodes `x`. Returns `w[k][j]`, the weight of node `j` for derivative `k`.
pub fn fornberg(z: f64, x: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// One row of a sparse operator: contiguous weights starting at column `start`.
#[derive(Debug, Clone, PartialEq)]
pub struct RowStencil {
    /// First column touched by the row.
    pub start: usize,
    /// Weights of columns `start, start + 1, …`.
    pub weights: Vec<f64>,
}

impl RowStencil {
    /// Dot product of the row with `f`.
    pub fn apply(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(&f[self.start..]).map(|(w, v)| w * v).sum()
    }

    /// Last column touched by the row.
    pub fn end(&self) -> usize {
        self.start + self.weights.len() - 1
    }

    /// Row `a·self + b·other`, on the union of the column ranges.
    pub fn combine(&self, a: f64, other: &RowStencil, b: f64) -> RowStencil {
        let start = self.start.min(other.start);
        let end = self.end().max(other.end());
        let mut weights = vec![0.0; end - start + 1];
        for (k, w) in self.weights.iter().enumerate() {
            weights[self.start - start + k] += a * w;
        }
        for (k, w) in other.weights.iter().enumerate() {
            weights[other.start - start + k] += b * w;
        }
        RowStencil { start, weights }
    }

    /// Adds `c` to the coefficient of column `col` (extending the row if needed).
    pub fn add_at(&self, col: usize, c: f64) -> RowStencil {
        self.combine(1.0, &RowStencil { start: col, weights: vec![c] }, 1.0)
    }
}

/// A sparse linear operator on grid functions, stored row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct StencilOperator {
    rows: Vec<RowStencil>,
}

impl StencilOperator {
    /// Wraps explicit rows.
    pub fn from_rows(rows: Vec<RowStencil>) -> Self {
        Self { rows }
    }

    /// Rows of the operator.
    pub fn rows(&self) -> &[RowStencil] {
        &self.rows
    }

    /// Number of rows.
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    /// True when the operator has no rows.
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Applies the operator to a grid function.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|row| row.apply(f)).collect()
    }

    /// Row-wise `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &StencilOperator, b: f64) -> StencilOperator {
        let rows = self.rows.iter().zip(&other.rows).map(|(p, q)| p.combine(a, q, b)).collect();
        StencilOperator { rows }
    }

    /// Multiplies row `i` by `c[i]`.
    pub fn scale_rows(&self, c: &[f64]) -> StencilOperator {
        let rows = self
            .rows
            .iter()
            .zip(c)
            .map(|(row, &ci)| RowStencil { start: row.start, weights: row.weights.iter().map(|w| w * ci).collect() })
            .collect();
        StencilOperator { rows }
    }

    /// Adds `c[i]` to the diagonal entry of row `i`.
    pub fn add_diagonal(&self, c: &[f64]) -> StencilOperator {
        let rows = self.rows.iter().enumerate().map(|(i, row)| row.add_at(i, c[i])).collect();
        StencilOperator { rows }
    }

    /// Largest `i − start` over all rows (lower bandwidth).
    pub fn lower_bandwidth(&self) -> usize {
        self.rows.iter().enumerate().map(|(i, r)| i.saturating_sub(r.start)).max().unwrap_or(0)
    }

    /// Largest `end − i` over all rows (upper bandwidth).
    pub fn upper_bandwidth(&self) -> usize {
        self.rows.iter().enumerate().map(|(i, r)| r.end().saturating_sub(i)).max().unwrap_or(0)
    }
}

/// Number of nodes of a centered stencil for derivative `k` at order [`ACCURACY`].
fn centered_width(k: usize) -> usize {
    2 * k.div_ceil(2) - 1 + ACCURACY
}

/// Row of derivative `k` at node `i` from the given integer offsets,
/// folding negative columns by parity.
fn row_from_offsets(i: usize, offsets: &[i64], k: usize, h: f64, parity: Parity) -> RowStencil {
    let xs: Vec<f64> = offsets.iter().map(|&o| o as f64).collect();
    let w = fornberg(0.0, &xs, k);
    let scale = h.powi(k as i32);
    let mut cols: Vec<(usize, f64)> = Vec::with_capacity(offsets.len());
    for (o, wk) in offsets.iter().zip(&w[k]) {
        let j = i as i64 + o;
        let (col, sign) = if j >= 0 {
            (j as usize, 1.0)
        } else {
            match parity {
                Parity::Even => ((-j) as usize, 1.0),
                Parity::Odd => ((-j) as usize, -1.0),
                Parity::None => unreachable!("one-sided rows never reach negative columns"),
            }
        };
        cols.push((col, sign * wk / scale));
    }
    let start = cols.iter().map(|c| c.0).min().unwrap_or(0);
    let end = cols.iter().map(|c| c.0).max().unwrap_or(0);
    let mut weights = vec![0.0; end - start + 1];
    for (col, w) in cols {
        weights[col - start] += w;
    }
    RowStencil { start, weights }
}

/// Finite-difference operator for the `k`-th radial derivative (`1 ≤ k ≤ 4`).
pub fn derivative(grid: &RadialGrid, k: usize, parity: Parity) -> Result<StencilOperator> {
    if !(1..=4).contains(&k) {
        return Err(Error::Precondition(format!("derivative order {k} not in 1..=4")));
    }
    let n = grid.len();
    let width = centered_width(k);
    let one_sided = k + ACCURACY;
    if n < one_sided.max(width) + 2 {
        return Err(Error::StencilWidth { points: n, width: one_sided.max(width) });
    }
    let half = (width / 2) as i64;
    let h = grid.h();
    let rows = (0..n)
        .map(|i| {
            let ii = i as i64;
            let offsets: Vec<i64> = if ii + half < n as i64 && (ii - half >= 0 || parity != Parity::None) {
                (-half..=half).collect()
            } else if ii + half > n as i64 - 1 {
                let first = n as i64 - one_sided as i64;
                (first..n as i64).map(|j| j - ii).collect()
            } else {
                (0..one_sided as i64).map(|j| j - ii).collect()
            };
            row_from_offsets(i, &offsets, k, h, parity)
        })
        .collect();
    Ok(StencilOperator { rows })
}

/// The `k`-th derivative of sampled values (convenience wrapper).
pub fn differentiate(grid: &RadialGrid, f: &[f64], k: usize, parity: Parity) -> Result<Vec<f64>> {
    if f.len() != grid.len() {
        return Err(Error::LengthMismatch { expected: grid.len(), got: f.len() });
    }
    Ok(derivative(grid, k, parity)?.apply(f))
}
