//! Banded matrices and LU factorization with partial pivoting.
//!
//! Elimination follows a fixed column order, so identical inputs produce
//! bit-identical factors and solutions. Storage keeps `kl` extra
//! superdiagonals for the fill-in created by row interchanges.

use crate::error::{Error, Result};
use crate::stencil::{RowStencil, StencilOperator};

/// Square banded matrix with `kl` sub- and `ku` superdiagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    /// Row `i` stores columns `i − kl ..= i + ku + kl` (fill-in included).
    data: Vec<f64>,
}

impl BandedMatrix {
    /// Zero matrix of order `n`.
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self { n, kl, ku, data: vec![0.0; n * (2 * kl + ku + 1)] }
    }

    /// Builds the matrix of a stencil operator.
    pub fn from_operator(op: &StencilOperator) -> Self {
        let kl = op.lower_bandwidth();
        let ku = op.upper_bandwidth();
        let mut m = Self::zeros(op.len(), kl, ku);
        for (i, row) in op.rows().iter().enumerate() {
            m.set_row(i, row);
        }
        m
    }

    /// Order of the matrix.
    pub fn order(&self) -> usize {
        self.n
    }

    fn width(&self) -> usize {
        2 * self.kl + self.ku + 1
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        if j + self.kl < i || j > i + self.ku + self.kl {
            None
        } else {
            Some(i * self.width() + (j + self.kl - i))
        }
    }

    /// Entry `(i, j)`; zero outside the stored band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    /// Sets entry `(i, j)`, which must lie inside the declared band.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let within = j + self.kl >= i && j <= i + self.ku;
        assert!(within, "entry ({i}, {j}) outside band kl={} ku={}", self.kl, self.ku);
        let s = self.slot(i, j).expect("checked above");
        self.data[s] = v;
    }

    /// Replaces row `i` by the given stencil row.
    pub fn set_row(&mut self, i: usize, row: &RowStencil) {
        let lo = i.saturating_sub(self.kl);
        let hi = (i + self.ku).min(self.n - 1);
        for j in lo..=hi {
            let s = self.slot(i, j).expect("inside band");
            self.data[s] = 0.0;
        }
        for (k, &w) in row.weights.iter().enumerate() {
            self.set(i, row.start + k, w);
        }
    }

    /// Matrix–vector product.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// LU factorization with partial pivoting.
    pub fn factor(&self) -> Result<BandedLu> {
        let mut a = self.clone();
        let n = a.n;
        let kl = a.kl;
        let ku_fill = a.ku + a.kl;
        let mut piv = vec![0usize; n];
        let mut mult = vec![0.0; n * kl.max(1)];
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = a.get(k, k).abs();
            for i in (k + 1)..=last {
                let v = a.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            piv[k] = p;
            if best == 0.0 {
                return Err(Error::SingularMatrix { column: k });
            }
            let jend = (k + ku_fill).min(n - 1);
            if p != k {
                for j in k..=jend {
                    let (sk, sp) = (a.slot(k, j).expect("band"), a.slot(p, j).expect("band"));
                    a.data.swap(sk, sp);
                }
            }
            let pivot = a.get(k, k);
            for i in (k + 1)..=last {
                let si = a.slot(i, k).expect("band");
                let l = a.data[si] / pivot;
                a.data[si] = 0.0;
                mult[k * kl + (i - k - 1)] = l;
                if l != 0.0 {
                    for j in (k + 1)..=jend {
                        let skj = a.slot(k, j).expect("band");
                        let sij = a.slot(i, j).expect("band");
                        a.data[sij] -= l * a.data[skj];
                    }
                }
            }
        }
        Ok(BandedLu { a, piv, mult })
    }
}

/// LU factors of a [`BandedMatrix`]; reusable for many right-hand sides.
#[derive(Debug, Clone)]
pub struct BandedLu {
    a: BandedMatrix,
    piv: Vec<usize>,
    mult: Vec<f64>,
}

impl BandedLu {
    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.a.n;
        let kl = self.a.kl;
        let ku_fill = self.a.ku + self.a.kl;
        let mut x = b.to_vec();
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                x.swap(k, p);
            }
            let last = (k + kl).min(n - 1);
            for i in (k + 1)..=last {
                x[i] -= self.mult[k * kl + (i - k - 1)] * x[k];
            }
        }
        for k in (0..n).rev() {
            let jend = (k + ku_fill).min(n - 1);
            let mut s = x[k];
            for j in (k + 1)..=jend {
                s -= self.a.get(k, j) * x[j];
            }
            x[k] = s / self.a.get(k, k);
        }
        x
    }
}
