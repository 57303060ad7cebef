//! Dense row-major matrices and an LU solver with partial pivoting.
//!
//! Everything here operates on small systems: phase-space matrices are
//! `L×L` with `L` rarely above a few dozen, and the lattice-chain stationary
//! solve in [`crate::solver`] factors one `L×L` block per queue level. A
//! hand-rolled kernel keeps the crate dependency-free and `no_std`.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::math;

/// Dense row-major `rows × cols` matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds from nested rows; every row must have equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if r == 0 || c == 0 {
            return Err(Error::InvalidModel("empty matrix".into()));
        }
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::InvalidModel("ragged matrix rows".into()));
            }
            data.extend_from_slice(row);
        }
        Ok(Mat { rows: r, cols: c, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// `self · other` for small dense operands.
    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// LU factorization with partial pivoting, kept for repeated solves against
/// one factored matrix.
#[derive(Debug, Clone)]
pub struct LuFactor {
    lu: Mat,
    pivots: Vec<usize>,
}

impl LuFactor {
    /// Factors a square matrix. Fails with [`Error::SingularSystem`] when a
    /// pivot column is numerically zero (below `1e-300` in magnitude, i.e.
    /// genuinely degenerate rather than ill-conditioned).
    pub fn new(a: Mat) -> Result<Self> {
        let n = a.rows();
        assert_eq!(n, a.cols(), "LU needs a square matrix");
        let mut lu = a;
        let mut pivots = Vec::with_capacity(n);
        for k in 0..n {
            let mut p = k;
            let mut best = math::abs(lu[(k, k)]);
            for i in k + 1..n {
                let v = math::abs(lu[(i, k)]);
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best < 1e-300 {
                return Err(Error::SingularSystem);
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
            }
            pivots.push(p);
            let inv = 1.0 / lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] * inv;
                lu[(i, k)] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        lu[(i, j)] -= f * lu[(k, j)];
                    }
                }
            }
        }
        Ok(LuFactor { lu, pivots })
    }

    /// Solves `A x = b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.lu.rows();
        assert_eq!(b.len(), n);
        // All row interchanges must be applied before substitution: the
        // stored multipliers live at their final (fully pivoted) positions,
        // so pairing them with a partially permuted right-hand side breaks
        // whenever a later step relocates an already-eliminated row.
        for k in 0..n {
            b.swap(k, self.pivots[k]);
        }
        for k in 0..n {
            for i in k + 1..n {
                b[i] -= self.lu[(i, k)] * b[k];
            }
        }
        for k in (0..n).rev() {
            for j in k + 1..n {
                b[k] -= self.lu[(k, j)] * b[j];
            }
            b[k] /= self.lu[(k, k)];
        }
    }

    /// Solves `Aᵀ x = b` in place (forward/backward passes swapped around
    /// the same factors, pivots applied on the way out).
    pub fn solve_transposed(&self, b: &mut [f64]) {
        let n = self.lu.rows();
        assert_eq!(b.len(), n);
        // Aᵀ = (P L U)ᵀ = Uᵀ Lᵀ Pᵀ: solve Uᵀ y = b, then Lᵀ z = y, then
        // un-permute.
        for k in 0..n {
            for j in 0..k {
                b[k] -= self.lu[(j, k)] * b[j];
            }
            b[k] /= self.lu[(k, k)];
        }
        for k in (0..n).rev() {
            for j in k + 1..n {
                b[k] -= self.lu[(j, k)] * b[j];
            }
        }
        for k in (0..n).rev() {
            b.swap(k, self.pivots[k]);
        }
    }
}

/// Convenience one-shot solve of `A x = b`; `b` is overwritten by `x`.
pub fn solve_dense(a: Mat, b: &mut [f64]) -> Result<()> {
    LuFactor::new(a)?.solve(b);
    Ok(())
}
