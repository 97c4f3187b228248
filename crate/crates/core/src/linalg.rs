//! Small dense/banded linear algebra used by the elliptic solver.
//!
//! Desk-scale only: the Dirichlet-Neumann solve needs (a) complex tridiagonal
//! solves per Fourier mode for the flat preconditioner and (b) a dense real LU
//! per y-level block for the direct block-tridiagonal fallback. Row-major
//! storage throughout.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
use num_traits::Float;

use crate::error::{Error, Result};

/// Dense real LU factorization with partial pivoting.
#[derive(Debug, Clone)]
pub struct DenseLu {
    n: usize,
    /// Packed L\U factors, row-major.
    lu: Vec<f64>,
    /// Row permutation.
    piv: Vec<usize>,
}

impl DenseLu {
    /// Factor an n x n row-major matrix.
    pub fn factor(n: usize, a: &[f64]) -> Result<Self> {
        if a.len() != n * n {
            return Err(Error::config("DenseLu: matrix size mismatch"));
        }
        let mut lu = a.to_vec();
        let mut piv: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let mut pivot_row = col;
            let mut pivot_val = Float::abs(lu[col * n + col]);
            for row in col + 1..n {
                let v = Float::abs(lu[row * n + col]);
                if v > pivot_val {
                    pivot_val = v;
                    pivot_row = row;
                }
            }
            if pivot_val == 0.0 || !pivot_val.is_finite() {
                return Err(Error::numeric(format_args!(
                    "DenseLu: singular pivot at column {col}"
                )));
            }
            if pivot_row != col {
                for k in 0..n {
                    lu.swap(col * n + k, pivot_row * n + k);
                }
                piv.swap(col, pivot_row);
            }
            let d = lu[col * n + col];
            for row in col + 1..n {
                let m = lu[row * n + col] / d;
                lu[row * n + col] = m;
                for k in col + 1..n {
                    lu[row * n + k] -= m * lu[col * n + k];
                }
            }
        }
        Ok(DenseLu { n, lu, piv })
    }

    /// Solve in place for one right-hand side.
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(b.len(), n);
        let mut x = vec![0.0; n];
        for i in 0..n {
            x[i] = b[self.piv[i]];
        }
        for i in 0..n {
            for k in 0..i {
                x[i] -= self.lu[i * n + k] * x[k];
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                x[i] -= self.lu[i * n + k] * x[k];
            }
            x[i] /= self.lu[i * n + i];
        }
        b.copy_from_slice(&x);
    }

    /// Solve for a row-major block of `m` right-hand sides (columns).
    pub fn solve_columns(&self, rhs: &mut [f64], m: usize) {
        let n = self.n;
        debug_assert_eq!(rhs.len(), n * m);
        let mut col = vec![0.0; n];
        for j in 0..m {
            for i in 0..n {
                col[i] = rhs[i * m + j];
            }
            self.solve(&mut col);
            for i in 0..n {
                rhs[i * m + j] = col[i];
            }
        }
    }
}

/// Complex tridiagonal factorization (Thomas algorithm, no pivoting).
///
/// The flat elliptic operator per Fourier mode is strictly diagonally
/// dominant on the cell-centered grid, so unpivoted elimination is stable;
/// degenerate pivots are still detected and reported.
#[derive(Debug, Clone)]
pub struct TridiagLu {
    n: usize,
    /// Multipliers l_i (i = 1..n) applied during forward elimination.
    lower: Vec<Complex64>,
    /// Eliminated diagonal.
    diag: Vec<Complex64>,
    /// Original superdiagonal.
    upper: Vec<Complex64>,
}

impl TridiagLu {
    /// Factor the tridiagonal matrix with subdiagonal `a` (length n-1, entry
    /// i couples row i+1 to i), diagonal `b` (length n), superdiagonal `c`
    /// (length n-1).
    pub fn factor(a: &[Complex64], b: &[Complex64], c: &[Complex64]) -> Result<Self> {
        let n = b.len();
        if a.len() != n - 1 || c.len() != n - 1 {
            return Err(Error::config("TridiagLu: band length mismatch"));
        }
        let mut lower = vec![Complex64::new(0.0, 0.0); n - 1];
        let mut diag = b.to_vec();
        for i in 0..n - 1 {
            let d = diag[i];
            if d.norm() == 0.0 || !d.re.is_finite() || !d.im.is_finite() {
                return Err(Error::numeric(format_args!(
                    "TridiagLu: degenerate pivot at row {i}"
                )));
            }
            let m = a[i] / d;
            lower[i] = m;
            diag[i + 1] -= m * c[i];
        }
        let last = diag[n - 1];
        if last.norm() == 0.0 || !last.re.is_finite() || !last.im.is_finite() {
            return Err(Error::numeric("TridiagLu: degenerate final pivot"));
        }
        Ok(TridiagLu { n, lower, diag, upper: c.to_vec() })
    }

    /// Solve in place.
    pub fn solve(&self, rhs: &mut [Complex64]) {
        let n = self.n;
        debug_assert_eq!(rhs.len(), n);
        for i in 0..n - 1 {
            let m = self.lower[i];
            let prev = rhs[i];
            rhs[i + 1] -= m * prev;
        }
        rhs[n - 1] /= self.diag[n - 1];
        for i in (0..n - 1).rev() {
            let next = rhs[i + 1];
            rhs[i] = (rhs[i] - self.upper[i] * next) / self.diag[i];
        }
    }
}

/// Dense complex matrix-vector product, row-major.
pub fn matvec_complex(n: usize, a: &[Complex64], x: &[Complex64], y: &mut [Complex64]) {
    debug_assert_eq!(a.len(), n * n);
    for i in 0..n {
        let mut acc = Complex64::new(0.0, 0.0);
        let row = &a[i * n..(i + 1) * n];
        for (aij, xj) in row.iter().zip(x.iter()) {
            acc += aij * xj;
        }
        y[i] = acc;
    }
}
