//! Small dense complex matrices.
//!
//! Everything the engine needs from linear algebra happens on matrices of
//! side `2M` (`M` = optical modes) or on conditional blocks of comparable
//! size, so this module keeps to straightforward dense kernels: row-major
//! storage, partial-pivot LU for determinants/solves/inverses, and a cyclic
//! Jacobi sweep for Hermitian eigenvalues (used only for positivity checks).
//! Operations are strictly sequential and allocation-predictable so results
//! are bit-reproducible across runs and thread counts.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{FockError, Result};
use crate::C64;

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    n_rows: usize,
    n_cols: usize,
    data: Vec<C64>,
}

impl CMat {
    /// All-zero matrix of the given shape.
    #[must_use]
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        CMat { n_rows, n_cols, data: vec![C64::new(0.0, 0.0); n_rows * n_cols] }
    }

    /// Identity matrix of side `n`.
    #[must_use]
    pub fn identity(n: usize) -> Self {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, C64::new(1.0, 0.0));
        }
        m
    }

    /// Builds a matrix from a row-major closure.
    #[must_use]
    pub fn from_fn(n_rows: usize, n_cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = CMat::zeros(n_rows, n_cols);
        for i in 0..n_rows {
            for j in 0..n_cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    #[must_use]
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    #[must_use]
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    #[must_use]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        debug_assert!(i < self.n_rows && j < self.n_cols);
        self.data[i * self.n_cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        debug_assert!(i < self.n_rows && j < self.n_cols);
        self.data[i * self.n_cols + j] = v;
    }

    /// Copies `block` into `self` with its top-left corner at `(r0, c0)`.
    pub fn embed(&mut self, r0: usize, c0: usize, block: &CMat) {
        assert!(r0 + block.n_rows <= self.n_rows && c0 + block.n_cols <= self.n_cols);
        for i in 0..block.n_rows {
            for j in 0..block.n_cols {
                self.set(r0 + i, c0 + j, block.get(i, j));
            }
        }
    }

    /// Extracts the sub-matrix at `(r0, c0)` of shape `(nr, nc)`.
    #[must_use]
    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> CMat {
        assert!(r0 + nr <= self.n_rows && c0 + nc <= self.n_cols);
        CMat::from_fn(nr, nc, |i, j| self.get(r0 + i, c0 + j))
    }

    /// Element-wise complex conjugate.
    #[must_use]
    pub fn conj(&self) -> CMat {
        CMat { n_rows: self.n_rows, n_cols: self.n_cols, data: self.data.iter().map(C64::conj).collect() }
    }

    #[must_use]
    pub fn transpose(&self) -> CMat {
        CMat::from_fn(self.n_cols, self.n_rows, |i, j| self.get(j, i))
    }

    /// Conjugate transpose.
    #[must_use]
    pub fn adjoint(&self) -> CMat {
        CMat::from_fn(self.n_cols, self.n_rows, |i, j| self.get(j, i).conj())
    }

    #[must_use]
    pub fn add(&self, other: &CMat) -> CMat {
        assert_eq!((self.n_rows, self.n_cols), (other.n_rows, other.n_cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        CMat { n_rows: self.n_rows, n_cols: self.n_cols, data }
    }

    #[must_use]
    pub fn sub(&self, other: &CMat) -> CMat {
        assert_eq!((self.n_rows, self.n_cols), (other.n_rows, other.n_cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        CMat { n_rows: self.n_rows, n_cols: self.n_cols, data }
    }

    #[must_use]
    pub fn scale(&self, s: C64) -> CMat {
        CMat { n_rows: self.n_rows, n_cols: self.n_cols, data: self.data.iter().map(|a| a * s).collect() }
    }

    /// Matrix product `self * other`.
    #[must_use]
    pub fn mul(&self, other: &CMat) -> CMat {
        assert_eq!(self.n_cols, other.n_rows, "inner dimensions must agree");
        let mut out = CMat::zeros(self.n_rows, other.n_cols);
        for i in 0..self.n_rows {
            for k in 0..self.n_cols {
                let a = self.get(i, k);
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.n_cols {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    /// Matrix-vector product `self * v`.
    #[must_use]
    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.n_cols, v.len());
        let mut out = vec![C64::new(0.0, 0.0); self.n_rows];
        for i in 0..self.n_rows {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..self.n_cols {
                acc += self.get(i, j) * v[j];
            }
            out[i] = acc;
        }
        out
    }

    /// Largest absolute deviation from the Hermitian condition `M = M†`.
    #[must_use]
    pub fn hermiticity_defect(&self) -> f64 {
        assert_eq!(self.n_rows, self.n_cols);
        let mut worst = 0.0f64;
        for i in 0..self.n_rows {
            for j in i..self.n_cols {
                let d = (self.get(i, j) - self.get(j, i).conj()).norm();
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }

    /// LU decomposition with partial pivoting, returning `(lu, perm, parity)`.
    ///
    /// `lu` packs unit-lower L below the diagonal and U on/above it; `perm`
    /// maps factored row -> original row.
    fn lu_decompose(&self) -> Result<(CMat, Vec<usize>, f64)> {
        assert_eq!(self.n_rows, self.n_cols, "LU needs a square matrix");
        let n = self.n_rows;
        let mut lu = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut parity = 1.0f64;
        for col in 0..n {
            let mut pivot_row = col;
            let mut pivot_mag = lu.get(col, col).norm();
            for r in (col + 1)..n {
                let mag = lu.get(r, col).norm();
                if mag > pivot_mag {
                    pivot_mag = mag;
                    pivot_row = r;
                }
            }
            if pivot_mag == 0.0 {
                return Err(FockError::Singular(format!("zero pivot at column {col}")));
            }
            if pivot_row != col {
                for j in 0..n {
                    let a = lu.get(col, j);
                    let b = lu.get(pivot_row, j);
                    lu.set(col, j, b);
                    lu.set(pivot_row, j, a);
                }
                perm.swap(col, pivot_row);
                parity = -parity;
            }
            let pivot = lu.get(col, col);
            for r in (col + 1)..n {
                let factor = lu.get(r, col) / pivot;
                lu.set(r, col, factor);
                for j in (col + 1)..n {
                    let v = lu.get(r, j) - factor * lu.get(col, j);
                    lu.set(r, j, v);
                }
            }
        }
        Ok((lu, perm, parity))
    }

    /// Determinant via LU.
    pub fn det(&self) -> Result<C64> {
        let (lu, _, parity) = self.lu_decompose()?;
        let mut d = C64::new(parity, 0.0);
        for i in 0..self.n_rows {
            d *= lu.get(i, i);
        }
        Ok(d)
    }

    /// Solves `self * x = rhs` for a single right-hand side.
    pub fn solve_vec(&self, rhs: &[C64]) -> Result<Vec<C64>> {
        assert_eq!(self.n_rows, rhs.len());
        let (lu, perm, _) = self.lu_decompose()?;
        let n = self.n_rows;
        // Forward substitution with permuted RHS (L has implicit unit diagonal).
        let mut y = vec![C64::new(0.0, 0.0); n];
        for i in 0..n {
            let mut acc = rhs[perm[i]];
            for j in 0..i {
                acc -= lu.get(i, j) * y[j];
            }
            y[i] = acc;
        }
        // Back substitution.
        let mut x = vec![C64::new(0.0, 0.0); n];
        for i in (0..n).rev() {
            let mut acc = y[i];
            for j in (i + 1)..n {
                acc -= lu.get(i, j) * x[j];
            }
            x[i] = acc / lu.get(i, i);
        }
        Ok(x)
    }

    /// Matrix inverse via LU column solves.
    pub fn inverse(&self) -> Result<CMat> {
        assert_eq!(self.n_rows, self.n_cols);
        let n = self.n_rows;
        let mut out = CMat::zeros(n, n);
        let mut e = vec![C64::new(0.0, 0.0); n];
        for col in 0..n {
            e[col] = C64::new(1.0, 0.0);
            let x = self.solve_vec(&e)?;
            e[col] = C64::new(0.0, 0.0);
            for (row, v) in x.into_iter().enumerate() {
                out.set(row, col, v);
            }
        }
        Ok(out)
    }

    /// Eigenvalues of a Hermitian matrix, ascending, via cyclic Jacobi.
    ///
    /// Only eigenvalues are tracked (the engine uses this for positivity
    /// checks); the caller is responsible for `self` being Hermitian up to
    /// round-off.
    pub fn hermitian_eigenvalues(&self) -> Result<Vec<f64>> {
        assert_eq!(self.n_rows, self.n_cols);
        let n = self.n_rows;
        if n == 0 {
            return Ok(Vec::new());
        }
        let mut a = self.clone();
        // Symmetrize once so round-off in the input cannot drive the sweep.
        for i in 0..n {
            for j in 0..n {
                let sym = (a.get(i, j) + a.get(j, i).conj()) * C64::new(0.5, 0.0);
                a.set(i, j, sym);
            }
        }
        let scale: f64 = (0..n)
            .map(|i| (0..n).map(|j| a.get(i, j).norm()).fold(0.0, f64::max))
            .fold(1e-300, f64::max);
        let tol = 1e-15 * scale;
        const MAX_SWEEPS: usize = 60;
        for _ in 0..MAX_SWEEPS {
            let mut off = 0.0f64;
            for i in 0..n {
                for j in (i + 1)..n {
                    off = off.max(a.get(i, j).norm());
                }
            }
            if off <= tol {
                let mut eig: Vec<f64> = (0..n).map(|i| a.get(i, i).re).collect();
                eig.sort_by(|x, y| x.partial_cmp(y).expect("eigenvalues are finite"));
                return Ok(eig);
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a.get(p, q);
                    let g = apq.norm();
                    if g <= tol {
                        continue;
                    }
                    // Phase factor turning the (p,q) entry real, then a real
                    // Jacobi rotation annihilating it.
                    let phase = apq / C64::new(g, 0.0);
                    let app = a.get(p, p).re;
                    let aqq = a.get(q, q).re;
                    let tau = (aqq - app) / (2.0 * g);
                    let t = if tau >= 0.0 {
                        1.0 / (tau + (1.0 + tau * tau).sqrt())
                    } else {
                        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    // Column rotation J: J[p][p] = c, J[p][q] = s*phase,
                    // J[q][p] = -s*conj(phase)... applied as A <- J† A J with
                    // the phase folded into column q.
                    let jc = C64::new(c, 0.0);
                    let js_p = phase * C64::new(s, 0.0); // multiplies column q contribution from p
                    for r in 0..n {
                        let arp = a.get(r, p);
                        let arq = a.get(r, q);
                        a.set(r, p, arp * jc - arq * js_p.conj());
                        a.set(r, q, arp * js_p + arq * jc);
                    }
                    for r in 0..n {
                        let apr = a.get(p, r);
                        let aqr = a.get(q, r);
                        a.set(p, r, apr * jc - aqr * js_p);
                        a.set(q, r, apr * js_p.conj() + aqr * jc);
                    }
                    // Clamp the annihilated pair against round-off drift.
                    let fixed = (a.get(p, q) + a.get(q, p).conj()) * C64::new(0.5, 0.0);
                    a.set(p, q, fixed);
                    a.set(q, p, fixed.conj());
                }
            }
        }
        Err(FockError::NoConvergence(format!("Jacobi eigensolver stalled on a {n}x{n} matrix")))
    }
}
