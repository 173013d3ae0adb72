//! Dense row-major matrices, complex and real.
//!
//! `CMat` backs the estimator and SVD paths where sizes stay small
//! (tens to a few hundred rows), so its products are plain loops. `RMat`
//! backs MLP training where the batched products dominate the wall clock;
//! its product kernel is register-tiled, keeps the inner loop contiguous
//! for the auto-vectorizer, and splits work across threads in fixed row
//! blocks so results are bit-identical regardless of the thread count.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Column vector from a slice.
    pub fn column(v: &[Complex64]) -> Self {
        assert!(!v.is_empty());
        Self {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col_to_vec(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Conjugate transpose.
    pub fn hermitian(&self) -> CMat {
        let mut out = CMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn mul(&self, other: &CMat) -> Result<CMat> {
        if self.cols != other.rows {
            return Err(Error::DimMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = CMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self[(i, l)];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let brow = other.row(l);
                let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if self.cols != v.len() {
            return Err(Error::DimMismatch(format!(
                "cannot apply {}x{} to vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum::<Complex64>()
            })
            .collect())
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    pub fn sub(&self, other: &CMat) -> Result<CMat> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimMismatch("matrix subtraction shapes".into()));
        }
        let mut out = self.clone();
        for (o, &b) in out.data.iter_mut().zip(&other.data) {
            *o -= b;
        }
        Ok(out)
    }

    /// Frobenius norm.
    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Real matrix, row-major. The product kernel backs MLP training, where
/// batched dense products dominate the wall clock.
#[derive(Debug, Clone, PartialEq)]
pub struct RMat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// Row count below which the product kernel stays single-threaded.
const PAR_MIN_ROWS: usize = 64;
/// Rows per parallel work unit; fixed so chunk boundaries (and therefore
/// floating-point summation order) never depend on the thread count.
const ROW_BLOCK: usize = 4;

impl RMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert!(rows > 0 && cols > 0 && data.len() == rows * cols);
        Self { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> RMat {
        let mut out = RMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    /// C = A * B. Transposed products go through an explicit [`transpose`]
    /// first; the copy is cheap next to the product at the sizes seen here.
    ///
    /// [`transpose`]: RMat::transpose
    pub fn matmul(&self, b: &RMat) -> RMat {
        assert_eq!(self.cols, b.rows, "matmul inner dimensions");
        let mut c = RMat::zeros(self.rows, b.cols);
        let (k, n) = (self.cols, b.cols);
        let kernel = |crows: &mut [f64], arows: &[f64]| {
            let nrows = crows.len() / n;
            if nrows == ROW_BLOCK {
                tile_kernel(crows, arows, &b.data, n, k);
            } else {
                for l in 0..k {
                    let brow = &b.data[l * n..(l + 1) * n];
                    for r in 0..nrows {
                        let a = arows[r * k + l];
                        let crow = &mut crows[r * n..(r + 1) * n];
                        for (cv, &bv) in crow.iter_mut().zip(brow) {
                            *cv += a * bv;
                        }
                    }
                }
            }
        };
        run_blocked(&mut c.data, &self.data, n, k, self.rows, kernel);
        c
    }

    pub fn add_assign(&mut self, other: &RMat) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Column-tile width of the register micro-kernel.
const COL_TILE: usize = 16;

/// Accumulate a full ROW_BLOCK-row slab of C against B (k x n). A 4 x 16
/// accumulator block lives in registers across the whole k loop, so the
/// FMA units run off register traffic instead of bouncing C through
/// memory. Summation order per element is l-ascending, identical to the
/// plain loop.
fn tile_kernel(crows: &mut [f64], arows: &[f64], b: &[f64], n: usize, k: usize) {
    debug_assert_eq!(crows.len(), ROW_BLOCK * n);
    debug_assert_eq!(arows.len(), ROW_BLOCK * k);
    debug_assert_eq!(b.len(), k * n);
    let full = n - n % COL_TILE;
    let mut jt = 0;
    while jt < full {
        let mut acc = [[0.0f64; COL_TILE]; ROW_BLOCK];
        for l in 0..k {
            let brow = &b[l * n + jt..l * n + jt + COL_TILE];
            let a0 = arows[l];
            let a1 = arows[k + l];
            let a2 = arows[2 * k + l];
            let a3 = arows[3 * k + l];
            for (x, &bv) in brow.iter().enumerate() {
                acc[0][x] += a0 * bv;
                acc[1][x] += a1 * bv;
                acc[2][x] += a2 * bv;
                acc[3][x] += a3 * bv;
            }
        }
        for (r, acc_row) in acc.iter().enumerate() {
            let crow = &mut crows[r * n + jt..r * n + jt + COL_TILE];
            for (cv, av) in crow.iter_mut().zip(acc_row) {
                *cv += av;
            }
        }
        jt += COL_TILE;
    }
    if jt < n {
        for l in 0..k {
            let brow = &b[l * n + jt..l * n + n];
            for r in 0..ROW_BLOCK {
                let a = arows[r * k + l];
                let crow = &mut crows[r * n + jt..r * n + n];
                for (cv, &bv) in crow.iter_mut().zip(brow) {
                    *cv += a * bv;
                }
            }
        }
    }
}

/// Drive a row-blocked kernel over C and A, in parallel when worthwhile.
/// Each ROW_BLOCK slab of C pairs with the matching slab of A; work units
/// are fixed-size so the result does not depend on the thread count.
fn run_blocked<F>(c: &mut [f64], a: &[f64], n: usize, k: usize, m: usize, kernel: F)
where
    F: Fn(&mut [f64], &[f64]) + Sync,
{
    if m >= PAR_MIN_ROWS && k * n >= 4096 {
        c.par_chunks_mut(ROW_BLOCK * n)
            .zip(a.par_chunks(ROW_BLOCK * k))
            .for_each(|(crows, arows)| kernel(crows, arows));
    } else {
        for (crows, arows) in c.chunks_mut(ROW_BLOCK * n).zip(a.chunks(ROW_BLOCK * k)) {
            kernel(crows, arows);
        }
    }
}

impl std::ops::Index<(usize, usize)> for RMat {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for RMat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;

    fn random_rmat(rng: &mut RngStream, r: usize, c: usize) -> RMat {
        RMat::from_fn(r, c, |_, _| rng.standard_normal())
    }

    fn naive_matmul(a: &RMat, b: &RMat) -> RMat {
        let mut c = RMat::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut acc = 0.0;
                for l in 0..a.cols() {
                    acc += a[(i, l)] * b[(l, j)];
                }
                c[(i, j)] = acc;
            }
        }
        c
    }

    #[test]
    fn blocked_matmul_matches_naive() {
        let mut rng = RngStream::new(21, 0);
        for (m, k, n) in [(1, 1, 1), (5, 7, 3), (70, 33, 41), (128, 64, 96)] {
            let a = random_rmat(&mut rng, m, k);
            let b = random_rmat(&mut rng, k, n);
            let fast = a.matmul(&b);
            let slow = naive_matmul(&a, &b);
            let diff: f64 = fast
                .data()
                .iter()
                .zip(slow.data())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            assert!(diff < 1e-10, "({m},{k},{n}) diff {diff}");
        }
    }

    #[test]
    fn transpose_roundtrips_and_composes_with_matmul() {
        let mut rng = RngStream::new(22, 0);
        let a = random_rmat(&mut rng, 65, 40);
        assert_eq!(a.transpose().transpose(), a);
        let b = random_rmat(&mut rng, 65, 24);
        let tn = a.transpose().matmul(&b);
        let slow = naive_matmul(&a.transpose(), &b);
        let diff: f64 = tn
            .data()
            .iter()
            .zip(slow.data())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-10);
    }

    #[test]
    fn cmat_mul_against_hand_case() {
        let i = Complex64::new(0.0, 1.0);
        let one = Complex64::new(1.0, 0.0);
        let a = CMat::from_fn(2, 2, |r, c| if r == c { one } else { i });
        let b = CMat::from_fn(2, 1, |r, _| if r == 0 { one } else { i });
        let c = a.mul(&b).unwrap();
        // [1 i; i 1] * [1; i] = [1 + i*i; i + i] = [0; 2i]
        assert!((c[(0, 0)] - Complex64::new(0.0, 0.0)).norm() < 1e-15);
        assert!((c[(1, 0)] - Complex64::new(0.0, 2.0)).norm() < 1e-15);
    }

    #[test]
    fn hermitian_conjugates_and_transposes() {
        let a = CMat::from_fn(2, 3, |i, j| Complex64::new(i as f64, j as f64));
        let ah = a.hermitian();
        assert_eq!(ah.rows(), 3);
        assert_eq!(ah[(2, 1)], Complex64::new(1.0, -2.0));
    }

    #[test]
    fn mul_dimension_mismatch_is_an_error() {
        let a = CMat::zeros(2, 3);
        let b = CMat::zeros(2, 3);
        assert!(a.mul(&b).is_err());
    }
}
