//! Small dense real and complex matrices with power-iteration operator norms.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const POWER_MAX_ITERS: usize = 1000;
pub const POWER_TOL: f64 = 1e-10;

/// Row-major real matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        let m = Matrix { rows, cols, data };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::Shape(format!(
                "matrix {}x{} holds {} entries",
                self.rows,
                self.cols,
                self.data.len()
            )));
        }
        if self.data.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("matrix has non-finite entries".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    /// `out = self * x`, accumulating into `out` when `accumulate` is set.
    #[inline]
    pub fn matvec_into(&self, x: &[f64], out: &mut [f64], accumulate: bool) {
        for (r, o) in out.iter_mut().enumerate().take(self.rows) {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            let s = dot(row, x);
            if accumulate {
                *o += s;
            } else {
                *o = s;
            }
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        self.matvec_into(x, &mut out, false);
        out
    }

    pub fn transpose_matvec(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for r in 0..self.rows {
            let yr = y[r];
            for c in 0..self.cols {
                out[c] += self.data[r * self.cols + c] * yr;
            }
        }
        out
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Spectral norm by power iteration on `MᵀM`.
    pub fn op_norm(&self) -> f64 {
        op_norm_real(&self.data, self.rows, self.cols)
    }
}

/// `Σ a_i b_i` with four interleaved accumulators; the summation order is
/// fixed, so results are reproducible.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

pub fn vec_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn start_vector(n: usize) -> Vec<f64> {
    // Deterministic, with no zero entries and no symmetry that could
    // make it orthogonal to a coordinate-aligned singular vector.
    let v: Vec<f64> = (0..n).map(|j| 1.0 + ((j as f64 + 1.0) * 0.618_033_988_75).fract()).collect();
    let nv = vec_norm(&v);
    v.into_iter().map(|x| x / nv).collect()
}

/// Spectral norm of a row-major real `rows x cols` matrix.
pub fn op_norm_real(a: &[f64], rows: usize, cols: usize) -> f64 {
    if rows == 0 || cols == 0 || a.iter().all(|x| *x == 0.0) {
        return 0.0;
    }
    if rows == 1 || cols == 1 {
        return vec_norm(a);
    }
    let mut x = start_vector(cols);
    let mut y = vec![0.0; rows];
    let mut lambda = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        for r in 0..rows {
            y[r] = a[r * cols..(r + 1) * cols].iter().zip(&x).map(|(p, q)| p * q).sum();
        }
        let mut z = vec![0.0; cols];
        for r in 0..rows {
            let yr = y[r];
            for c in 0..cols {
                z[c] += a[r * cols + c] * yr;
            }
        }
        let nz = vec_norm(&z);
        if nz == 0.0 {
            // Start vector fell in the kernel; the matrix is nonzero so retry
            // from a coordinate direction with the largest column.
            let best = (0..cols)
                .max_by(|&i, &j| col_norm(a, rows, cols, i).total_cmp(&col_norm(a, rows, cols, j)))
                .unwrap_or(0);
            x.iter_mut().for_each(|v| *v = 0.0);
            x[best] = 1.0;
            continue;
        }
        let next = nz;
        x = z.into_iter().map(|v| v / nz).collect();
        if (next - lambda).abs() <= POWER_TOL * next {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda.sqrt()
}

fn col_norm(a: &[f64], rows: usize, cols: usize, c: usize) -> f64 {
    (0..rows).map(|r| a[r * cols + c].powi(2)).sum::<f64>()
}

/// Spectral norm of a row-major complex `rows x cols` matrix.
pub fn op_norm_complex(a: &[Complex64], rows: usize, cols: usize) -> f64 {
    if rows == 0 || cols == 0 || a.iter().all(|x| x.norm_sqr() == 0.0) {
        return 0.0;
    }
    if rows == 1 || cols == 1 {
        return a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    }
    let mut x: Vec<Complex64> = start_vector(cols).into_iter().map(|v| Complex64::new(v, 0.0)).collect();
    let mut y = vec![Complex64::new(0.0, 0.0); rows];
    let mut lambda = 0.0;
    for it in 0..POWER_MAX_ITERS {
        for r in 0..rows {
            y[r] = a[r * cols..(r + 1) * cols].iter().zip(&x).map(|(p, q)| p * q).sum();
        }
        let mut z = vec![Complex64::new(0.0, 0.0); cols];
        for r in 0..rows {
            let yr = y[r];
            for c in 0..cols {
                z[c] += a[r * cols + c].conj() * yr;
            }
        }
        let nz = z.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if nz == 0.0 {
            x.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            x[it % cols] = Complex64::new(1.0, 0.0);
            continue;
        }
        x = z.into_iter().map(|v| v / nz).collect();
        if (nz - lambda).abs() <= POWER_TOL * nz {
            lambda = nz;
            break;
        }
        lambda = nz;
    }
    lambda.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_norm_is_largest_entry() {
        let m = Matrix::from_rows(3, 3, vec![1.0, 0.0, 0.0, 0.0, -4.0, 0.0, 0.0, 0.0, 2.5]).unwrap();
        assert!((m.op_norm() - 4.0).abs() < 1e-9);
    }

    #[test]
    fn rank_one_norm_is_product_of_factor_norms() {
        let u = [1.0, -2.0, 0.5];
        let v = [3.0, 0.25];
        let data: Vec<f64> = u.iter().flat_map(|a| v.iter().map(move |b| a * b)).collect();
        let expect = vec_norm(&u) * vec_norm(&v);
        assert!((op_norm_real(&data, 3, 2) - expect).abs() < 1e-9 * expect);
    }

    #[test]
    fn complex_norm_matches_known_unitary_scaling() {
        let s = Complex64::new(0.0, 1.0);
        let a = vec![Complex64::new(1.0, 0.0), s, s, Complex64::new(1.0, 0.0)];
        // Singular values of [[1,i],[i,1]] are |1+i| and |1-i|, both sqrt(2).
        assert!((op_norm_complex(&a, 2, 2) - 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn zero_matrix_has_zero_norm() {
        assert_eq!(Matrix::zeros(4, 2).op_norm(), 0.0);
    }
}
