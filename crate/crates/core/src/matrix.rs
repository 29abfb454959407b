//! Dense row-major matrices and the small kernels the optimizers and the
//! verification oracles need: Gram matrices, Kronecker products, adjugate
//! inverses for sizes up to 3, and a cyclic Jacobi sweep backing the PSD
//! check.

use thiserror::Error;

/// Relative asymmetry admitted before a matrix is rejected as input to the
/// symmetric eigenvalue routines.
pub const SYMMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum MatrixError {
    #[error("{op}: left operand is {left_rows}x{left_cols}, right is {right_rows}x{right_cols}")]
    ShapeMismatch {
        op: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    #[error("expected {expected} entries for a {rows}x{cols} matrix, got {got}")]
    BadLength {
        rows: usize,
        cols: usize,
        expected: usize,
        got: usize,
    },
    #[error("matrix dimensions must be at least 1x1")]
    Empty,
    #[error("non-finite entry at ({row},{col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is asymmetric at ({row},{col}): |m - m^T| = {diff:e}")]
    Asymmetric { row: usize, col: usize, diff: f64 },
    #[error("singular matrix")]
    Singular,
    #[error("inverse is implemented for sizes 1..=3, got {size}")]
    UnsupportedSize { size: usize },
}

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be >= 1");
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds from a flat row-major slice, rejecting bad lengths and
    /// non-finite entries so no NaN/Inf enters any operation.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, MatrixError> {
        if rows == 0 || cols == 0 {
            return Err(MatrixError::Empty);
        }
        if data.len() != rows * cols {
            return Err(MatrixError::BadLength {
                rows,
                cols,
                expected: rows * cols,
                got: data.len(),
            });
        }
        for (idx, v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(MatrixError::NonFinite {
                    row: idx / cols,
                    col: idx % cols,
                });
            }
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, MatrixError> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(MatrixError::Empty);
        }
        let cols = rows[0].len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(MatrixError::BadLength {
                    rows: rows.len(),
                    cols,
                    expected: cols,
                    got: r.len(),
                });
            }
            for (j, v) in r.iter().enumerate() {
                if !v.is_finite() {
                    return Err(MatrixError::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        debug_assert!(row < self.rows && col < self.cols);
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.rows && col < self.cols);
        self.data[row * self.cols + col] = value;
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix, MatrixError> {
        if self.cols != other.rows {
            return Err(MatrixError::ShapeMismatch {
                op: "matmul",
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: other.rows,
                right_cols: other.cols,
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = 0.0;
                for k in 0..self.cols {
                    acc += self.get(i, k) * other.get(k, j);
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix, MatrixError> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix, MatrixError> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    pub fn scale(&self, factor: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    fn zip_with(
        &self,
        other: &Matrix,
        op: &'static str,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Matrix, MatrixError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(MatrixError::ShapeMismatch {
                op,
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: other.rows,
                right_cols: other.cols,
            });
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> Result<f64, MatrixError> {
        Ok(self.sub(other)?.max_abs())
    }
}

/// X^T X with mirrored accumulation: each (k,l) pair is summed once and
/// written to both triangles, so the result is symmetric to the bit.
pub fn gram(x: &Matrix) -> Matrix {
    let p = x.cols();
    let mut g = Matrix::zeros(p, p);
    for k in 0..p {
        for l in k..p {
            let mut acc = 0.0;
            for i in 0..x.rows() {
                acc += x.get(i, k) * x.get(i, l);
            }
            g.set(k, l, acc);
            g.set(l, k, acc);
        }
    }
    g
}

/// Kronecker product: entry [i*p + k][j*q + l] = a[i][j] * b[k][l] for
/// b of shape p x q.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (p, q) = (b.rows(), b.cols());
    let mut out = Matrix::zeros(a.rows() * p, a.cols() * q);
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            let aij = a.get(i, j);
            for k in 0..p {
                for l in 0..q {
                    out.set(i * p + k, j * q + l, aij * b.get(k, l));
                }
            }
        }
    }
    out
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations. The input
/// is symmetrized as (M + M^T)/2 after an asymmetry check at
/// [`SYMMETRY_TOL`] relative to the largest entry magnitude.
pub fn symmetric_eigenvalues(m: &Matrix) -> Result<Vec<f64>, MatrixError> {
    if m.rows() != m.cols() {
        return Err(MatrixError::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let n = m.rows();
    let scale = m.max_abs().max(1.0);
    for i in 0..n {
        for j in (i + 1)..n {
            let diff = (m.get(i, j) - m.get(j, i)).abs();
            if diff > SYMMETRY_TOL * scale {
                return Err(MatrixError::Asymmetric {
                    row: i,
                    col: j,
                    diff,
                });
            }
        }
    }

    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a.set(i, j, 0.5 * (m.get(i, j) + m.get(j, i)));
        }
    }
    if n == 1 {
        return Ok(vec![a.get(0, 0)]);
    }

    // Cyclic sweeps converge quadratically; 50 is far beyond what 64x64
    // needs.
    let stop = 1e-30 * scale * scale;
    for _sweep in 0..50 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a.get(i, j) * a.get(i, j);
            }
        }
        if off <= stop {
            break;
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
            }
        }
    }
    Ok((0..n).map(|i| a.get(i, i)).collect())
}

/// True iff the smallest eigenvalue of the (symmetrized) input is >= -tol.
pub fn is_psd(m: &Matrix, tol: f64) -> Result<bool, MatrixError> {
    let eigs = symmetric_eigenvalues(m)?;
    let min = eigs.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    Ok(min >= -tol)
}

/// Adjugate inverse for square matrices of size 1 to 3.
pub fn inverse_small(m: &Matrix) -> Result<Matrix, MatrixError> {
    if m.rows() != m.cols() {
        return Err(MatrixError::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let n = m.rows();
    if n > 3 {
        return Err(MatrixError::UnsupportedSize { size: n });
    }
    let det = match n {
        1 => m.get(0, 0),
        2 => m.get(0, 0) * m.get(1, 1) - m.get(0, 1) * m.get(1, 0),
        _ => {
            m.get(0, 0) * (m.get(1, 1) * m.get(2, 2) - m.get(1, 2) * m.get(2, 1))
                - m.get(0, 1) * (m.get(1, 0) * m.get(2, 2) - m.get(1, 2) * m.get(2, 0))
                + m.get(0, 2) * (m.get(1, 0) * m.get(2, 1) - m.get(1, 1) * m.get(2, 0))
        }
    };
    let scale = m.max_abs().max(1.0);
    if !det.is_finite() || det.abs() <= f64::EPSILON * scale.powi(n as i32) {
        return Err(MatrixError::Singular);
    }
    let inv_det = 1.0 / det;
    let mut out = Matrix::zeros(n, n);
    match n {
        1 => out.set(0, 0, inv_det),
        2 => {
            out.set(0, 0, m.get(1, 1) * inv_det);
            out.set(0, 1, -m.get(0, 1) * inv_det);
            out.set(1, 0, -m.get(1, 0) * inv_det);
            out.set(1, 1, m.get(0, 0) * inv_det);
        }
        _ => {
            // Cofactor expansion; out[j][i] = cofactor(i,j) / det.
            for i in 0..3 {
                for j in 0..3 {
                    let r = [(i + 1) % 3, (i + 2) % 3];
                    let c = [(j + 1) % 3, (j + 2) % 3];
                    let minor = m.get(r[0], c[0]) * m.get(r[1], c[1])
                        - m.get(r[0], c[1]) * m.get(r[1], c[0]);
                    out.set(j, i, minor * inv_det);
                }
            }
        }
    }
    Ok(out)
}
