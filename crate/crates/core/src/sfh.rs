//! Simplified fixed Hessian diagonals: row-sum bounds that dominate the
//! true Hessian in the Loewner order, so every Newton-style step can reuse
//! one precomputed reciprocal per coordinate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::{kron, Matrix, SYMMETRY_TOL};

/// Scale factor bounding the per-sample curvature of the sigmoid-link
/// squared loss; see `activation::DELTA_BOUND`.
pub const LFFR_CURVATURE: f64 = 0.155;

#[derive(Debug, Error, PartialEq)]
pub enum SfhError {
    #[error("hessian must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("hessian is asymmetric at ({row},{col}): |h - h^T| = {diff:e}")]
    Asymmetric { row: usize, col: usize, diff: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Linear,
    Lffr,
}

/// Diagonal upper bound of a Hessian, stored with its reciprocals. The
/// epsilon floor keeps every entry strictly positive, so the inverse
/// always exists whatever the data's sign pattern.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SfhDiagonal {
    loss_kind: LossKind,
    epsilon: f64,
    entries: Vec<f64>,
    #[serde(skip)]
    inverse_entries: Vec<f64>,
}

impl SfhDiagonal {
    fn from_entries(loss_kind: LossKind, epsilon: f64, entries: Vec<f64>) -> Self {
        let inverse_entries = entries.iter().map(|v| 1.0 / v).collect();
        SfhDiagonal {
            loss_kind,
            epsilon,
            entries,
            inverse_entries,
        }
    }

    pub fn loss_kind(&self) -> LossKind {
        self.loss_kind
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn inverse_entries(&self) -> &[f64] {
        &self.inverse_entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Dense diagonal matrix over the entries.
    pub fn to_matrix(&self) -> Matrix {
        let p = self.len();
        let mut m = Matrix::zeros(p, p);
        for k in 0..p {
            m.set(k, k, self.entries[k]);
        }
        m
    }
}

impl<'de> Deserialize<'de> for SfhDiagonal {
    fn deserialize<D>(deserializer: D) -> Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        #[derive(Deserialize)]
        struct Raw {
            loss_kind: LossKind,
            epsilon: f64,
            entries: Vec<f64>,
        }
        let raw = Raw::deserialize(deserializer)?;
        Ok(SfhDiagonal::from_entries(
            raw.loss_kind,
            raw.epsilon,
            raw.entries,
        ))
    }
}

/// s[k] = sum_j sum_i |x_ij x_ik| = sum_i |x_ik| * (sum_j |x_ij|), shared
/// by both loss-specific builders so their entries stay exactly
/// proportional.
fn abs_cross_sum(x: &Matrix) -> Vec<f64> {
    let row_abs: Vec<f64> = (0..x.rows())
        .map(|i| x.row(i).iter().map(|v| v.abs()).sum())
        .collect();
    (0..x.cols())
        .map(|k| {
            let mut acc = 0.0;
            for i in 0..x.rows() {
                acc += x.get(i, k).abs() * row_abs[i];
            }
            acc
        })
        .collect()
}

/// B_kk = epsilon + 2 sum_j sum_i |x_ij x_ik|, dominating 2 X^T X.
pub fn build_sfh_linear(x: &Matrix, epsilon: f64) -> SfhDiagonal {
    assert!(epsilon > 0.0, "epsilon must be > 0");
    let entries = abs_cross_sum(x)
        .into_iter()
        .map(|s| epsilon + 2.0 * s)
        .collect();
    SfhDiagonal::from_entries(LossKind::Linear, epsilon, entries)
}

/// B_kk = epsilon + 0.155 sum_j sum_i |x_ij x_ik|, dominating the
/// sigmoid-link Hessian via the global curvature bound.
pub fn build_sfh_lffr(x: &Matrix, epsilon: f64) -> SfhDiagonal {
    assert!(epsilon > 0.0, "epsilon must be > 0");
    let entries = abs_cross_sum(x)
        .into_iter()
        .map(|s| epsilon + LFFR_CURVATURE * s)
        .collect();
    SfhDiagonal::from_entries(LossKind::Lffr, epsilon, entries)
}

/// Generic quadratic-gradient diagonal from an explicit symmetric Hessian:
/// entries[k] = epsilon + sum_i |H_ki|. Tagged `linear` because in this
/// artifact it is only built from quadratic-loss Hessians.
pub fn build_quadratic_gradient_diag(h: &Matrix, epsilon: f64) -> Result<SfhDiagonal, SfhError> {
    assert!(epsilon > 0.0, "epsilon must be > 0");
    if h.rows() != h.cols() {
        return Err(SfhError::NotSquare {
            rows: h.rows(),
            cols: h.cols(),
        });
    }
    let scale = h.max_abs().max(1.0);
    for i in 0..h.rows() {
        for j in (i + 1)..h.cols() {
            let diff = (h.get(i, j) - h.get(j, i)).abs();
            if diff > SYMMETRY_TOL * scale {
                return Err(SfhError::Asymmetric { row: i, col: j, diff });
            }
        }
    }
    let entries = (0..h.rows())
        .map(|k| epsilon + h.row(k).iter().map(|v| v.abs()).sum::<f64>())
        .collect();
    Ok(SfhDiagonal::from_entries(LossKind::Linear, epsilon, entries))
}

/// The multi-output fixed Hessian I_c (x) diag(B) is never materialized:
/// every output block shares the one stored diagonal.
#[derive(Debug, Clone)]
pub struct ReplicatedSfh<'a> {
    diag: &'a SfhDiagonal,
    outputs: usize,
}

pub fn replicate_for_outputs(diag: &SfhDiagonal, c: usize) -> ReplicatedSfh<'_> {
    assert!(c >= 1, "output count must be >= 1");
    ReplicatedSfh { diag, outputs: c }
}

impl<'a> ReplicatedSfh<'a> {
    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn block(&self, output: usize) -> &'a SfhDiagonal {
        assert!(output < self.outputs, "output index out of range");
        self.diag
    }

    /// Full c(1+d) x c(1+d) block-diagonal matrix, for oracle comparison
    /// only.
    pub fn materialize(&self) -> Matrix {
        kron(&Matrix::identity(self.outputs), &self.diag.to_matrix())
    }
}
