//! Matrix-to-slot encodings. Feature rows are padded to a power-of-two
//! width and packed row-major; the weight row and the prepared diagonal
//! are replicated down every row-block so one ciphertext of each aligns
//! with every data block; each target column is replicated across its
//! row so it subtracts directly from a broadcast score.

use crate::matrix::Matrix;

use super::cipher::{CipherVector, SimContext, SimError, SimParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub n: usize,
    pub d: usize,
    pub c: usize,
    /// 1+d rounded up to a power of two.
    pub row_width: usize,
    pub rows_per_ciphertext: usize,
    pub ciphertext_count: usize,
}

pub fn plan_layout(
    n: usize,
    d: usize,
    c: usize,
    params: &SimParams,
) -> Result<Layout, SimError> {
    let row_width = (1 + d).next_power_of_two();
    if row_width > params.slot_count {
        return Err(SimError::Layout {
            reason: format!(
                "a record spans {row_width} slots but the ciphertext has only {}",
                params.slot_count
            ),
        });
    }
    if n == 0 || c == 0 {
        return Err(SimError::Layout {
            reason: "need at least one record and one output".into(),
        });
    }
    let rows_per_ciphertext = params.slot_count / row_width;
    Ok(Layout {
        n,
        d,
        c,
        row_width,
        rows_per_ciphertext,
        ciphertext_count: n.div_ceil(rows_per_ciphertext),
    })
}

/// n x row_width copy of `m` with zero padding on the right.
pub fn pad_rows(m: &Matrix, row_width: usize) -> Matrix {
    let mut out = Matrix::zeros(m.rows(), row_width);
    for i in 0..m.rows() {
        for k in 0..m.cols() {
            out.set(i, k, m.get(i, k));
        }
    }
    out
}

/// `rows` copies of one padded row, stacked.
pub fn replicate_row(row: &[f64], row_width: usize, rows: usize) -> Matrix {
    let mut out = Matrix::zeros(rows, row_width);
    for i in 0..rows {
        for (k, &v) in row.iter().enumerate() {
            out.set(i, k, v);
        }
    }
    out
}

/// n x row_width matrix whose row i holds y[i][j] in every slot.
pub fn replicate_target_column(y: &Matrix, j: usize, row_width: usize) -> Matrix {
    let mut out = Matrix::zeros(y.rows(), row_width);
    for i in 0..y.rows() {
        for k in 0..row_width {
            out.set(i, k, y.get(i, j));
        }
    }
    out
}

pub struct EncodedDataset {
    /// Data blocks, ascending row-major.
    pub ct_x: Vec<CipherVector>,
    /// ct_y[output][block], targets replicated across each row.
    pub ct_y: Vec<Vec<CipherVector>>,
    /// One per output: the weight row replicated down all row-blocks.
    pub ct_beta: Vec<CipherVector>,
    /// The prepared diagonal (reciprocals of the fixed Hessian's entries)
    /// replicated down all row-blocks.
    pub ct_bbar: CipherVector,
    pub layout: Layout,
}

/// Encrypts the client-prepared matrices: scaled features, transformed
/// targets, initial weights, and the already-inverted diagonal.
pub fn encode_dataset(
    ctx: &mut SimContext,
    x: &Matrix,
    targets: &Matrix,
    inv_diag: &[f64],
    w0: &Matrix,
    layout: Layout,
) -> Result<EncodedDataset, SimError> {
    let w = layout.row_width;
    let ct_x = ctx.encrypt(&pad_rows(x, w))?;
    let mut ct_y = Vec::with_capacity(layout.c);
    for j in 0..layout.c {
        ct_y.push(ctx.encrypt(&replicate_target_column(targets, j, w))?);
    }
    let mut ct_beta = Vec::with_capacity(layout.c);
    for j in 0..layout.c {
        ct_beta.push(
            ctx.encrypt(&replicate_row(w0.row(j), w, layout.rows_per_ciphertext))?
                .remove(0),
        );
    }
    let ct_bbar = ctx
        .encrypt(&replicate_row(inv_diag, w, layout.rows_per_ciphertext))?
        .remove(0);
    Ok(EncodedDataset {
        ct_x,
        ct_y,
        ct_beta,
        ct_bbar,
        layout,
    })
}
