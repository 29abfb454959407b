//! Dataset ingestion, min-max feature scaling into [-1, +1], target
//! normalization with recorded parameters, and the seeded synthetic
//! generator.

use std::path::Path;

use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::Matrix;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("csv error at data row {row}: {source}")]
    Csv { row: usize, source: csv::Error },
    #[error("no data rows")]
    NoDataRows,
    #[error("data row {row} has {got} fields, expected {expected}")]
    Ragged {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("data row {row}, column {col}: cannot parse {value:?} as a number")]
    Parse {
        row: usize,
        col: usize,
        value: String,
    },
    #[error("data row {row}, column {col}: non-finite value")]
    NonFinite { row: usize, col: usize },
    #[error("need at least one feature column besides {n_targets} target columns, file has {columns}")]
    TooFewColumns { columns: usize, n_targets: usize },
    #[error("target count must be at least 1")]
    NoTargets,
    #[error("feature count mismatch: data has {got} features, scaling was fitted on {expected}")]
    ScalingMismatch { got: usize, expected: usize },
    #[error("invalid dataset: {reason}")]
    Invalid { reason: String },
}

/// Per-feature min-max parameters mapping raw values into [-1, +1].
/// A degenerate column (max = min) maps to 0, keeping the bias column the
/// only constant regressor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaling {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl FeatureScaling {
    pub fn dims(&self) -> usize {
        self.min.len()
    }

    /// Identity scaling for data already in [-1, +1].
    pub fn nominal(d: usize) -> Self {
        FeatureScaling {
            min: vec![-1.0; d],
            max: vec![1.0; d],
        }
    }

    pub fn scale_value(&self, col: usize, v: f64) -> f64 {
        let (lo, hi) = (self.min[col], self.max[col]);
        if hi == lo {
            0.0
        } else {
            2.0 * (v - lo) / (hi - lo) - 1.0
        }
    }

    /// Scales a raw feature row and prepends the bias slot.
    pub fn scale_row(&self, raw: &[f64]) -> Result<Vec<f64>, DataError> {
        if raw.len() != self.dims() {
            return Err(DataError::ScalingMismatch {
                got: raw.len(),
                expected: self.dims(),
            });
        }
        let mut out = Vec::with_capacity(1 + raw.len());
        out.push(1.0);
        for (j, v) in raw.iter().enumerate() {
            out.push(self.scale_value(j, *v));
        }
        Ok(out)
    }
}

/// A design matrix with the bias column at index 0 plus raw targets.
/// The fitting loader and the generator produce features inside [-1, +1];
/// applying a stored scaling to unseen data may extrapolate outside.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Matrix,
    pub y: Matrix,
    pub scaling: FeatureScaling,
}

impl Dataset {
    pub fn new(x: Matrix, y: Matrix, scaling: FeatureScaling) -> Result<Self, DataError> {
        if x.cols() < 2 {
            return Err(DataError::Invalid {
                reason: "need a bias column plus at least one feature".into(),
            });
        }
        if x.rows() != y.rows() {
            return Err(DataError::Invalid {
                reason: format!("X has {} rows, Y has {}", x.rows(), y.rows()),
            });
        }
        if scaling.dims() != x.cols() - 1 {
            return Err(DataError::Invalid {
                reason: format!(
                    "scaling covers {} features, X has {}",
                    scaling.dims(),
                    x.cols() - 1
                ),
            });
        }
        if !x.is_finite() || !y.is_finite() {
            return Err(DataError::Invalid {
                reason: "non-finite entry".into(),
            });
        }
        for i in 0..x.rows() {
            if x.get(i, 0) != 1.0 {
                return Err(DataError::Invalid {
                    reason: format!("bias column entry at row {i} is {}, expected 1", x.get(i, 0)),
                });
            }
        }
        Ok(Dataset { x, y, scaling })
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    /// Feature count without the bias slot.
    pub fn d(&self) -> usize {
        self.x.cols() - 1
    }

    /// Output count.
    pub fn c(&self) -> usize {
        self.y.cols()
    }
}

/// Per-output target normalization record plus the feature scaling that
/// travels with a trained model. `gamma` and the feature fields are
/// stamped by the trainer; `normalize_targets` fills the target fields and
/// leaves the rest at their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormParams {
    pub y_min: Vec<f64>,
    pub y_max: Vec<f64>,
    pub epsilon: f64,
    pub gamma: f64,
    pub feature_min: Vec<f64>,
    pub feature_max: Vec<f64>,
}

fn read_raw(path: &Path, n_targets: usize) -> Result<(Vec<Vec<f64>>, usize), DataError> {
    if n_targets == 0 {
        return Err(DataError::NoTargets);
    }
    let file = std::fs::File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let columns = reader
        .headers()
        .map_err(|source| DataError::Csv { row: 0, source })?
        .len();
    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let row = idx + 1;
        let record = record.map_err(|source| DataError::Csv { row, source })?;
        if record.len() != columns {
            return Err(DataError::Ragged {
                row,
                got: record.len(),
                expected: columns,
            });
        }
        let mut values = Vec::with_capacity(columns);
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| DataError::Parse {
                row,
                col: j + 1,
                value: field.to_string(),
            })?;
            if !v.is_finite() {
                return Err(DataError::NonFinite { row, col: j + 1 });
            }
            values.push(v);
        }
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(DataError::NoDataRows);
    }
    if columns < n_targets + 1 {
        return Err(DataError::TooFewColumns { columns, n_targets });
    }
    Ok((rows, columns))
}

fn build_dataset(
    rows: Vec<Vec<f64>>,
    d: usize,
    c: usize,
    scaling: FeatureScaling,
) -> Result<Dataset, DataError> {
    let n = rows.len();
    let mut x = Matrix::zeros(n, 1 + d);
    let mut y = Matrix::zeros(n, c);
    for (i, row) in rows.iter().enumerate() {
        x.set(i, 0, 1.0);
        for j in 0..d {
            x.set(i, 1 + j, scaling.scale_value(j, row[j]));
        }
        for k in 0..c {
            y.set(i, k, row[d + k]);
        }
    }
    Dataset::new(x, y, scaling)
}

/// Loads a CSV (one header row, last `n_targets` columns are targets),
/// fits per-feature min-max scaling into [-1, +1], and prepends the bias
/// column. Targets are kept raw. Row/column indices in errors are 1-based
/// over data rows.
pub fn load_csv(path: impl AsRef<Path>, n_targets: usize) -> Result<Dataset, DataError> {
    let (rows, columns) = read_raw(path.as_ref(), n_targets)?;
    let d = columns - n_targets;
    let mut min = vec![f64::INFINITY; d];
    let mut max = vec![f64::NEG_INFINITY; d];
    for row in &rows {
        for j in 0..d {
            min[j] = min[j].min(row[j]);
            max[j] = max[j].max(row[j]);
        }
    }
    build_dataset(rows, d, n_targets, FeatureScaling { min, max })
}

/// Loads a CSV applying a previously fitted scaling (inference-time reuse).
pub fn load_csv_scaled(
    path: impl AsRef<Path>,
    n_targets: usize,
    scaling: &FeatureScaling,
) -> Result<Dataset, DataError> {
    let (rows, columns) = read_raw(path.as_ref(), n_targets)?;
    let d = columns - n_targets;
    if scaling.dims() != d {
        return Err(DataError::ScalingMismatch {
            got: d,
            expected: scaling.dims(),
        });
    }
    build_dataset(rows, d, n_targets, scaling.clone())
}

/// Per-output min-max normalization: ybar = (y - y_min)/(y_max - y_min + eps).
/// With eps > 0 every output lands in [0, 1). A constant column maps to 0.
pub fn normalize_targets(y: &Matrix, epsilon: f64) -> (Matrix, NormParams) {
    let c = y.cols();
    let mut y_min = vec![f64::INFINITY; c];
    let mut y_max = vec![f64::NEG_INFINITY; c];
    for i in 0..y.rows() {
        for j in 0..c {
            y_min[j] = y_min[j].min(y.get(i, j));
            y_max[j] = y_max[j].max(y.get(i, j));
        }
    }
    let mut out = Matrix::zeros(y.rows(), c);
    for j in 0..c {
        let denom = y_max[j] - y_min[j] + epsilon;
        for i in 0..y.rows() {
            let v = if denom == 0.0 {
                0.0
            } else {
                (y.get(i, j) - y_min[j]) / denom
            };
            out.set(i, j, v);
        }
    }
    let params = NormParams {
        y_min,
        y_max,
        epsilon,
        gamma: 0.5,
        feature_min: Vec::new(),
        feature_max: Vec::new(),
    };
    (out, params)
}

/// Inverse of `normalize_targets` for one output:
/// y = (y_max - y_min + eps) * prob + y_min.
pub fn denormalize_prediction(prob: f64, params: &NormParams, output: usize) -> f64 {
    (params.y_max[output] - params.y_min[output] + params.epsilon) * prob + params.y_min[output]
}

/// Synthetic regression data: features uniform in [-1, +1], per-output
/// coefficients r uniform in [-1, +1] (no intercept), and
/// y_ij = nois + sum_k r_jk x_ik with nois ~ N(0, sigma^2).
///
/// The generator is xoshiro256++ seeded through splitmix64 (the
/// `seed_from_u64` expansion), so equal seeds give bit-identical data.
/// Draw order is fixed: all of r row-major first, then per record its d
/// features followed by c noise draws.
pub fn synth(n: usize, d: usize, c: usize, sigma: f64, seed: u64) -> (Dataset, Matrix) {
    assert!(n >= 1 && d >= 1 && c >= 1, "n, d, c must all be >= 1");
    assert!(sigma >= 0.0 && sigma.is_finite(), "sigma must be >= 0");
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let unit = Uniform::new_inclusive(-1.0f64, 1.0).expect("constant bounds");
    let mut r = Matrix::zeros(c, d);
    for j in 0..c {
        for k in 0..d {
            r.set(j, k, unit.sample(&mut rng));
        }
    }
    let mut x = Matrix::zeros(n, 1 + d);
    let mut y = Matrix::zeros(n, c);
    for i in 0..n {
        x.set(i, 0, 1.0);
        for k in 0..d {
            x.set(i, 1 + k, unit.sample(&mut rng));
        }
        for j in 0..c {
            let z: f64 = StandardNormal.sample(&mut rng);
            let mut acc = sigma * z;
            for k in 0..d {
                acc += r.get(j, k) * x.get(i, 1 + k);
            }
            y.set(i, j, acc);
        }
    }
    let dataset = Dataset::new(x, y, FeatureScaling::nominal(d))
        .expect("generated data satisfies the dataset invariants");
    (dataset, r)
}
