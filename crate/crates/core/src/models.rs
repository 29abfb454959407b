//! The four trainers: plain linear regression, linear regression on
//! normalized targets, LFFR (sigmoid link on normalized targets), and
//! improved LFFR (logit-transformed targets fed to the plain linear loop).
//! All share one fixed-Hessian update; each iteration multiplies the
//! gradient by reciprocals precomputed from the data.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activation::{poly_sigmoid, sigmoid, ActivationError};
use crate::data::{denormalize_prediction, normalize_targets, Dataset, FeatureScaling, NormParams};
use crate::matrix::Matrix;
use crate::sfh::{build_sfh_lffr, build_sfh_linear, SfhDiagonal};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("{op}: {detail}")]
    Shape { op: &'static str, detail: String },
    #[error("diverged at iteration {iteration}: non-finite weight")]
    Divergence { iteration: usize },
    #[error("invalid config: {reason}")]
    InvalidConfig { reason: String },
    #[error("model kind {0:?} requires normalization parameters")]
    MissingNorm(ModelKind),
    #[error(transparent)]
    Domain(#[from] ActivationError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Linear,
    YnormLinear,
    Lffr,
    ImprovedLffr,
}

impl ModelKind {
    /// Kinds whose training loop is exactly the linear-regression circuit.
    pub fn is_linear_family(self) -> bool {
        !matches!(self, ModelKind::Lffr)
    }

    /// Kinds that carry normalization parameters in their bundle.
    pub fn needs_norm(self) -> bool {
        !matches!(self, ModelKind::Linear)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SigmoidImpl {
    Exact,
    Poly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub iterations: usize,
    pub epsilon: f64,
    pub gamma: f64,
    pub sigmoid_impl: SigmoidImpl,
}

impl TrainConfig {
    pub fn new(iterations: usize) -> Self {
        TrainConfig {
            iterations,
            epsilon: 1e-8,
            gamma: 0.5,
            sigmoid_impl: SigmoidImpl::Exact,
        }
    }

    pub(crate) fn validate(&self) -> Result<(), ModelError> {
        if self.iterations < 1 {
            return Err(ModelError::InvalidConfig {
                reason: "iteration count must be at least 1".into(),
            });
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(ModelError::InvalidConfig {
                reason: format!("epsilon must be a positive number, got {}", self.epsilon),
            });
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(ModelError::InvalidConfig {
                reason: format!("gamma must lie strictly between 0 and 1, got {}", self.gamma),
            });
        }
        Ok(())
    }
}

/// c x (1+d) weights; row j is output j's coefficients, bias at index 0.
/// Serializes as nested row arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix(pub Matrix);

impl Serialize for WeightMatrix {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<&[f64]> = (0..self.0.rows()).map(|i| self.0.row(i)).collect();
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for WeightMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(deserializer)?;
        Matrix::from_rows(&rows)
            .map(WeightMatrix)
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub kind: ModelKind,
    pub weights: WeightMatrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm_params: Option<NormParams>,
    pub feature_scaling: FeatureScaling,
}

impl ModelBundle {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.kind.needs_norm() && self.norm_params.is_none() {
            return Err(ModelError::MissingNorm(self.kind));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub mse_original: f64,
    pub mse_transformed: f64,
    pub grad_maxnorm: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainTrace {
    pub records: Vec<TraceRecord>,
}

impl TrainTrace {
    /// CSV with the header `iter,mse_original,mse_transformed,grad_maxnorm`.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        for record in &self.records {
            w.serialize(record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

fn check_shapes(
    op: &'static str,
    x: &Matrix,
    y: &Matrix,
    w: &Matrix,
) -> Result<(), ModelError> {
    if x.rows() != y.rows() || w.cols() != x.cols() || w.rows() != y.cols() {
        return Err(ModelError::Shape {
            op,
            detail: format!(
                "X is {}x{}, Y is {}x{}, W is {}x{}",
                x.rows(),
                x.cols(),
                y.rows(),
                y.cols(),
                w.rows(),
                w.cols()
            ),
        });
    }
    Ok(())
}

/// Row j = 2 sum_i (x_i . w_j - y_ij) x_i. Each output accumulates
/// independently, so joint and per-output training agree to the bit.
pub fn grad_linear(x: &Matrix, y: &Matrix, w: &Matrix) -> Result<Matrix, ModelError> {
    check_shapes("grad_linear", x, y, w)?;
    let (n, p, c) = (x.rows(), x.cols(), y.cols());
    let mut g = Matrix::zeros(c, p);
    for j in 0..c {
        for i in 0..n {
            let mut z = 0.0;
            for k in 0..p {
                z += x.get(i, k) * w.get(j, k);
            }
            let r = z - y.get(i, j);
            for k in 0..p {
                g.set(j, k, g.get(j, k) + r * x.get(i, k));
            }
        }
        for k in 0..p {
            g.set(j, k, 2.0 * g.get(j, k));
        }
    }
    Ok(g)
}

/// Row j = 2 sum_i (s - ybar_ij) s (1 - s) x_i with s = link(x_i . w_j),
/// where the link is the exact sigmoid or its polynomial surrogate.
pub fn grad_lffr(
    x: &Matrix,
    ybar: &Matrix,
    w: &Matrix,
    sigmoid_impl: SigmoidImpl,
) -> Result<Matrix, ModelError> {
    check_shapes("grad_lffr", x, ybar, w)?;
    let (n, p, c) = (x.rows(), x.cols(), ybar.cols());
    let link = match sigmoid_impl {
        SigmoidImpl::Exact => sigmoid,
        SigmoidImpl::Poly => poly_sigmoid,
    };
    let mut g = Matrix::zeros(c, p);
    for j in 0..c {
        for i in 0..n {
            let mut z = 0.0;
            for k in 0..p {
                z += x.get(i, k) * w.get(j, k);
            }
            let s = link(z);
            let f = (s - ybar.get(i, j)) * (s * (1.0 - s));
            for k in 0..p {
                g.set(j, k, g.get(j, k) + f * x.get(i, k));
            }
        }
        for k in 0..p {
            g.set(j, k, 2.0 * g.get(j, k));
        }
    }
    Ok(g)
}

/// W' = W - grad scaled by the stored reciprocals. `iteration` only labels
/// the divergence error.
pub fn fixed_hessian_step(
    w: &Matrix,
    grad: &Matrix,
    diag: &SfhDiagonal,
    iteration: usize,
) -> Result<Matrix, ModelError> {
    if w.rows() != grad.rows() || w.cols() != grad.cols() || diag.len() != w.cols() {
        return Err(ModelError::Shape {
            op: "fixed_hessian_step",
            detail: format!(
                "W is {}x{}, grad is {}x{}, diagonal has {} entries",
                w.rows(),
                w.cols(),
                grad.rows(),
                grad.cols(),
                diag.len()
            ),
        });
    }
    let inv = diag.inverse_entries();
    let mut out = Matrix::zeros(w.rows(), w.cols());
    for j in 0..w.rows() {
        for k in 0..w.cols() {
            let v = w.get(j, k) - grad.get(j, k) * inv[k];
            if !v.is_finite() {
                return Err(ModelError::Divergence { iteration });
            }
            out.set(j, k, v);
        }
    }
    Ok(out)
}

/// The improved-LFFR target map: logit(v*gamma + 0.5 - gamma/2), taking a
/// normalized target v in [0,1) into the logit of a gamma-compressed
/// likelihood. Public so callers can reproduce the trainer's transform
/// bit for bit.
pub fn improved_transform(v: f64, gamma: f64) -> Result<f64, ActivationError> {
    crate::activation::logit(v * gamma + 0.5 - gamma / 2.0)
}

/// Inverse of the improved-LFFR link for one output:
/// y = (y_max - y_min + eps) * (prob - 0.5 + gamma/2)/gamma + y_min.
fn improved_inverse(prob: f64, norm: &NormParams, output: usize) -> f64 {
    denormalize_prediction((prob - 0.5 + norm.gamma / 2.0) / norm.gamma, norm, output)
}

/// z_ij = x_i . w_j for every record and output.
fn linear_scores(x: &Matrix, w: &Matrix) -> Matrix {
    let (n, p, c) = (x.rows(), x.cols(), w.rows());
    let mut z = Matrix::zeros(n, c);
    for i in 0..n {
        for j in 0..c {
            let mut acc = 0.0;
            for k in 0..p {
                acc += x.get(i, k) * w.get(j, k);
            }
            z.set(i, j, acc);
        }
    }
    z
}

fn apply_link(z: &Matrix, sigmoid_impl: SigmoidImpl) -> Matrix {
    let link = match sigmoid_impl {
        SigmoidImpl::Exact => sigmoid,
        SigmoidImpl::Poly => poly_sigmoid,
    };
    let mut out = Matrix::zeros(z.rows(), z.cols());
    for i in 0..z.rows() {
        for j in 0..z.cols() {
            out.set(i, j, link(z.get(i, j)));
        }
    }
    out
}

/// Predictions in the original target space for the given kind. The
/// training trace evaluates the link with the trainer's own sigmoid
/// implementation so encrypted-mode traces stay comparable.
pub(crate) fn forward_original(
    kind: ModelKind,
    x: &Matrix,
    w: &Matrix,
    norm: Option<&NormParams>,
    sigmoid_impl: SigmoidImpl,
) -> Result<Matrix, ModelError> {
    let z = linear_scores(x, w);
    match kind {
        ModelKind::Linear => Ok(z),
        ModelKind::YnormLinear => {
            let norm = norm.ok_or(ModelError::MissingNorm(kind))?;
            let mut out = Matrix::zeros(z.rows(), z.cols());
            for i in 0..z.rows() {
                for j in 0..z.cols() {
                    out.set(i, j, denormalize_prediction(z.get(i, j), norm, j));
                }
            }
            Ok(out)
        }
        ModelKind::Lffr => {
            let norm = norm.ok_or(ModelError::MissingNorm(kind))?;
            let probs = apply_link(&z, sigmoid_impl);
            let mut out = Matrix::zeros(z.rows(), z.cols());
            for i in 0..z.rows() {
                for j in 0..z.cols() {
                    out.set(i, j, denormalize_prediction(probs.get(i, j), norm, j));
                }
            }
            Ok(out)
        }
        ModelKind::ImprovedLffr => {
            let norm = norm.ok_or(ModelError::MissingNorm(kind))?;
            let probs = apply_link(&z, sigmoid_impl);
            let mut out = Matrix::zeros(z.rows(), z.cols());
            for i in 0..z.rows() {
                for j in 0..z.cols() {
                    out.set(i, j, improved_inverse(probs.get(i, j), norm, j));
                }
            }
            Ok(out)
        }
    }
}

pub(crate) fn transformed_mse(
    kind: ModelKind,
    x: &Matrix,
    targets: &Matrix,
    w: &Matrix,
    sigmoid_impl: SigmoidImpl,
) -> Result<f64, ModelError> {
    let z = linear_scores(x, w);
    let fitted = if kind.is_linear_family() {
        z
    } else {
        apply_link(&z, sigmoid_impl)
    };
    mse(&fitted, targets)
}

/// Builds the training-space targets and the normalization record for a
/// kind. Shared by the cleartext and the encrypted trainers so the two
/// pipelines transform targets identically.
pub(crate) fn prepare_targets(
    dataset: &Dataset,
    kind: ModelKind,
    cfg: &TrainConfig,
) -> Result<(Matrix, Option<NormParams>), ModelError> {
    match kind {
        ModelKind::Linear => Ok((dataset.y.clone(), None)),
        ModelKind::YnormLinear | ModelKind::Lffr => {
            let (t, mut norm) = normalize_targets(&dataset.y, cfg.epsilon);
            stamp_norm(&mut norm, cfg, dataset);
            Ok((t, Some(norm)))
        }
        ModelKind::ImprovedLffr => {
            let (t01, mut norm) = normalize_targets(&dataset.y, cfg.epsilon);
            stamp_norm(&mut norm, cfg, dataset);
            let mut t = Matrix::zeros(t01.rows(), t01.cols());
            for i in 0..t01.rows() {
                for j in 0..t01.cols() {
                    t.set(i, j, improved_transform(t01.get(i, j), cfg.gamma)?);
                }
            }
            Ok((t, Some(norm)))
        }
    }
}

fn stamp_norm(norm: &mut NormParams, cfg: &TrainConfig, dataset: &Dataset) {
    norm.gamma = cfg.gamma;
    norm.feature_min = dataset.scaling.min.clone();
    norm.feature_max = dataset.scaling.max.clone();
}

/// Runs the fixed-Hessian loop from zero weights. The trace records, per
/// iteration, the MSE in the original target space, the MSE in the space
/// the optimizer works in, and the gradient max-norm.
pub fn train(
    dataset: &Dataset,
    kind: ModelKind,
    cfg: &TrainConfig,
) -> Result<(ModelBundle, TrainTrace), ModelError> {
    cfg.validate()?;
    let x = &dataset.x;
    let (targets, norm_params) = prepare_targets(dataset, kind, cfg)?;
    let diag = match kind {
        ModelKind::Lffr => build_sfh_lffr(x, cfg.epsilon),
        _ => build_sfh_linear(x, cfg.epsilon),
    };
    let mut w = Matrix::zeros(dataset.c(), x.cols());
    let mut trace = TrainTrace::default();
    for iter in 1..=cfg.iterations {
        let grad = if kind.is_linear_family() {
            grad_linear(x, &targets, &w)?
        } else {
            grad_lffr(x, &targets, &w, cfg.sigmoid_impl)?
        };
        w = fixed_hessian_step(&w, &grad, &diag, iter)?;
        let fitted = forward_original(kind, x, &w, norm_params.as_ref(), cfg.sigmoid_impl)?;
        trace.records.push(TraceRecord {
            iter,
            mse_original: mse(&fitted, &dataset.y)?,
            mse_transformed: transformed_mse(kind, x, &targets, &w, cfg.sigmoid_impl)?,
            grad_maxnorm: grad.max_abs(),
        });
    }
    let bundle = ModelBundle {
        kind,
        weights: WeightMatrix(w),
        norm_params,
        feature_scaling: dataset.scaling.clone(),
    };
    Ok((bundle, trace))
}

/// Predicts all outputs for one already-scaled feature row (bias slot
/// included). Inference always uses the exact sigmoid; the polynomial
/// surrogate exists for the encrypted training loop only.
pub fn predict(bundle: &ModelBundle, x_scaled: &[f64]) -> Result<Vec<f64>, ModelError> {
    bundle.validate()?;
    let w = &bundle.weights.0;
    if x_scaled.len() != w.cols() {
        return Err(ModelError::Shape {
            op: "predict",
            detail: format!(
                "feature vector has {} entries, model expects {}",
                x_scaled.len(),
                w.cols()
            ),
        });
    }
    let norm = bundle.norm_params.as_ref();
    let mut out = Vec::with_capacity(w.rows());
    for j in 0..w.rows() {
        let mut z = 0.0;
        for k in 0..w.cols() {
            z += w.get(j, k) * x_scaled[k];
        }
        let v = match bundle.kind {
            ModelKind::Linear => z,
            ModelKind::YnormLinear => denormalize_prediction(z, norm.expect("validated"), j),
            ModelKind::Lffr => denormalize_prediction(sigmoid(z), norm.expect("validated"), j),
            ModelKind::ImprovedLffr => improved_inverse(sigmoid(z), norm.expect("validated"), j),
        };
        out.push(v);
    }
    Ok(out)
}

/// Original-space predictions for a whole design matrix.
pub fn predict_matrix(bundle: &ModelBundle, x: &Matrix) -> Result<Matrix, ModelError> {
    bundle.validate()?;
    forward_original(
        bundle.kind,
        x,
        &bundle.weights.0,
        bundle.norm_params.as_ref(),
        SigmoidImpl::Exact,
    )
}

/// Mean over all n*c squared residuals.
pub fn mse(predictions: &Matrix, y: &Matrix) -> Result<f64, ModelError> {
    if predictions.rows() != y.rows() || predictions.cols() != y.cols() {
        return Err(ModelError::Shape {
            op: "mse",
            detail: format!(
                "predictions are {}x{}, targets are {}x{}",
                predictions.rows(),
                predictions.cols(),
                y.rows(),
                y.cols()
            ),
        });
    }
    let mut acc = 0.0;
    for i in 0..y.rows() {
        for j in 0..y.cols() {
            let r = predictions.get(i, j) - y.get(i, j);
            acc += r * r;
        }
    }
    Ok(acc / (y.rows() as f64 * y.cols() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synth;

    fn mat(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn grad_linear_single_term() {
        let g = grad_linear(&mat(&[&[1.0]]), &mat(&[&[1.0]]), &mat(&[&[0.0]])).unwrap();
        assert_eq!(g.data(), &[-2.0]);
    }

    #[test]
    fn grad_linear_zero_at_solution() {
        // y = 1 + 2x fits exactly.
        let x = mat(&[&[1.0, 0.5], &[1.0, -0.5], &[1.0, 1.0]]);
        let y = mat(&[&[2.0], &[0.0], &[3.0]]);
        let w = mat(&[&[1.0, 2.0]]);
        let g = grad_linear(&x, &y, &w).unwrap();
        assert!(g.max_abs() < 1e-14);
    }

    #[test]
    fn grad_lffr_known_values() {
        let x = mat(&[&[1.0]]);
        let w = mat(&[&[0.0]]);
        let g = grad_lffr(&x, &mat(&[&[0.5]]), &w, SigmoidImpl::Exact).unwrap();
        assert_eq!(g.data(), &[0.0]);
        let g = grad_lffr(&x, &mat(&[&[1.0]]), &w, SigmoidImpl::Exact).unwrap();
        assert_eq!(g.data(), &[-0.25]);
    }

    #[test]
    fn step_zero_gradient_is_identity() {
        let diag = build_sfh_linear(&mat(&[&[1.0, 0.5]]), 1e-8);
        let w = mat(&[&[0.7, -0.2]]);
        let out = fixed_hessian_step(&w, &Matrix::zeros(1, 2), &diag, 1).unwrap();
        assert_eq!(out, w);
    }

    #[test]
    fn step_single_sample_moves_toward_target() {
        let x = mat(&[&[1.0]]);
        let diag = build_sfh_linear(&x, 1e-8);
        let g = grad_linear(&x, &mat(&[&[1.0]]), &Matrix::zeros(1, 1)).unwrap();
        let w = fixed_hessian_step(&Matrix::zeros(1, 1), &g, &diag, 1).unwrap();
        assert!((w.get(0, 0) - 2.0 / (2.0 + 1e-8)).abs() < 1e-12);
    }

    #[test]
    fn step_detects_divergence() {
        // Zero column: diagonal entry is bare epsilon, reciprocal 1e8.
        let diag = build_sfh_linear(&mat(&[&[0.0]]), 1e-8);
        let g = Matrix::from_vec(1, 1, vec![f64::MAX]).unwrap();
        match fixed_hessian_step(&Matrix::zeros(1, 1), &g, &diag, 7) {
            Err(ModelError::Divergence { iteration: 7 }) => {}
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn step_commutes_with_output_permutation() {
        let x = mat(&[&[1.0, 0.5], &[1.0, -0.25]]);
        let diag = build_sfh_linear(&x, 1e-8);
        let y = mat(&[&[1.0, -2.0], &[0.5, 3.0]]);
        let w = mat(&[&[0.1, 0.2], &[-0.3, 0.4]]);
        let g = grad_linear(&x, &y, &w).unwrap();
        let stepped = fixed_hessian_step(&w, &g, &diag, 1).unwrap();

        let swap = |m: &Matrix| mat(&[m.row(1), m.row(0)]);
        let yp = mat(&[&[-2.0, 1.0], &[3.0, 0.5]]);
        let gp = grad_linear(&x, &yp, &swap(&w)).unwrap();
        let stepped_p = fixed_hessian_step(&swap(&w), &gp, &diag, 1).unwrap();
        assert_eq!(swap(&stepped), stepped_p);
    }

    #[test]
    fn rejects_zero_iterations() {
        let (ds, _) = synth(5, 2, 1, 0.0, 1);
        let cfg = TrainConfig::new(0);
        assert!(matches!(
            train(&ds, ModelKind::Linear, &cfg),
            Err(ModelError::InvalidConfig { .. })
        ));
    }

    #[test]
    fn rejects_bad_gamma() {
        let (ds, _) = synth(5, 2, 1, 0.0, 1);
        let mut cfg = TrainConfig::new(3);
        cfg.gamma = 1.0;
        assert!(matches!(
            train(&ds, ModelKind::ImprovedLffr, &cfg),
            Err(ModelError::InvalidConfig { .. })
        ));
    }

    #[test]
    fn linear_converges_on_noiseless_data() {
        let (ds, r) = synth(60, 3, 2, 0.0, 5);
        let (bundle, trace) = train(&ds, ModelKind::Linear, &TrainConfig::new(150)).unwrap();
        let w = &bundle.weights.0;
        for j in 0..2 {
            assert!(w.get(j, 0).abs() < 1e-3, "bias output {j}");
            for k in 0..3 {
                assert!((w.get(j, 1 + k) - r.get(j, k)).abs() < 1e-3);
            }
        }
        assert!(trace.records.last().unwrap().mse_original < 1e-6);
    }

    #[test]
    fn improved_lffr_equals_linear_on_transformed_targets() {
        let (ds, _) = synth(25, 3, 2, 0.05, 9);
        let cfg = TrainConfig::new(40);
        let (imp, _) = train(&ds, ModelKind::ImprovedLffr, &cfg).unwrap();

        let (t01, _) = normalize_targets(&ds.y, cfg.epsilon);
        let mut t = Matrix::zeros(t01.rows(), t01.cols());
        for i in 0..t01.rows() {
            for j in 0..t01.cols() {
                t.set(i, j, improved_transform(t01.get(i, j), cfg.gamma).unwrap());
            }
        }
        let ds_t = Dataset::new(ds.x.clone(), t, ds.scaling.clone()).unwrap();
        let (lin, _) = train(&ds_t, ModelKind::Linear, &cfg).unwrap();

        let (wi, wl) = (&imp.weights.0, &lin.weights.0);
        for j in 0..wi.rows() {
            for k in 0..wi.cols() {
                assert_eq!(wi.get(j, k).to_bits(), wl.get(j, k).to_bits());
            }
        }
    }

    #[test]
    fn transformed_trace_is_monotone_for_linear_family() {
        let (ds, _) = synth(30, 4, 2, 0.1, 13);
        for kind in [ModelKind::Linear, ModelKind::YnormLinear, ModelKind::ImprovedLffr] {
            let (_, trace) = train(&ds, kind, &TrainConfig::new(60)).unwrap();
            for pair in trace.records.windows(2) {
                assert!(
                    pair[1].mse_transformed <= pair[0].mse_transformed + 1e-12,
                    "{kind:?} rose at iter {}",
                    pair[1].iter
                );
            }
        }
    }

    #[test]
    fn lffr_beats_linear_on_sigmoid_shaped_targets() {
        // Targets follow an affine sigmoid of a linear score, the shape
        // LFFR exists to capture.
        let n = 80;
        let mut rows = Vec::new();
        let mut ys = Vec::new();
        for i in 0..n {
            let x = -1.0 + 2.0 * (i as f64) / ((n - 1) as f64);
            rows.push(vec![1.0, x]);
            ys.push(vec![2.0 + 3.0 * sigmoid(4.0 * x)]);
        }
        let ds = Dataset::new(
            Matrix::from_rows(&rows).unwrap(),
            Matrix::from_rows(&ys).unwrap(),
            FeatureScaling::nominal(1),
        )
        .unwrap();
        let cfg = TrainConfig::new(120);
        let (_, lffr_trace) = train(&ds, ModelKind::Lffr, &cfg).unwrap();
        let (_, lin_trace) = train(&ds, ModelKind::Linear, &cfg).unwrap();
        let lffr_final = lffr_trace.records.last().unwrap().mse_original;
        let lin_final = lin_trace.records.last().unwrap().mse_original;
        assert!(
            lffr_final < lin_final,
            "lffr {lffr_final} vs linear {lin_final}"
        );
    }

    #[test]
    fn predict_zero_weights_hits_midpoint() {
        let norm = NormParams {
            y_min: vec![0.0],
            y_max: vec![10.0],
            epsilon: 0.0,
            gamma: 0.5,
            feature_min: vec![-1.0],
            feature_max: vec![1.0],
        };
        for kind in [ModelKind::Lffr, ModelKind::ImprovedLffr] {
            let bundle = ModelBundle {
                kind,
                weights: WeightMatrix(Matrix::zeros(1, 2)),
                norm_params: Some(norm.clone()),
                feature_scaling: FeatureScaling::nominal(1),
            };
            let out = predict(&bundle, &[1.0, 0.3]).unwrap();
            assert_eq!(out, vec![5.0], "{kind:?}");
        }
        let linear = ModelBundle {
            kind: ModelKind::Linear,
            weights: WeightMatrix(Matrix::zeros(1, 2)),
            norm_params: None,
            feature_scaling: FeatureScaling::nominal(1),
        };
        assert_eq!(predict(&linear, &[1.0, 0.9]).unwrap(), vec![0.0]);
    }

    #[test]
    fn predict_rejects_dimension_mismatch() {
        let bundle = ModelBundle {
            kind: ModelKind::Linear,
            weights: WeightMatrix(Matrix::zeros(1, 3)),
            norm_params: None,
            feature_scaling: FeatureScaling::nominal(2),
        };
        assert!(matches!(
            predict(&bundle, &[1.0, 0.5]),
            Err(ModelError::Shape { .. })
        ));
    }

    #[test]
    fn mse_basics() {
        let a = mat(&[&[1.0], &[0.0]]);
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
        let b = mat(&[&[0.0], &[0.0]]);
        assert_eq!(mse(&a, &b).unwrap(), 0.5);
        assert!(matches!(
            mse(&a, &mat(&[&[1.0, 2.0]])),
            Err(ModelError::Shape { .. })
        ));
    }

    #[test]
    fn trace_csv_header_is_pinned() {
        let trace = TrainTrace {
            records: vec![TraceRecord {
                iter: 1,
                mse_original: 0.5,
                mse_transformed: 0.25,
                grad_maxnorm: 2.0,
            }],
        };
        let csv = trace.to_csv_string();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "iter,mse_original,mse_transformed,grad_maxnorm"
        );
        assert_eq!(lines.next().unwrap(), "1,0.5,0.25,2.0");
    }

    #[test]
    fn bundle_json_shape() {
        let (ds, _) = synth(10, 2, 1, 0.0, 3);
        let (bundle, _) = train(&ds, ModelKind::ImprovedLffr, &TrainConfig::new(5)).unwrap();
        let json = serde_json::to_value(&bundle).unwrap();
        assert_eq!(json["kind"], "improved_lffr");
        assert!(json["weights"].is_array());
        assert!(json["norm_params"].is_object());
        assert!(json["feature_scaling"].is_object());
        let back: ModelBundle = serde_json::from_value(json).unwrap();
        assert_eq!(back, bundle);

        let (plain, _) = train(&ds, ModelKind::Linear, &TrainConfig::new(5)).unwrap();
        let json = serde_json::to_value(&plain).unwrap();
        assert_eq!(json["kind"], "linear");
        assert!(json.get("norm_params").is_none());
    }

    #[test]
    fn bundle_validation_requires_norm() {
        let bundle = ModelBundle {
            kind: ModelKind::Lffr,
            weights: WeightMatrix(Matrix::zeros(1, 2)),
            norm_params: None,
            feature_scaling: FeatureScaling::nominal(1),
        };
        assert!(matches!(
            bundle.validate(),
            Err(ModelError::MissingNorm(ModelKind::Lffr))
        ));
    }
}
