//! The encrypted training driver: the same fixed-Hessian loop, executed
//! entirely through the simulator's operation set. Target transforms and
//! the inverted diagonal are prepared in cleartext before encryption
//! (they are the client's job); the cloud side touches ciphertexts only.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activation::{POLY_C1, POLY_C3};
use crate::data::Dataset;
use crate::matrix::Matrix;
use crate::models::{
    self, mse, ModelBundle, ModelError, ModelKind, SigmoidImpl, TraceRecord, TrainConfig,
    TrainTrace, WeightMatrix,
};
use crate::sfh::{build_sfh_lffr, build_sfh_linear};

use super::cipher::{CipherVector, SimContext, SimError, SimOp, SimParams};
use super::encode::{encode_dataset, plan_layout, Layout};

#[derive(Debug, Error)]
pub enum HesimError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Training circuits the simulator offers. Plain and y-normalized linear
/// regression share one circuit; improved LFFR reuses it on transformed
/// targets; LFFR proper needs the polynomial link (the exact sigmoid has
/// no slotwise circuit).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncKind {
    Linear,
    ImprovedLffr,
    LffrPoly,
}

impl EncKind {
    pub fn model_kind(self) -> ModelKind {
        match self {
            EncKind::Linear => ModelKind::Linear,
            EncKind::ImprovedLffr => ModelKind::ImprovedLffr,
            EncKind::LffrPoly => ModelKind::Lffr,
        }
    }

    pub fn sigmoid_impl(self) -> SigmoidImpl {
        match self {
            EncKind::LffrPoly => SigmoidImpl::Poly,
            _ => SigmoidImpl::Exact,
        }
    }

    fn is_poly(self) -> bool {
        matches!(self, EncKind::LffrPoly)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub levels_per_iteration: Vec<u32>,
    pub bootstrap_count: u64,
    pub total_mults: u64,
    pub total_rotations: u64,
}

/// Replays the refresh policy for one weight ciphertext: bootstrap
/// whenever the next iteration no longer fits in the remaining levels.
pub fn replay_bootstraps(initial_levels: u32, per_iteration: u32, iterations: usize) -> u64 {
    let mut level = initial_levels;
    let mut count = 0;
    for _ in 0..iterations {
        if level < per_iteration {
            count += 1;
            level = initial_levels;
        }
        level -= per_iteration;
    }
    count
}

/// Levels one iteration drains from the weight ciphertext: score product,
/// sum_columns cleanup mask (only when rows are narrower than the
/// ciphertext), residual-times-feature product, the explicit factor of
/// two, and the diagonal product; the polynomial link adds two more for
/// its square and its coefficient products, plus the sigma(1-sigma) and
/// residual products.
fn levels_per_iteration(kind: EncKind, masked: bool) -> u32 {
    let base = if kind.is_poly() { 8 } else { 4 };
    base + masked as u32
}

/// 0.5 + C1 z - C3 z^3 on every slot. The coefficient rides on the first
/// factor (C3 z times z^2), so the whole link sits two levels below z.
fn poly_link(
    ctx: &mut SimContext,
    z: &CipherVector,
    half: &CipherVector,
) -> Result<CipherVector, SimError> {
    let z2 = ctx.mult(z, z)?;
    let za = ctx.cmult_scalar(z, POLY_C1)?;
    let zb = ctx.cmult_scalar(z, POLY_C3)?;
    let cube = ctx.mult(&zb, &z2)?;
    let s0 = ctx.sub(&za, &cube)?;
    ctx.add(&s0, half)
}

/// Sums the same column position across all row-blocks of one ciphertext:
/// rotate-and-add with strides row_width, 2 row_width, ... Free, since
/// rotations and additions consume no levels.
fn sum_rows(
    ctx: &mut SimContext,
    ct: &CipherVector,
    row_width: usize,
) -> Result<CipherVector, SimError> {
    let mut acc = ct.clone();
    let mut shift = row_width;
    while shift < acc.slots().len() {
        let rotated = ctx.rotate(&acc, shift as i64);
        acc = ctx.add(&acc, &rotated)?;
        shift *= 2;
    }
    Ok(acc)
}

fn decrypt_weights(ctx: &SimContext, beta: &[CipherVector], layout: &Layout) -> Matrix {
    let p = 1 + layout.d;
    let mut w = Matrix::zeros(layout.c, p);
    for (j, ct) in beta.iter().enumerate() {
        let slots = ctx.decrypt(ct);
        for k in 0..p {
            w.set(j, k, slots[k]);
        }
    }
    w
}

/// One encrypted training run with its full operation log, for callers
/// auditing what the simulated cloud actually did.
pub struct EncryptedRun {
    pub bundle: ModelBundle,
    pub trace: TrainTrace,
    pub report: LevelReport,
    pub ops: Vec<SimOp>,
}

pub fn encrypted_train(
    dataset: &Dataset,
    kind: EncKind,
    cfg: &TrainConfig,
    params: &SimParams,
) -> Result<(ModelBundle, TrainTrace, LevelReport), HesimError> {
    encrypted_train_seeded(dataset, kind, cfg, params, 0)
}

/// As `encrypted_train`, with the seed for the optional slot noise pinned.
pub fn encrypted_train_seeded(
    dataset: &Dataset,
    kind: EncKind,
    cfg: &TrainConfig,
    params: &SimParams,
    noise_seed: u64,
) -> Result<(ModelBundle, TrainTrace, LevelReport), HesimError> {
    let run = encrypted_train_logged(dataset, kind, cfg, params, noise_seed)?;
    Ok((run.bundle, run.trace, run.report))
}

pub fn encrypted_train_logged(
    dataset: &Dataset,
    kind: EncKind,
    cfg: &TrainConfig,
    params: &SimParams,
    noise_seed: u64,
) -> Result<EncryptedRun, HesimError> {
    cfg.validate()?;
    let model_kind = kind.model_kind();
    let (targets, norm_params) = models::prepare_targets(dataset, model_kind, cfg)?;
    let diag = match kind {
        EncKind::LffrPoly => build_sfh_lffr(&dataset.x, cfg.epsilon),
        _ => build_sfh_linear(&dataset.x, cfg.epsilon),
    };

    let mut ctx = SimContext::with_noise_seed(*params, noise_seed)?;
    let layout = plan_layout(dataset.n(), dataset.d(), dataset.c(), params)?;
    let masked = layout.row_width < params.slot_count;
    let k_iter = levels_per_iteration(kind, masked);
    if k_iter > params.initial_levels {
        return Err(SimError::Params {
            reason: format!(
                "one iteration needs {k_iter} levels but the budget is {}",
                params.initial_levels
            ),
        }
        .into());
    }

    let w0 = Matrix::zeros(dataset.c(), 1 + dataset.d());
    let enc = encode_dataset(
        &mut ctx,
        &dataset.x,
        &targets,
        diag.inverse_entries(),
        &w0,
        layout,
    )?;
    let (ct_half, ct_one) = if kind.is_poly() {
        (
            Some(ctx.encrypt_broadcast(0.5)?),
            Some(ctx.encrypt_broadcast(1.0)?),
        )
    } else {
        (None, None)
    };

    let mut beta = enc.ct_beta;
    let mut trace = TrainTrace::default();
    let mut levels_log = Vec::with_capacity(cfg.iterations);

    for iter in 1..=cfg.iterations {
        let mut grad_maxnorm = 0.0f64;
        for j in 0..layout.c {
            if params.bootstrap_enabled && beta[j].level() < k_iter {
                beta[j] = ctx.bootstrap(&beta[j])?;
            }
            let level_before = beta[j].level();

            let mut g_total: Option<CipherVector> = None;
            for b in 0..enc.ct_x.len() {
                let scores = ctx.mult(&enc.ct_x[b], &beta[j])?;
                let z = ctx.sum_columns(&scores, layout.row_width)?;
                let f = if kind.is_poly() {
                    let s = poly_link(&mut ctx, &z, ct_half.as_ref().expect("hoisted"))?;
                    let r = ctx.sub(&s, &enc.ct_y[j][b])?;
                    let om = ctx.sub(ct_one.as_ref().expect("hoisted"), &s)?;
                    let sp = ctx.mult(&s, &om)?;
                    ctx.mult(&r, &sp)?
                } else {
                    ctx.sub(&z, &enc.ct_y[j][b])?
                };
                let p = ctx.mult(&f, &enc.ct_x[b])?;
                let block_sum = sum_rows(&mut ctx, &p, layout.row_width)?;
                g_total = Some(match g_total {
                    None => block_sum,
                    Some(acc) => ctx.add(&acc, &block_sum)?,
                });
            }
            let g2 = ctx.cmult_scalar(&g_total.expect("at least one block"), 2.0)?;

            let g_slots = ctx.decrypt(&g2);
            for &v in &g_slots[..=layout.d] {
                grad_maxnorm = grad_maxnorm.max(v.abs());
            }

            let update = ctx.mult(&g2, &enc.ct_bbar)?;
            beta[j] = ctx.sub(&beta[j], &update)?;

            if j == 0 {
                let consumed = level_before - beta[0].level();
                debug_assert_eq!(consumed, k_iter);
                levels_log.push(consumed);
            }
        }

        let w = decrypt_weights(&ctx, &beta, &layout);
        let fitted =
            models::forward_original(model_kind, &dataset.x, &w, norm_params.as_ref(), kind.sigmoid_impl())?;
        trace.records.push(TraceRecord {
            iter,
            mse_original: mse(&fitted, &dataset.y)?,
            mse_transformed: models::transformed_mse(
                model_kind,
                &dataset.x,
                &targets,
                &w,
                kind.sigmoid_impl(),
            )?,
            grad_maxnorm,
        });
    }

    let bundle = ModelBundle {
        kind: model_kind,
        weights: WeightMatrix(decrypt_weights(&ctx, &beta, &layout)),
        norm_params,
        feature_scaling: dataset.scaling.clone(),
    };
    let report = LevelReport {
        levels_per_iteration: levels_log,
        bootstrap_count: ctx.bootstrap_count(),
        total_mults: ctx.total_mults(),
        total_rotations: ctx.total_rotations(),
    };
    Ok(EncryptedRun {
        bundle,
        trace,
        report,
        ops: ctx.into_log(),
    })
}
