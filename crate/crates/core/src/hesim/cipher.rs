//! Slotted-ciphertext simulator: fixed-width vectors of reals with
//! CKKS-style level and scale bookkeeping. Slots hold plaintext, nothing
//! here is cryptography. The point is to force training code through the
//! SIMD operation set and to meter what that would cost: every
//! multiplication rescales and burns one level, rotations and additions
//! are free, bootstrapping resets the budget and is counted.

use std::fmt;

use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::Matrix;

pub const DEFAULT_SLOT_COUNT: usize = 32768;
/// logQ / logp = 1200 / 30.
pub const DEFAULT_INITIAL_LEVELS: u32 = 40;
pub const DEFAULT_SCALE_EXP_UNIT: i32 = 30;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulator parameters: {reason}")]
    Params { reason: String },
    #[error("scale mismatch in {op}: {left} vs {right}")]
    ScaleMismatch {
        op: &'static str,
        left: i32,
        right: i32,
    },
    #[error("level exhausted in {op}: operand at level {level}")]
    LevelExhausted { op: &'static str, level: u32 },
    #[error("slot count mismatch in {op}: {left} vs {right}")]
    SlotMismatch {
        op: &'static str,
        left: usize,
        right: usize,
    },
    #[error("non-finite slot produced by {op}")]
    NonFinite { op: &'static str },
    #[error("bootstrapping is disabled")]
    BootstrapDisabled,
    #[error("layout violation: {reason}")]
    Layout { reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimParams {
    pub slot_count: usize,
    pub initial_levels: u32,
    pub scale_exp_unit: i32,
    pub bootstrap_enabled: bool,
    pub noise_std: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            slot_count: DEFAULT_SLOT_COUNT,
            initial_levels: DEFAULT_INITIAL_LEVELS,
            scale_exp_unit: DEFAULT_SCALE_EXP_UNIT,
            bootstrap_enabled: true,
            noise_std: 0.0,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<(), SimError> {
        if !self.slot_count.is_power_of_two() {
            return Err(SimError::Params {
                reason: format!("slot count {} is not a power of two", self.slot_count),
            });
        }
        if self.initial_levels < 1 {
            return Err(SimError::Params {
                reason: "level budget must be at least 1".into(),
            });
        }
        if self.scale_exp_unit < 1 {
            return Err(SimError::Params {
                reason: format!("scale unit {} must be positive", self.scale_exp_unit),
            });
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(SimError::Params {
                reason: format!("noise std {} must be finite and nonnegative", self.noise_std),
            });
        }
        Ok(())
    }
}

/// One ciphertext: a fixed-length slot vector plus its remaining level and
/// log2-scale. Values are immutable once created; every operation mints a
/// fresh one with a new id.
#[derive(Clone, PartialEq)]
pub struct CipherVector {
    slots: Vec<f64>,
    level: u32,
    scale_exp: i32,
    id: u64,
}

impl CipherVector {
    pub fn slots(&self) -> &[f64] {
        &self.slots
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn scale_exp(&self) -> i32 {
        self.scale_exp
    }

    pub fn id(&self) -> u64 {
        self.id
    }
}

impl fmt::Debug for CipherVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "CipherVector {{ id: {}, level: {}, scale_exp: {}, slots: {} x f64 }}",
            self.id,
            self.level,
            self.scale_exp,
            self.slots.len()
        )
    }
}

/// Everything the simulated cloud does, in order. Decryption is the
/// client's act and deliberately absent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimOp {
    Encrypt { result: u64 },
    Add { lhs: u64, rhs: u64, result: u64 },
    Sub { lhs: u64, rhs: u64, result: u64 },
    Mult { lhs: u64, rhs: u64, result: u64 },
    Cmult { ct: u64, result: u64 },
    Rotate { ct: u64, by: i64, result: u64 },
    Bootstrap { ct: u64, result: u64 },
}

impl SimOp {
    pub fn kind(&self) -> &'static str {
        match self {
            SimOp::Encrypt { .. } => "encrypt",
            SimOp::Add { .. } => "add",
            SimOp::Sub { .. } => "sub",
            SimOp::Mult { .. } => "mult",
            SimOp::Cmult { .. } => "cmult",
            SimOp::Rotate { .. } => "rotate",
            SimOp::Bootstrap { .. } => "bootstrap",
        }
    }
}

pub struct SimContext {
    params: SimParams,
    next_id: u64,
    log: Vec<SimOp>,
    bootstrap_count: u64,
    rng: Xoshiro256PlusPlus,
}

impl SimContext {
    pub fn new(params: SimParams) -> Result<Self, SimError> {
        Self::with_noise_seed(params, 0)
    }

    /// The seed matters only when `noise_std > 0`.
    pub fn with_noise_seed(params: SimParams, seed: u64) -> Result<Self, SimError> {
        params.validate()?;
        Ok(SimContext {
            params,
            next_id: 0,
            log: Vec::new(),
            bootstrap_count: 0,
            rng: Xoshiro256PlusPlus::seed_from_u64(seed),
        })
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    pub fn log(&self) -> &[SimOp] {
        &self.log
    }

    pub fn into_log(self) -> Vec<SimOp> {
        self.log
    }

    pub fn bootstrap_count(&self) -> u64 {
        self.bootstrap_count
    }

    /// Level-consuming multiplications: ct x ct products and constant
    /// products alike.
    pub fn total_mults(&self) -> u64 {
        self.log
            .iter()
            .filter(|op| matches!(op, SimOp::Mult { .. } | SimOp::Cmult { .. }))
            .count() as u64
    }

    pub fn total_rotations(&self) -> u64 {
        self.log
            .iter()
            .filter(|op| matches!(op, SimOp::Rotate { .. }))
            .count() as u64
    }

    fn mint(&mut self, slots: Vec<f64>, level: u32, scale_exp: i32) -> CipherVector {
        let id = self.next_id;
        self.next_id += 1;
        CipherVector {
            slots,
            level,
            scale_exp,
            id,
        }
    }

    fn perturb(&mut self, slots: &mut [f64]) {
        if self.params.noise_std > 0.0 {
            let normal = Normal::new(0.0, self.params.noise_std).expect("validated std");
            for s in slots.iter_mut() {
                *s += normal.sample(&mut self.rng);
            }
        }
    }

    fn encrypt_slots(&mut self, mut slots: Vec<f64>) -> Result<CipherVector, SimError> {
        if slots.len() != self.params.slot_count {
            return Err(SimError::SlotMismatch {
                op: "encrypt",
                left: slots.len(),
                right: self.params.slot_count,
            });
        }
        if slots.iter().any(|v| !v.is_finite()) {
            return Err(SimError::NonFinite { op: "encrypt" });
        }
        self.perturb(&mut slots);
        let ct = self.mint(slots, self.params.initial_levels, self.params.scale_exp_unit);
        self.log.push(SimOp::Encrypt { result: ct.id });
        Ok(ct)
    }

    /// Packs a matrix row-major into as many ciphertexts as it needs,
    /// zero-padding the tail of the last one.
    pub fn encrypt(&mut self, m: &Matrix) -> Result<Vec<CipherVector>, SimError> {
        let total = m.rows() * m.cols();
        let count = total.div_ceil(self.params.slot_count).max(1);
        let mut out = Vec::with_capacity(count);
        for block in 0..count {
            let mut slots = vec![0.0; self.params.slot_count];
            let start = block * self.params.slot_count;
            let take = self.params.slot_count.min(total - start);
            slots[..take].copy_from_slice(&m.data()[start..start + take]);
            out.push(self.encrypt_slots(slots)?);
        }
        Ok(out)
    }

    /// One ciphertext with the same constant in every slot.
    pub fn encrypt_broadcast(&mut self, value: f64) -> Result<CipherVector, SimError> {
        self.encrypt_slots(vec![value; self.params.slot_count])
    }

    /// Encrypts at a caller-chosen scale. Hook for composing circuits
    /// whose operands are not at the unit scale; regular encryption always
    /// uses the unit.
    pub fn encrypt_at(&mut self, slots: Vec<f64>, scale_exp: i32) -> Result<CipherVector, SimError> {
        let mut ct = self.encrypt_slots(slots)?;
        ct.scale_exp = scale_exp;
        Ok(ct)
    }

    /// Client-side read of the slots. Not a cloud operation, not logged.
    pub fn decrypt(&self, ct: &CipherVector) -> Vec<f64> {
        ct.slots.clone()
    }

    fn check_pair(
        op: &'static str,
        a: &CipherVector,
        b: &CipherVector,
    ) -> Result<(), SimError> {
        if a.slots.len() != b.slots.len() {
            return Err(SimError::SlotMismatch {
                op,
                left: a.slots.len(),
                right: b.slots.len(),
            });
        }
        Ok(())
    }

    fn elementwise(
        &mut self,
        op: &'static str,
        a: &CipherVector,
        b: &CipherVector,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<CipherVector, SimError> {
        Self::check_pair(op, a, b)?;
        if a.scale_exp != b.scale_exp {
            return Err(SimError::ScaleMismatch {
                op,
                left: a.scale_exp,
                right: b.scale_exp,
            });
        }
        let slots: Vec<f64> = a
            .slots
            .iter()
            .zip(&b.slots)
            .map(|(&x, &y)| f(x, y))
            .collect();
        if slots.iter().any(|v| !v.is_finite()) {
            return Err(SimError::NonFinite { op });
        }
        Ok(self.mint(slots, a.level.min(b.level), a.scale_exp))
    }

    pub fn add(&mut self, a: &CipherVector, b: &CipherVector) -> Result<CipherVector, SimError> {
        let ct = self.elementwise("add", a, b, |x, y| x + y)?;
        self.log.push(SimOp::Add {
            lhs: a.id,
            rhs: b.id,
            result: ct.id,
        });
        Ok(ct)
    }

    pub fn sub(&mut self, a: &CipherVector, b: &CipherVector) -> Result<CipherVector, SimError> {
        let ct = self.elementwise("sub", a, b, |x, y| x - y)?;
        self.log.push(SimOp::Sub {
            lhs: a.id,
            rhs: b.id,
            result: ct.id,
        });
        Ok(ct)
    }

    /// Slotwise product. The raw product would sit at the sum of the two
    /// scales; the fused rescale divides one unit back out and costs the
    /// level.
    pub fn mult(&mut self, a: &CipherVector, b: &CipherVector) -> Result<CipherVector, SimError> {
        Self::check_pair("mult", a, b)?;
        let level = a.level.min(b.level);
        if level < 1 {
            return Err(SimError::LevelExhausted { op: "mult", level });
        }
        let slots: Vec<f64> = a
            .slots
            .iter()
            .zip(&b.slots)
            .map(|(&x, &y)| x * y)
            .collect();
        if slots.iter().any(|v| !v.is_finite()) {
            return Err(SimError::NonFinite { op: "mult" });
        }
        let scale_exp = a.scale_exp + b.scale_exp - self.params.scale_exp_unit;
        let ct = self.mint(slots, level - 1, scale_exp);
        self.log.push(SimOp::Mult {
            lhs: a.id,
            rhs: b.id,
            result: ct.id,
        });
        Ok(ct)
    }

    /// Product with a plaintext vector held at the unit scale. Consumes a
    /// level exactly like `mult`.
    pub fn cmult(&mut self, a: &CipherVector, constants: &[f64]) -> Result<CipherVector, SimError> {
        if constants.len() != a.slots.len() {
            return Err(SimError::SlotMismatch {
                op: "cmult",
                left: constants.len(),
                right: a.slots.len(),
            });
        }
        if a.level < 1 {
            return Err(SimError::LevelExhausted {
                op: "cmult",
                level: a.level,
            });
        }
        let slots: Vec<f64> = a
            .slots
            .iter()
            .zip(constants)
            .map(|(&x, &c)| x * c)
            .collect();
        if slots.iter().any(|v| !v.is_finite()) {
            return Err(SimError::NonFinite { op: "cmult" });
        }
        let ct = self.mint(slots, a.level - 1, a.scale_exp);
        self.log.push(SimOp::Cmult {
            ct: a.id,
            result: ct.id,
        });
        Ok(ct)
    }

    pub fn cmult_scalar(&mut self, a: &CipherVector, c: f64) -> Result<CipherVector, SimError> {
        let constants = vec![c; a.slots.len()];
        self.cmult(a, &constants)
    }

    /// Cyclic left shift by `by` slots; negative values shift right.
    /// Free: levels and scale untouched.
    pub fn rotate(&mut self, a: &CipherVector, by: i64) -> CipherVector {
        let n = a.slots.len();
        let k = by.rem_euclid(n as i64) as usize;
        let mut slots = Vec::with_capacity(n);
        slots.extend_from_slice(&a.slots[k..]);
        slots.extend_from_slice(&a.slots[..k]);
        let ct = self.mint(slots, a.level, a.scale_exp);
        self.log.push(SimOp::Rotate {
            ct: a.id,
            by,
            result: ct.id,
        });
        ct
    }

    /// Leaves every slot of each width-`row_width` block holding that
    /// block's sum: log2(row_width) rotate-and-add steps, then, when the
    /// block is narrower than the ciphertext, a mask (one level) to drop
    /// the cross-block garbage and a mirrored rotate-and-add to broadcast
    /// the clean block sums back out.
    pub fn sum_columns(
        &mut self,
        a: &CipherVector,
        row_width: usize,
    ) -> Result<CipherVector, SimError> {
        let n = a.slots.len();
        if !row_width.is_power_of_two() || row_width > n {
            return Err(SimError::Layout {
                reason: format!(
                    "row width {row_width} must be a power of two dividing the slot count {n}"
                ),
            });
        }
        if row_width == 1 {
            return Ok(a.clone());
        }
        let mut acc = a.clone();
        let mut shift = 1usize;
        while shift < row_width {
            let rotated = self.rotate(&acc, shift as i64);
            acc = self.add(&acc, &rotated)?;
            shift *= 2;
        }
        if row_width < n {
            let mut mask = vec![0.0; n];
            for slot in mask.iter_mut().step_by(row_width) {
                *slot = 1.0;
            }
            acc = self.cmult(&acc, &mask)?;
            let mut shift = 1usize;
            while shift < row_width {
                let rotated = self.rotate(&acc, -(shift as i64));
                acc = self.add(&acc, &rotated)?;
                shift *= 2;
            }
        }
        Ok(acc)
    }

    /// Resets the level budget on the same slots and counts the refresh.
    pub fn bootstrap(&mut self, a: &CipherVector) -> Result<CipherVector, SimError> {
        if !self.params.bootstrap_enabled {
            return Err(SimError::BootstrapDisabled);
        }
        let mut slots = a.slots.clone();
        self.perturb(&mut slots);
        let ct = self.mint(slots, self.params.initial_levels, a.scale_exp);
        self.bootstrap_count += 1;
        self.log.push(SimOp::Bootstrap {
            ct: a.id,
            result: ct.id,
        });
        Ok(ct)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(slot_count: usize, initial_levels: u32) -> SimContext {
        SimContext::new(SimParams {
            slot_count,
            initial_levels,
            ..SimParams::default()
        })
        .unwrap()
    }

    fn enc(ctx: &mut SimContext, slots: &[f64]) -> CipherVector {
        let mut padded = slots.to_vec();
        padded.resize(ctx.params().slot_count, 0.0);
        let m = Matrix::from_vec(1, padded.len(), padded).unwrap();
        ctx.encrypt(&m).unwrap().pop().unwrap()
    }

    #[test]
    fn rejects_bad_params() {
        assert!(SimParams {
            slot_count: 24,
            ..SimParams::default()
        }
        .validate()
        .is_err());
        assert!(SimParams {
            initial_levels: 0,
            ..SimParams::default()
        }
        .validate()
        .is_err());
        assert!(SimParams {
            noise_std: -1.0,
            ..SimParams::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn packing_pads_with_zeros() {
        let mut c = ctx(8, 4);
        let m = Matrix::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let cts = c.encrypt(&m).unwrap();
        assert_eq!(cts.len(), 1);
        assert_eq!(cts[0].slots(), &[1.0, 2.0, 3.0, 4.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(cts[0].level(), 4);
        assert_eq!(cts[0].scale_exp(), DEFAULT_SCALE_EXP_UNIT);
    }

    #[test]
    fn packing_spills_into_ceil_blocks() {
        let mut c = ctx(4, 4);
        let m = Matrix::from_vec(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let cts = c.encrypt(&m).unwrap();
        assert_eq!(cts.len(), 2);
        assert_eq!(cts[0].slots(), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(cts[1].slots(), &[5.0, 6.0, 0.0, 0.0]);
    }

    #[test]
    fn noiseless_roundtrip_is_bitwise() {
        let mut c = ctx(8, 4);
        let ct = enc(&mut c, &[0.1, -0.25, 3.5]);
        assert_eq!(c.decrypt(&ct), vec![0.1, -0.25, 3.5, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn noise_perturbs_each_slot() {
        let params = SimParams {
            slot_count: 8,
            noise_std: 1e-3,
            ..SimParams::default()
        };
        let mut c = SimContext::with_noise_seed(params, 42).unwrap();
        let ct = enc(&mut c, &[1.0; 8]);
        for &s in ct.slots() {
            assert_ne!(s, 1.0);
            assert!((s - 1.0).abs() < 1e-2);
        }
    }

    #[test]
    fn add_and_sub_follow_min_level() {
        let mut c = ctx(4, 5);
        let a = enc(&mut c, &[1.0, 2.0, 3.0, 4.0]);
        let zero = enc(&mut c, &[0.0; 4]);
        let sum = c.add(&a, &zero).unwrap();
        assert_eq!(sum.slots(), a.slots());

        let ones = enc(&mut c, &[1.0; 4]);
        let dropped = c.mult(&a, &ones).unwrap();
        let dropped = c.mult(&dropped, &ones).unwrap();
        assert_eq!(dropped.level(), 3);
        let mixed = c.add(&a, &dropped).unwrap();
        assert_eq!(mixed.level(), 3);

        let diff = c.sub(&a, &a).unwrap();
        assert_eq!(diff.slots(), &[0.0; 4]);
    }

    #[test]
    fn add_rejects_scale_mismatch() {
        let mut c = ctx(4, 5);
        let a = enc(&mut c, &[1.0; 4]);
        let b = c.encrypt_at(vec![1.0; 4], 60).unwrap();
        match c.add(&a, &b) {
            Err(SimError::ScaleMismatch { op: "add", left: 30, right: 60 }) => {}
            other => panic!("expected scale mismatch, got {other:?}"),
        }
    }

    #[test]
    fn mult_rescales_and_decrements() {
        let mut c = ctx(2, 3);
        let a = enc(&mut c, &[1.0, 2.0]);
        let b = enc(&mut c, &[3.0, 4.0]);
        let p = c.mult(&a, &b).unwrap();
        assert_eq!(p.slots(), &[3.0, 8.0]);
        assert_eq!(p.level(), 2);
        assert_eq!(p.scale_exp(), DEFAULT_SCALE_EXP_UNIT);
    }

    #[test]
    fn mult_by_ones_only_costs_the_level() {
        let mut c = ctx(4, 7);
        let a = enc(&mut c, &[0.5, -1.5, 2.0, 0.0]);
        let ones = enc(&mut c, &[1.0; 4]);
        let p = c.mult(&a, &ones).unwrap();
        assert_eq!(p.slots(), a.slots());
        assert_eq!(p.level(), 6);
    }

    #[test]
    fn mult_chain_exhausts_exactly_at_the_budget() {
        let mut c = ctx(2, 3);
        let mut acc = enc(&mut c, &[1.0, 1.0]);
        let ones = enc(&mut c, &[1.0; 2]);
        for expected in [2, 1, 0] {
            acc = c.mult(&acc, &ones).unwrap();
            assert_eq!(acc.level(), expected);
        }
        match c.mult(&acc, &ones) {
            Err(SimError::LevelExhausted { op: "mult", level: 0 }) => {}
            other => panic!("expected exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn cmult_consumes_one_level() {
        let mut c = ctx(4, 2);
        let a = enc(&mut c, &[1.0, 2.0, 3.0, 4.0]);
        let p = c.cmult(&a, &[2.0, 0.0, 1.0, -1.0]).unwrap();
        assert_eq!(p.slots(), &[2.0, 0.0, 3.0, -4.0]);
        assert_eq!(p.level(), 1);
        let q = c.cmult_scalar(&p, 10.0).unwrap();
        assert_eq!(q.level(), 0);
        assert!(matches!(
            c.cmult_scalar(&q, 1.0),
            Err(SimError::LevelExhausted { op: "cmult", level: 0 })
        ));
    }

    #[test]
    fn rotate_is_cyclic_left_and_free() {
        let mut c = ctx(4, 3);
        let a = enc(&mut c, &[1.0, 2.0, 3.0, 4.0]);
        let r = c.rotate(&a, 1);
        assert_eq!(r.slots(), &[2.0, 3.0, 4.0, 1.0]);
        assert_eq!(r.level(), a.level());

        let full = c.rotate(&a, 4);
        assert_eq!(full.slots(), a.slots());

        let negative = c.rotate(&a, -1);
        assert_eq!(negative.slots(), &[4.0, 1.0, 2.0, 3.0]);

        let first = c.rotate(&a, 3);
        let composed = c.rotate(&first, 2);
        let direct = c.rotate(&a, 5);
        assert_eq!(composed.slots(), direct.slots());
    }

    #[test]
    fn sum_columns_full_width_needs_no_mask() {
        let mut c = ctx(4, 3);
        let a = enc(&mut c, &[1.0, 2.0, 3.0, 4.0]);
        let rotations_before = c.total_rotations();
        let s = c.sum_columns(&a, 4).unwrap();
        assert_eq!(s.slots(), &[10.0; 4]);
        assert_eq!(s.level(), a.level(), "no mask, no level spent");
        assert_eq!(c.total_rotations() - rotations_before, 2);
    }

    #[test]
    fn sum_columns_masks_narrow_blocks() {
        let mut c = ctx(4, 3);
        let a = enc(&mut c, &[1.0, 2.0, 3.0, 4.0]);
        let s = c.sum_columns(&a, 2).unwrap();
        assert_eq!(s.slots(), &[3.0, 3.0, 7.0, 7.0]);
        assert_eq!(s.level(), a.level() - 1, "cleanup mask costs one level");
    }

    #[test]
    fn sum_columns_width_one_is_identity() {
        let mut c = ctx(4, 3);
        let a = enc(&mut c, &[1.0, 2.0, 3.0, 4.0]);
        let ops_before = c.log().len();
        let s = c.sum_columns(&a, 1).unwrap();
        assert_eq!(s.slots(), a.slots());
        assert_eq!(c.log().len(), ops_before);
    }

    #[test]
    fn sum_columns_rejects_bad_width() {
        let mut c = ctx(8, 3);
        let a = enc(&mut c, &[1.0; 8]);
        assert!(matches!(c.sum_columns(&a, 3), Err(SimError::Layout { .. })));
        assert!(matches!(c.sum_columns(&a, 16), Err(SimError::Layout { .. })));
    }

    #[test]
    fn bootstrap_resets_level_and_counts() {
        let mut c = ctx(2, 2);
        let a = enc(&mut c, &[0.25, -0.5]);
        let ones = enc(&mut c, &[1.0; 2]);
        let half_worn = c.mult(&a, &ones).unwrap();
        let worn = c.mult(&half_worn, &ones).unwrap();
        assert_eq!(worn.level(), 0);
        let fresh = c.bootstrap(&worn).unwrap();
        assert_eq!(fresh.level(), 2);
        assert_eq!(fresh.slots(), worn.slots());
        assert_eq!(c.bootstrap_count(), 1);
        let again = c.bootstrap(&fresh).unwrap();
        assert_eq!(again.slots(), worn.slots());
        assert_eq!(c.bootstrap_count(), 2);
    }

    #[test]
    fn bootstrap_can_be_disabled() {
        let params = SimParams {
            slot_count: 2,
            initial_levels: 1,
            bootstrap_enabled: false,
            ..SimParams::default()
        };
        let mut c = SimContext::new(params).unwrap();
        let a = enc(&mut c, &[1.0, 1.0]);
        assert!(matches!(c.bootstrap(&a), Err(SimError::BootstrapDisabled)));
    }

    #[test]
    fn log_records_cloud_ops_but_not_decryption() {
        let mut c = ctx(2, 3);
        let a = enc(&mut c, &[1.0, 2.0]);
        let b = enc(&mut c, &[3.0, 4.0]);
        let p = c.mult(&a, &b).unwrap();
        let _ = c.decrypt(&p);
        let kinds: Vec<&str> = c.log().iter().map(SimOp::kind).collect();
        assert_eq!(kinds, vec!["encrypt", "encrypt", "mult"]);
        match c.log()[2] {
            SimOp::Mult { lhs, rhs, result } => {
                assert_eq!((lhs, rhs, result), (a.id(), b.id(), p.id()));
            }
            ref other => panic!("unexpected op {other:?}"),
        }
    }

    #[test]
    fn non_finite_products_are_rejected() {
        let mut c = ctx(2, 9);
        let a = enc(&mut c, &[f64::MAX, 1.0]);
        let big = enc(&mut c, &[2.0, 1.0]);
        assert!(matches!(
            c.mult(&a, &big),
            Err(SimError::NonFinite { op: "mult" })
        ));
    }
}
