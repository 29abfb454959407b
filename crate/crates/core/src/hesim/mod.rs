//! A slotted-ciphertext training simulator. Slots hold plaintext reals;
//! what is enforced is the operation set (SIMD add, multiply, rotate),
//! the level cost of every multiplication, and the bootstrap policy, so
//! the encrypted trainer's arithmetic and its cost profile can both be
//! checked against the cleartext loop.

mod cipher;
mod encode;
mod train;

pub use cipher::{
    CipherVector, SimContext, SimError, SimOp, SimParams, DEFAULT_INITIAL_LEVELS,
    DEFAULT_SCALE_EXP_UNIT, DEFAULT_SLOT_COUNT,
};
pub use encode::{
    encode_dataset, pad_rows, plan_layout, replicate_row, replicate_target_column, EncodedDataset,
    Layout,
};
pub use train::{
    encrypted_train, encrypted_train_logged, encrypted_train_seeded, replay_bootstraps, EncKind,
    EncryptedRun, HesimError, LevelReport,
};
