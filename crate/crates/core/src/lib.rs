//! Fixed-Hessian training suite for multi-output regression.
//!
//! Four trainers share one update rule: a diagonal matrix that dominates
//! the loss Hessian is built once from the data, and every iteration steps
//! by the gradient scaled with the stored reciprocals. `hesim` re-runs the
//! same loop under homomorphic-encryption constraints (slotted SIMD
//! arithmetic, level budget, bootstrap counting) and is checked against
//! the cleartext trainer.

pub mod activation;
pub mod data;
pub mod hesim;
pub mod matrix;
pub mod models;
pub mod sfh;
