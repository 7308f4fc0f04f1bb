//! Max-plus (tropical) matrix factorization and compression.
//!
//! Over the max-plus semiring (R ∪ {-∞}, max, +) this crate solves two
//! factorization problems by gradient descent on the piecewise-linear
//! Frobenius objective:
//!
//! - **TMF** — approximate an n×p matrix Y as a tropical product `A ⊞ B`
//!   of an n×r and an r×p factor, optionally restricted to an observed
//!   subset of cells. Besides plain descent, two noise-perturbed update
//!   rules (multiplicative ε-weights and additive bounded noise) keep
//!   otherwise-frozen entries moving and avoid many poor local minima.
//! - **TC** — approximate Y as `A ⊞ (B X)`, an ordinary low-rank product
//!   followed by a tropical one, solved as descent on (A, C) with C
//!   projected onto the rank-p set each step and rank-factorized at the end.
//!
//! The [`bench`] module generates planted synthetic instances and compares
//! update rules; the [`recsys`] module ingests MovieLens ratings, builds the
//! ±1 implicit-feedback matrix, fits either model with minibatch descent and
//! early stopping, and scores RMS and hit-rate-at-10.
//!
//! Everything randomized derives a labeled stream from a single global seed,
//! so every fit, benchmark, and evaluation is reproducible bit for bit.

pub mod bench;
pub mod error;
pub mod mask;
pub mod matrix;
pub mod recsys;
pub mod seed;
pub mod solver;
pub mod tropical;

pub use error::{Error, Result};
pub use mask::ObservationMask;
pub use matrix::Matrix;
pub use solver::{
    rank_factorize, rank_projection, tc_fit, tc_predict, tc_step, tmf_fit, tmf_objective,
    tmf_step, EpsSchedule, TcConfig, TcSolution, TmfConfig, TmfSolution, Variant,
};
pub use tropical::{
    frobenius_error, maxplus_matmul, maxplus_matmul_argmax, maxplus_matvec, ArgmaxMap,
};
