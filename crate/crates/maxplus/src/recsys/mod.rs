//! Implicit-feedback recommendation harness.
//!
//! Pipeline: ingest MovieLens ratings, build the ±1 implicit matrix with
//! train/validation/test masks, fit a TMF or TC model by minibatch descent
//! with early stopping, then score test RMS and hit rate at 10.

pub mod data;
pub mod fit;
pub mod implicit;
pub mod metrics;

pub use data::{load_movielens, read_movielens, write_movielens, DatasetFormat, Rating,
    RatingsDataset};
pub use fit::{fit_stochastic, FittedModel, ModelSpec, StochasticConfig, StochasticFit};
pub use implicit::{build_implicit, ImplicitMatrix, SplitSpec, NEGATIVE_SAMPLING};
pub use metrics::{hit_rate_at_10, rms};
