//! Classifier library for supervised sparse context reconstruction (SSCL):
//! each point is represented as a sparse linear combination of its k nearest
//! neighbors, and a linear classifier over that reconstruction is learned
//! jointly with the coefficients through alternating dual optimization.
//!
//! Modules:
//! - [`data`]: CSV ingestion, standardization, fold splits, task construction
//! - [`context`]: exact brute-force nearest-neighbor search
//! - [`optim`]: the L1-quadratic and box-QP kernels with KKT certificates
//! - [`sscl`]: the joint learner, prediction, and model artifacts
//! - [`baselines`]: KNN and sparse-reconstruction comparison classifiers
//! - [`oracle`]: brute-force reference routes for verification

pub mod baselines;
pub mod context;
pub mod data;
pub mod error;
pub mod linalg;
pub mod optim;
pub mod oracle;
pub mod sscl;
pub mod synth;

pub use error::{Error, Result};
