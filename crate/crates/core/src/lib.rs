//! Log, hinge and hybrid surrogate losses for multiclass and linear-chain
//! structured prediction.
//!
//! The crate covers training (L-BFGS on the regularized empirical risk),
//! inference for linear chains, a brute-force check of when the hybrid loss
//! is classification calibrated, PAC-Bayes bound quantities, seeded synthetic
//! data generators, chunking metrics and the experiment pipelines used by the
//! `hybrid` command-line tool.

pub mod chain;
pub mod consistency;
pub mod dataset;
pub mod error;
pub mod experiments;
pub mod io;
pub mod losses;
pub mod metrics;
pub mod model;
pub mod optim;
pub mod pac_bayes;
pub mod synth;

pub use error::{Error, Result};
