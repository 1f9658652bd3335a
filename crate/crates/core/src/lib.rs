//! Count-supervised temporal event localization.
//!
//! Training labels are occurrence counts only; localization emerges from
//! the exact Poisson-binomial likelihood of the count under per-step
//! event probabilities. The crate provides the count-distribution engine
//! ([`pbd`]), the batch loss and initialization bias ([`loss`]), a small
//! trainable recurrent model with hand-derived backpropagation ([`rnn`]),
//! synthetic data generators ([`synth`]), Hilbert-curve image scanning
//! ([`hilbert`]), decoding and tolerance-window scoring ([`eval`]), and
//! the file formats and experiment harness used by the `loco` CLI.
//!
//! Numeric code is generic over [`scalar::Scalar`] (f32 or f64); the
//! aliases below pin the f64 instantiations used by the harness and the
//! reference tolerances.

pub mod checkpoint;
pub mod config;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod hilbert;
pub mod idx;
pub mod loss;
pub mod mat;
pub mod pbd;
pub mod props;
pub mod rnn;
pub mod scalar;
pub mod synth;
pub mod train;

pub use error::{Error, Result};

/// f64 probability sequence, the reference precision.
pub type ProbSequence64 = pbd::ProbSequence<f64>;
/// f32 probability sequence for low-precision experiments.
pub type ProbSequence32 = pbd::ProbSequence<f32>;
/// f64 count distribution.
pub type CountDistribution64 = pbd::CountDistribution<f64>;
/// f64 model parameters used by training and checkpoints.
pub type ModelParams64 = rnn::ModelParams<f64>;
/// f64 optimizer state.
pub type AdamState64 = rnn::AdamState<f64>;
/// f64 feature/probability matrix.
pub type Mat64 = mat::Mat<f64>;
