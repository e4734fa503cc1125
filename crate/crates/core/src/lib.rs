//! Semi-supervised anomaly detection with synthetic labels.
//!
//! A small random subset of (presumed normal) training rows is oversampled
//! with SMOTE and jittered with Gaussian noise to form a synthetic anomaly
//! class. A feed-forward noise detector and an autoencoder are then trained
//! jointly on the relabelled data, and their two probabilities are fused into
//! one anomaly score with a weight calibrated on training-score quartiles.
//!
//! Modules:
//!
//! - [`math`]: matrices, dense layers, losses, Adam, seeded RNG
//! - [`data`]: synthetic generator, CSV I/O, standardization, splits
//! - [`labelgen`]: synthetic anomaly construction
//! - [`model`]: the network, training, scoring and checkpoints
//! - [`metrics`]: ROC-AUC and average precision
//! - [`baselines`]: KNN and PCA detectors
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64`, which is what the CLI uses.

pub mod baselines;
pub mod data;
pub mod error;
pub mod labelgen;
pub mod math;
pub mod metrics;
pub mod model;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Matrix = math::Matrix<f64>;
pub type DenseLayer = math::DenseLayer<f64>;
pub type AdamState = math::AdamState<f64>;
pub type Dataset = data::Dataset<f64>;
pub type Standardization = data::Standardization<f64>;
pub type LabeledTrainingSet = labelgen::LabeledTrainingSet<f64>;
pub type AnoRandModel = model::AnoRandModel<f64>;
pub type ScoreReport = model::ScoreReport<f64>;
pub type Checkpoint = model::Checkpoint<f64>;
pub type KnnDetector = baselines::KnnDetector<f64>;
pub type PcaDetector = baselines::PcaDetector<f64>;

pub type MatrixF32 = math::Matrix<f32>;
pub type AnoRandModelF32 = model::AnoRandModel<f32>;
