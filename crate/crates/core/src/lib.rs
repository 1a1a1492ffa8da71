//! Pseudo-anomaly generation for semi-supervised anomaly detection.
//!
//! Given a handful of labeled anomalies `A` and a large unlabeled pool `H`,
//! the [`augment`] module synthesizes extra anomalous rows (nearest-neighbor
//! Gaussian mixup plus Mixup, Cutout, CutMix and Gaussian-noise baselines).
//! [`harness`] runs the benchmark protocol around them: stratified split,
//! labeled/unlabeled carving, generation, detector fitting and AUCROC.

pub mod augment;
pub mod dataset;
pub mod detect;
pub mod error;
pub mod harness;
pub mod knn;
pub mod matrix;
pub mod metrics;
pub mod randgen;

pub use error::{Error, Result};
pub use matrix::Matrix;
