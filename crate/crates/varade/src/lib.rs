//! Streaming multivariate time-series anomaly detection built around a
//! variational autoregressive forecaster: a stack of stride-2 convolutions
//! predicts a Gaussian for the next sample, and the predicted variance is the
//! anomaly score. Ships with classical kNN and Isolation Forest baselines, a
//! synthetic 86-channel industrial stream generator, threshold-free AUC-ROC
//! evaluation, and a throughput benchmark.

pub mod baselines;
pub mod bench;
pub mod checkpoint;
pub mod data;
pub mod detector;
pub mod error;
pub mod eval;
pub mod loss;
pub mod model;
pub mod optim;
pub mod tape;
pub mod tensor;
pub mod train;

pub use error::{Result, VaradeError};
