//! Phase retrieval from STFT magnitudes.
//!
//! Griffin-Lim and Bregman ADMM baselines, an unfolded ADMM network whose
//! proximity operator is a trainable adaptive piecewise-linear (APL) unit,
//! its training loop, and recovery of the metric the trained network
//! implicitly minimizes.
// Negated comparisons below are how NaN gets rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod divergence;
pub mod error;
pub mod harness;
pub mod metric_recovery;
pub mod oracle;
pub mod seeding;
pub mod solvers;
pub mod transforms;
pub mod unfolded;

pub use error::{Error, Result};
pub use transforms::{Complex, Measurements, Signal, Spectrogram, StftConfig, StftOperator};
