//! Dataset ingestion, evaluation metrics, experiment orchestration and
//! persistence.

pub mod config;
pub mod dataset;
pub mod experiment;
pub mod metrics;
pub mod report;
pub mod resample;
pub mod stoi;
pub mod synth;
pub mod wav;

pub use config::ExperimentConfig;
pub use experiment::{
    label_models, prepare, reconstruct, run_experiment, train_from_config, LabeledModel, Method,
    Report, Timing,
};
pub use report::{emit_report, load_report};
