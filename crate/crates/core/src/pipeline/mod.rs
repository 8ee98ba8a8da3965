//! End-to-end experiments: data, training with delta collection, pruning
//! decisions and three-variant evaluation.

pub mod checkpoint;
pub mod config;
pub mod data;
pub mod evaluate;
pub mod experiment;
pub mod gradsuite;
pub mod model;
pub mod synthetic;
pub mod train;

pub use checkpoint::Checkpoint;
pub use config::{DataPaths, ExperimentConfig, SyntheticTaskSpec};
pub use data::{FewShotDataset, Split};
pub use evaluate::{evaluate, EvalMetrics};
pub use experiment::{prepare, run_experiment, sweep, write_outputs, ExperimentReport, ExperimentRun, Inputs};
pub use gradsuite::{gradient_suite, GradSuiteReport};
pub use model::Model;
pub use synthetic::generate_synthetic;
pub use train::{train, EpochMetrics, StepRecord, TrainOutcome};
