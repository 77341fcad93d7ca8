//! Experiment runner behind the `auth-sim` binary.

pub mod config;
pub mod experiment;
pub mod registry;
pub mod report;

pub use config::{load_configs, ExperimentConfig, LayoutConfig, Overrides, ParamsConfig};
pub use experiment::{run_experiment, run_trial, theoretical_bound, trial_seeds, ExperimentResult, TrialSeeds};
pub use registry::{RegisteredPair, Registry};
pub use report::{write_bound_records, write_results, OutputFormat, CSV_HEADER};
