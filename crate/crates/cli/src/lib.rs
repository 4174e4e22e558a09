//! Experiment orchestration for the random Schrödinger operator laboratory:
//! flat-file configuration, named experiments with machine-readable
//! verdicts, run manifests, and deterministic single-task replay.

pub mod config;
pub mod experiments;
pub mod manifest;

pub use config::Config;
pub use experiments::{replay_task, run, ExperimentOutcome, EXPERIMENTS};
pub use manifest::{load_manifest, run_experiment, RunManifest};
