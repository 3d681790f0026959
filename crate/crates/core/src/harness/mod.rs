//! Seeded experiments: instance generation, initial points, sweeps and
//! report emission.

mod emit;
mod experiment;
mod generate;
mod rate;
pub mod verify;

pub use emit::{emit_reports, summary_json, trace_csv, OutputFormat, SUMMARY_FILE, TRACE_FILE, TRACE_HEADER};
pub use experiment::{run_experiment, run_trial, Aggregates, Algorithm, ExperimentBundle, ExperimentConfig, TrialResult};
pub use generate::{build_b0, generate_instance, perturb_c_star, toeplitz_instance, GENERATOR_STREAM, PERTURB_STREAM, B0_STREAM};
pub use rate::{estimate_root_rate, log_ratios, roundoff_floor, RATE_WINDOW};
