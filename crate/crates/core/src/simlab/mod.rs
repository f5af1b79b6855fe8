//! Simulation harness: noise models for the eight cases, baseline methods,
//! and the experiment runner that aggregates size/power and FDP/TPP tables.

mod baseline;
mod experiment;
mod noise;

pub use baseline::{
    are_monte_carlo, mean_global_bootstrap, mean_global_test, normal_two_sided, student_t_pvalues, Dof, ARE_MIN_REPS,
};
pub use experiment::{
    build_dataset, case_noise, rows_to_csv, run_experiment, CaseNoise, ExperimentRow, Method, SimulationConfig,
    TestKind, DEFAULT_REPS,
};
pub use noise::{sample_noise, NoiseModel};
