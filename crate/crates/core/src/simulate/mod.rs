//! Gaussian-copula designs with prescribed Kendall's tau and the power
//! experiment runner.

mod design;
mod experiment;

pub use design::{
    block_size, build_tau, copula_correlation, repair_correlation, sample_copula, CopulaSampler,
    Design, TauModel, REPAIR_TOLERANCE,
};
pub use experiment::{
    lookup_rate, replicate_seed, run_power_experiment, write_results_csv, ExperimentConfig, Method,
    ResultRow,
};
