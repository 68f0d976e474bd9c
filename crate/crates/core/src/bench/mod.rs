//! Configuration-driven experiment runner: build streams, run algorithms,
//! evaluate hindsight oracles, emit CSV results and log-log slope fits.

mod config;
mod runner;

pub use config::{
    AlgorithmSpec, ExperimentConfig, ExperimentSection, OracleKind, OracleSpec, SweepAxis,
    SweepSpec,
};
pub use runner::{
    log_log_slope, run_experiment, run_sweep, AggregateRow, FitRow, ResultRow, RunOutput,
};
