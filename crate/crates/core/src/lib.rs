//! Results-based election-night forecasting.
//!
//! Declared stations give, per group of similar stations, a least-squares
//! transition matrix from reference-election votes to current-election
//! votes; undeclared stations are projected with their group's matrix. The
//! grouping itself is optimized by a genetic algorithm that minimizes the
//! forecast error of a simulated partial count.
//!
//! The crate is `no_std` (with `alloc`); IO, file formats and the service
//! live in the `nightcast` crate.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod data;
pub mod error;
pub mod evaluation;
pub mod ga;
pub mod kmeans;
pub mod linalg;
pub mod regression;
pub mod scenario;
pub mod stats;
pub mod synth;

pub use data::{
    derive_nonvoters, Constituency, Dataset, DeclarationState, DeclareOutcome, PartySet,
    StationRecord, NONVOTER,
};
pub use error::{Error, Result};
pub use evaluation::{
    declared_group_profile, deviation_summary, group_profile, DeviationSummary, GroupProfile,
};
pub use ga::{
    ablation_study, fitness, multirun_stats, optimize, run, run_with, ConvergenceTrace,
    FitnessContext, GaConfig, GroupingChromosome, Objective, Operator, RunOutcome,
};
pub use kmeans::kmeans_baseline;
pub use regression::{
    assemble_forecast, estimate_transition, global_transition, project_station, rmse,
    to_elec_shares, to_vald_shares, ForecastContext, ForecastResult, Metric, TransitionMatrix,
};
pub use scenario::make_scenario;
pub use synth::{generate_synthetic, SynthSpec, SyntheticElection};
