//! Synthetic models, population values and Monte Carlo experiments.

pub mod experiment;
pub mod hajek;
pub mod ks;
pub mod model;
pub mod population;
pub mod quadrature;

pub use experiment::{
    replicate_rng, run_clt_experiment, run_coverage_experiment, run_experiment,
    run_hajek_experiment, run_test_experiment, sample_model, ExperimentConfig, ExperimentKind,
    ExperimentResult, KindChoice, Replicate, Summary,
};
pub use hajek::{hajek_xi_star, HajekProjection};
pub use ks::{ks_distance_to, ks_statistic};
pub use model::{Family, Link, ModelSpec};
pub use population::{population_xi, DEFAULT_QUADRATURE_SEGMENTS};
