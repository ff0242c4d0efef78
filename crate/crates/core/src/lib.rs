//! Rank correlations built on nearest neighbors: Chatterjee's `xi_bar_n`
//! for univariate covariates and the Azadkia-Chatterjee `xi_n` for any
//! dimension, with consistent variance estimators, asymptotic confidence
//! intervals and tests, and a Monte Carlo lab of synthetic models.
//!
//! ```
//! use xicor_core::{estimate, EstimatorKind, Mode, Sample};
//!
//! let sample = Sample::new(vec![vec![1.0], vec![2.0], vec![3.0]], vec![1.0, 2.0, 3.0]).unwrap();
//! let report = estimate(&sample, EstimatorKind::RightNn, false, Mode::Optimized).unwrap();
//! assert!((report.coefficient - 0.25).abs() < 1e-15);
//! ```

pub mod error;
pub mod estimators;
pub mod inference;
pub mod neighbors;
pub mod sample;
pub mod simlab;

pub use error::{Error, Result};
pub use estimators::{
    estimate, sigma_bar_hat_sq, sigma_hat_sq, xi_bar_n, xi_n, EstimateReport, EstimatorKind, Mode,
};
pub use inference::{
    asymptotic_constants, confidence_interval, null_asymptotic_variance, q_constant,
    threshold_test, AsymptoticConstants, ConfidenceInterval, TestResult,
};
pub use neighbors::{
    build_nn_table, build_right_nn_table, nn_brute_force_oracle, NeighborKind, NeighborTable,
};
pub use sample::{compute_ranks, compute_ranks_naive, RankVector, Sample};
