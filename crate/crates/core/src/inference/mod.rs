//! Asymptotic confidence intervals, the one-sided threshold test, and the
//! dimension constants behind the null variance of `xi_n`.

pub mod geometry;
pub mod special;

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::EstimatorKind;

pub use geometry::{ball_union_volume, o_constant_mc, unit_ball_volume};
pub use special::{normal_cdf, normal_quantile, regularized_incomplete_beta};

/// Samples used for cached `o_d` values; gives a standard error below 1e-3.
pub const O_CONSTANT_SAMPLES: usize = 1_000_000;
pub const O_CONSTANT_SEED: u64 = 0x0d_5eed;

/// Estimand label for a univariate interval.
pub const TARGET_XI: &str = "xi";
/// Estimand label when `d > 1`: the bias of `xi_n` is not root-n negligible
/// there, so the interval only covers its expectation.
pub const TARGET_MEAN_XI_N: &str = "E[xi_n]";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    /// Nominal coverage `1 - alpha`.
    pub level: f64,
    pub target_note: String,
}

impl ConfidenceInterval {
    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub reject: bool,
    pub kappa: f64,
    pub threshold: f64,
    /// Significance level `alpha`.
    pub level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticConstants {
    pub d: usize,
    /// Limiting probability that a point is its nearest neighbor's nearest
    /// neighbor.
    pub q_d: f64,
    /// Limiting mean number of other points sharing a point's nearest
    /// neighbor.
    pub o_d: f64,
    pub o_d_stderr: f64,
    /// Null limit of `n Var[xi_n]`.
    pub null_variance: f64,
}

impl AsymptoticConstants {
    /// Computes the constants with a fresh Monte Carlo run for `o_d`
    /// (`d = 1` uses the exact value 1/2).
    pub fn compute(d: usize, samples: usize, seed: u64) -> Result<Self> {
        let q_d = q_constant(d)?;
        let (o_d, o_d_stderr) = if d == 1 {
            (0.5, 0.0)
        } else {
            o_constant_mc(d, samples, seed)?
        };
        Ok(Self {
            d,
            q_d,
            o_d,
            o_d_stderr,
            null_variance: 0.4 + 0.4 * q_d + 0.8 * o_d,
        })
    }
}

/// Cached constants for dimension `d`, computed once per process with
/// [`O_CONSTANT_SAMPLES`] draws.
pub fn asymptotic_constants(d: usize) -> Result<AsymptoticConstants> {
    static CACHE: OnceLock<Mutex<HashMap<usize, AsymptoticConstants>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(c) = cache.lock().unwrap().get(&d) {
        return Ok(c.clone());
    }
    let c = AsymptoticConstants::compute(d, O_CONSTANT_SAMPLES, O_CONSTANT_SEED)?;
    cache.lock().unwrap().insert(d, c.clone());
    Ok(c)
}

/// `q_d = 1 / (2 - I_{3/4}((d+1)/2, 1/2))`.
pub fn q_constant(d: usize) -> Result<f64> {
    if d == 0 {
        return Err(Error::OutOfDomain("dimension must be >= 1".into()));
    }
    let i = regularized_incomplete_beta(0.75, (d as f64 + 1.0) / 2.0, 0.5)?;
    Ok(1.0 / (2.0 - i))
}

/// Limit of `n Var` under independence: 2/5 for the right-NN coefficient,
/// `2/5 + 2/5 q_d + 4/5 o_d` for the Euclidean one.
pub fn null_asymptotic_variance(d: usize, kind: EstimatorKind) -> Result<f64> {
    match kind {
        EstimatorKind::RightNn if d == 1 => Ok(0.4),
        EstimatorKind::RightNn => Err(Error::OutOfDomain(format!(
            "right-NN null variance is only defined for d = 1, got {d}"
        ))),
        EstimatorKind::Nn => Ok(asymptotic_constants(d)?.null_variance),
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::OutOfDomain(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    Ok(())
}

fn check_variance(variance_est: f64) -> Result<()> {
    if variance_est.is_nan() || variance_est.is_infinite() {
        return Err(Error::OutOfDomain(format!(
            "variance estimate must be finite, got {variance_est}"
        )));
    }
    if variance_est < 0.0 {
        return Err(Error::NegativeVariance(variance_est));
    }
    Ok(())
}

/// `coefficient ± z_{1-alpha/2} sqrt(variance_est / n)`.
pub fn confidence_interval(
    coefficient: f64,
    variance_est: f64,
    n: usize,
    alpha: f64,
    d: usize,
) -> Result<ConfidenceInterval> {
    check_alpha(alpha)?;
    check_variance(variance_est)?;
    if n < 2 {
        return Err(Error::TooFewPoints { n, required: 2 });
    }
    if d == 0 {
        return Err(Error::OutOfDomain("dimension must be >= 1".into()));
    }
    let half = normal_quantile(1.0 - alpha / 2.0)? * (variance_est / n as f64).sqrt();
    Ok(ConfidenceInterval {
        lower: coefficient - half,
        upper: coefficient + half,
        level: 1.0 - alpha,
        target_note: if d == 1 { TARGET_XI } else { TARGET_MEAN_XI_N }.to_string(),
    })
}

/// Rejects `H0: xi <= kappa` when
/// `coefficient > kappa + z_{1-alpha} sqrt(variance_est / n)`.
pub fn threshold_test(
    coefficient: f64,
    variance_est: f64,
    n: usize,
    kappa: f64,
    alpha: f64,
) -> Result<TestResult> {
    if kappa.is_nan() || kappa >= 1.0 {
        return Err(Error::InvalidKappa(kappa));
    }
    check_alpha(alpha)?;
    check_variance(variance_est)?;
    if n < 2 {
        return Err(Error::TooFewPoints { n, required: 2 });
    }
    let threshold = kappa + normal_quantile(1.0 - alpha)? * (variance_est / n as f64).sqrt();
    Ok(TestResult {
        reject: coefficient > threshold,
        kappa,
        threshold,
        level: alpha,
    })
}
