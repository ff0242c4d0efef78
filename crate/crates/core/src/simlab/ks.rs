use crate::error::{Error, Result};
use crate::inference::normal_cdf;

/// Kolmogorov-Smirnov distance between the empirical CDF of `values` and
/// the standard normal CDF.
pub fn ks_statistic(values: &[f64]) -> Result<f64> {
    ks_distance_to(values, normal_cdf)
}

/// Kolmogorov-Smirnov distance to an arbitrary continuous CDF.
pub fn ks_distance_to<F: Fn(f64) -> f64>(values: &[f64], cdf: F) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::TooFewValues {
            n: values.len(),
            required: 2,
        });
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::OutOfDomain(format!("non-finite value {v}")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let m = sorted.len() as f64;
    let mut worst: f64 = 0.0;
    for (i, &v) in sorted.iter().enumerate() {
        let f = cdf(v);
        worst = worst.max(f - i as f64 / m).max((i + 1) as f64 / m - f);
    }
    Ok(worst)
}
