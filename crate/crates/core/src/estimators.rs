//! The Azadkia-Chatterjee coefficient `xi_n`, Chatterjee's coefficient
//! `xi_bar_n`, and their plug-in estimators of `n * Var`.
//!
//! Every variance estimator exists in two modes. `Naive` sums the seven
//! terms literally in floating point, with `O(n^2)` pair sums. `Optimized`
//! reduces each pair sum to `O(n)` after ranking and accumulates exactly in
//! 128-bit integers; all terms are integer polynomials in the ranks, so the
//! only rounding happens in the final division.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neighbors::{build_nn_table, build_right_nn_table, NeighborKind, NeighborTable};
use crate::sample::{compute_ranks, RankVector, Sample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Naive,
    #[default]
    Optimized,
}

/// Which coefficient to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// Euclidean nearest neighbors, any dimension.
    Nn,
    /// Right nearest neighbors, `d = 1` only.
    RightNn,
}

impl EstimatorKind {
    /// The default for a dimension: right-NN when univariate.
    pub fn auto(d: usize) -> Self {
        if d == 1 {
            Self::RightNn
        } else {
            Self::Nn
        }
    }

    pub fn neighbor_kind(self) -> NeighborKind {
        match self {
            Self::Nn => NeighborKind::Euclidean,
            Self::RightNn => NeighborKind::Right,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Nn => "nn",
            Self::RightNn => "right_nn",
        }
    }
}

/// Coefficient plus (optionally) its variance estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub coefficient: f64,
    /// Raw variance estimate, possibly negative in small samples.
    pub variance_est: Option<f64>,
    /// True when the raw estimate was negative.
    pub variance_clamped: bool,
    pub n: usize,
    pub d: usize,
    pub estimator_kind: EstimatorKind,
    pub mode: Mode,
}

impl EstimateReport {
    /// Variance estimate clamped at zero, for inference.
    pub fn variance_for_inference(&self) -> Option<f64> {
        self.variance_est.map(|v| v.max(0.0))
    }

    /// `sqrt(max(variance, 0) / n)`.
    pub fn stderr(&self) -> Option<f64> {
        self.variance_for_inference()
            .map(|v| (v / self.n as f64).sqrt())
    }
}

fn check_n(n: usize, required: usize) -> Result<()> {
    if n < required {
        return Err(Error::TooFewPoints { n, required });
    }
    Ok(())
}

/// `6/(n^2-1) * sum_i min(R_i, R_{N(i)}) - (2n+1)/(n-1)`.
pub fn xi_n(sample: &Sample, table: &NeighborTable) -> Result<f64> {
    check_n(sample.n(), 2)?;
    table.check_against(sample, NeighborKind::Euclidean, 1)?;
    Ok(xi_n_from_ranks(&compute_ranks(sample), table))
}

/// `xi_n` from precomputed ranks. `n >= 2` is the caller's responsibility.
pub fn xi_n_from_ranks(ranks: &RankVector, table: &NeighborTable) -> f64 {
    let r = ranks.as_slice();
    let n = r.len() as i128;
    let s: i128 = (0..r.len())
        .map(|i| r[i].min(r[table.nearest(i)]) as i128)
        .sum();
    // Single rounding: (6S - (2n+1)(n+1)) / (n^2 - 1).
    (6 * s - (2 * n + 1) * (n + 1)) as f64 / (n * n - 1) as f64
}

/// `1 - 3/(n^2-1) * sum_i |R_{N̄(i)} - R_i|`.
pub fn xi_bar_n(sample: &Sample, table: &NeighborTable) -> Result<f64> {
    check_n(sample.n(), 2)?;
    table.check_against(sample, NeighborKind::Right, 1)?;
    Ok(xi_bar_n_from_ranks(&compute_ranks(sample), table))
}

pub fn xi_bar_n_from_ranks(ranks: &RankVector, table: &NeighborTable) -> f64 {
    let r = ranks.as_slice();
    let n = r.len() as i128;
    let s: i128 = (0..r.len())
        .map(|i| r[i].abs_diff(r[table.nearest(i)]) as i128)
        .sum();
    (n * n - 1 - 3 * s) as f64 / (n * n - 1) as f64
}

/// Plug-in estimator of `n Var[xi_n]` from the Euclidean table (`k_max >= 3`).
pub fn sigma_hat_sq(sample: &Sample, table: &NeighborTable, mode: Mode) -> Result<f64> {
    check_n(sample.n(), 4)?;
    table.check_against(sample, NeighborKind::Euclidean, 3)?;
    Ok(sigma_hat_sq_from_ranks(&compute_ranks(sample), table, mode))
}

pub fn sigma_hat_sq_from_ranks(ranks: &RankVector, table: &NeighborTable, mode: Mode) -> f64 {
    match mode {
        Mode::Naive => naive::sigma_hat_sq(ranks.as_slice(), table),
        Mode::Optimized => {
            let local = nn_local_sums(ranks.as_slice(), table);
            combine(ranks.as_slice(), table, local)
        }
    }
}

/// Plug-in estimator of `n Var[xi_bar_n]` from the right table (`k_max >= 3`).
pub fn sigma_bar_hat_sq(sample: &Sample, table: &NeighborTable, mode: Mode) -> Result<f64> {
    check_n(sample.n(), 2)?;
    table.check_against(sample, NeighborKind::Right, 3)?;
    Ok(sigma_bar_hat_sq_from_ranks(
        &compute_ranks(sample),
        table,
        mode,
    ))
}

pub fn sigma_bar_hat_sq_from_ranks(ranks: &RankVector, table: &NeighborTable, mode: Mode) -> f64 {
    match mode {
        Mode::Naive => naive::sigma_bar_hat_sq(ranks.as_slice(), table),
        Mode::Optimized => {
            let local = right_local_sums(ranks.as_slice(), table);
            combine(ranks.as_slice(), table, local)
        }
    }
}

/// The three `1/n^3` per-observation sums, combined with their signs.
fn nn_local_sums(r: &[usize], t: &NeighborTable) -> i128 {
    let mut acc = 0i128;
    for i in 0..r.len() {
        let (n1, n2, n3) = (t.neighbor(i, 1), t.neighbor(i, 2), t.neighbor(i, 3));
        let m = r[i].min(r[n1]) as i128;
        let mutual = t.mutual()[i] as i128;
        let shared = t.shared_count()[i] as i128;
        let a = r[i].min(r[n2]) as i128;
        let b = r[n2].min(r[n3]) as i128;
        acc += m * m * (1 + mutual);
        acc += m * a * (2 * (1 - mutual) + shared);
        acc -= m * b * (1 + (1 - mutual) + shared);
    }
    acc
}

fn right_local_sums(r: &[usize], t: &NeighborTable) -> i128 {
    let mut acc = 0i128;
    for i in 0..r.len() {
        let (n1, n2, n3) = (t.neighbor(i, 1), t.neighbor(i, 2), t.neighbor(i, 3));
        let m = r[i].min(r[n1]) as i128;
        let a = r[i].min(r[n2]) as i128;
        let b = r[n2].min(r[n3]) as i128;
        acc += m * m + 2 * m * a - 2 * m * b;
    }
    acc
}

/// Adds the pair sums and the squared-mean term to `local` and scales.
///
/// With `m_j = R_j ∧ R_{N(j)}` the two indicator pair sums share the count
/// `c_i = #{j != i : m_j >= R_i}`. Since `m_i <= R_i`, the excluded `j = i`
/// term contributes exactly when `m_i = R_i`. The min pair sum over sorted
/// `m` is `2 * sum_k m_(k) (n - k)`.
fn combine(r: &[usize], t: &NeighborTable, local: i128) -> f64 {
    let n = r.len();
    let m: Vec<usize> = (0..n).map(|i| r[i].min(r[t.nearest(i)])).collect();

    // at_least[v] = #{j : m_j >= v}; ranks live in 1..=n.
    let mut at_least = vec![0i128; n + 2];
    for &v in &m {
        at_least[v] += 1;
    }
    for v in (1..=n).rev() {
        at_least[v] += at_least[v + 1];
    }

    let mut ind_m = 0i128;
    let mut ind_next = 0i128;
    for i in 0..n {
        let count = at_least[r[i]] - (m[i] == r[i]) as i128;
        ind_m += m[i] as i128 * count;
        let next_min = r[t.neighbor(i, 1)].min(r[t.neighbor(i, 2)]) as i128;
        ind_next += next_min * count;
    }

    // Counting sort gives m ascending.
    let mut min_pairs = 0i128;
    let mut k = 0i128;
    let nn = n as i128;
    for v in 1..=n {
        let c = at_least[v] - at_least[v + 1];
        for _ in 0..c {
            k += 1;
            min_pairs += 2 * v as i128 * (nn - k);
        }
    }
    let m_sum: i128 = m.iter().map(|&v| v as i128).sum();

    // 36 { L/n^3 + P/(n^2 (n-1)) - 4 M^2/n^4 } over the common denominator
    // n^4 (n-1).
    let pairs = 4 * ind_m - 2 * ind_next + min_pairs;
    let numer = local * nn * (nn - 1) + pairs * nn * nn - 4 * m_sum * m_sum * (nn - 1);
    let denom = (nn * nn) as f64 * (nn * nn) as f64 * (nn - 1) as f64;
    36.0 * numer as f64 / denom
}

mod naive {
    //! Literal transcription of the displayed estimators.

    use crate::neighbors::NeighborTable;

    fn minf(a: usize, b: usize) -> f64 {
        a.min(b) as f64
    }

    fn ind(b: bool) -> f64 {
        if b {
            1.0
        } else {
            0.0
        }
    }

    fn pair_terms(r: &[usize], t: &NeighborTable) -> (f64, f64, f64) {
        let n = r.len();
        let nb = |i: usize, k: usize| t.neighbor(i, k);
        let (mut p4, mut p5, mut p6) = (0.0, 0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let hit = ind(r[i] <= r[j].min(r[nb(j, 1)]));
                p4 += hit * minf(r[i], r[nb(i, 1)]);
                p5 += hit * minf(r[nb(i, 1)], r[nb(i, 2)]);
                p6 += r[i].min(r[nb(i, 1)]).min(r[j]).min(r[nb(j, 1)]) as f64;
            }
        }
        (p4, p5, p6)
    }

    fn finish(r: &[usize], t: &NeighborTable, local: f64) -> f64 {
        let n = r.len() as f64;
        let (p4, p5, p6) = pair_terms(r, t);
        let mean: f64 = (0..r.len())
            .map(|i| minf(r[i], r[t.neighbor(i, 1)]))
            .sum::<f64>()
            / (n * n);
        let pair_scale = 1.0 / (n * n * (n - 1.0));
        36.0 * (local + 4.0 * pair_scale * p4 - 2.0 * pair_scale * p5 + pair_scale * p6
            - 4.0 * mean * mean)
    }

    pub(super) fn sigma_hat_sq(r: &[usize], t: &NeighborTable) -> f64 {
        let n = r.len() as f64;
        let cube = 1.0 / (n * n * n);
        let shared = |i: usize| {
            (0..r.len())
                .filter(|&j| j != i && t.neighbor(j, 1) == t.neighbor(i, 1))
                .count() as f64
        };
        let mutual = |i: usize| t.neighbor(t.neighbor(i, 1), 1) == i;
        let (mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0);
        for i in 0..r.len() {
            let (n1, n2, n3) = (t.neighbor(i, 1), t.neighbor(i, 2), t.neighbor(i, 3));
            let m = minf(r[i], r[n1]);
            s1 += m * m * (1.0 + ind(mutual(i)));
            s2 += m * minf(r[i], r[n2]) * (2.0 * ind(!mutual(i)) + shared(i));
            s3 += m * minf(r[n2], r[n3]) * (1.0 + ind(!mutual(i)) + shared(i));
        }
        finish(r, t, cube * s1 + cube * s2 - cube * s3)
    }

    pub(super) fn sigma_bar_hat_sq(r: &[usize], t: &NeighborTable) -> f64 {
        let n = r.len() as f64;
        let cube = 1.0 / (n * n * n);
        let (mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0);
        for i in 0..r.len() {
            let (n1, n2, n3) = (t.neighbor(i, 1), t.neighbor(i, 2), t.neighbor(i, 3));
            let m = minf(r[i], r[n1]);
            s1 += m * m;
            s2 += m * minf(r[i], r[n2]);
            s3 += m * minf(r[n2], r[n3]);
        }
        finish(r, t, cube * s1 + 2.0 * cube * s2 - 2.0 * cube * s3)
    }
}

/// Builds the required table, then computes the coefficient and, when
/// `with_variance` and the sample is large enough, its variance estimate.
pub fn estimate(
    sample: &Sample,
    kind: EstimatorKind,
    with_variance: bool,
    mode: Mode,
) -> Result<EstimateReport> {
    let n = sample.n();
    check_n(n, 2)?;
    let ranks = compute_ranks(sample);
    let (coefficient, variance_est) = match kind {
        EstimatorKind::RightNn => {
            let table = build_right_nn_table(sample, 3)?;
            let coef = xi_bar_n_from_ranks(&ranks, &table);
            let var = with_variance.then(|| sigma_bar_hat_sq_from_ranks(&ranks, &table, mode));
            (coef, var)
        }
        EstimatorKind::Nn => {
            if with_variance && n >= 4 {
                let table = build_nn_table(sample, 3)?;
                let coef = xi_n_from_ranks(&ranks, &table);
                (coef, Some(sigma_hat_sq_from_ranks(&ranks, &table, mode)))
            } else {
                let table = build_nn_table(sample, 1)?;
                (xi_n_from_ranks(&ranks, &table), None)
            }
        }
    };
    Ok(EstimateReport {
        coefficient,
        variance_est,
        variance_clamped: variance_est.is_some_and(|v| v < 0.0),
        n,
        d: sample.d(),
        estimator_kind: kind,
        mode,
    })
}
