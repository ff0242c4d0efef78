//! Validated samples and response ranks.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `n` observations of a `d`-dimensional covariate and a scalar response.
///
/// Covariates are stored row-major in one flat buffer. A `Sample` can only be
/// obtained through validation, so every coordinate is finite and `n >= 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    d: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    ties_in_y: bool,
    duplicate_x: bool,
}

impl Sample {
    /// Validates per-observation covariate rows and responses.
    pub fn new(x: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self> {
        if x.is_empty() && y.is_empty() {
            return Err(Error::EmptySample);
        }
        let d = x.first().map_or(0, Vec::len);
        for (row, point) in x.iter().enumerate() {
            if point.len() != d || d == 0 {
                return Err(Error::DimensionMismatch {
                    row,
                    expected: d.max(1),
                    found: point.len(),
                });
            }
        }
        let flat = x.into_iter().flatten().collect();
        Self::from_flat(d, flat, y)
    }

    /// Validates rows whose last column is the response and whose leading
    /// columns are the covariates.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let first = rows.first().ok_or(Error::EmptySample)?;
        let width = first.len();
        let mut x = Vec::with_capacity(rows.len() * width.saturating_sub(1));
        let mut y = Vec::with_capacity(rows.len());
        for (row, values) in rows.iter().enumerate() {
            if values.len() != width || width < 2 {
                return Err(Error::DimensionMismatch {
                    row,
                    expected: width.max(2),
                    found: values.len(),
                });
            }
            x.extend_from_slice(&values[..width - 1]);
            y.push(values[width - 1]);
        }
        Self::from_flat(width - 1, x, y)
    }

    /// Validates a flat row-major covariate buffer of `y.len() * d` values.
    pub fn from_flat(d: usize, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = y.len();
        if n == 0 {
            return Err(Error::EmptySample);
        }
        if d == 0 || x.len() != n * d {
            return Err(Error::DimensionMismatch {
                row: 0,
                expected: n * d.max(1),
                found: x.len(),
            });
        }
        if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue {
                row: pos / d,
                column: pos % d,
            });
        }
        if let Some(row) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { row, column: d });
        }

        let ties_in_y = has_ties(&y);
        let duplicate_x = has_duplicate_points(d, &x);
        Ok(Self {
            d,
            x,
            y,
            ties_in_y,
            duplicate_x,
        })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Covariate vector of observation `i`.
    pub fn point(&self, i: usize) -> &[f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    pub fn x_flat(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// True when two responses compare equal. The estimators still run, but
    /// their continuity-based guarantees no longer apply.
    pub fn ties_in_y(&self) -> bool {
        self.ties_in_y
    }

    /// True when two observations share an identical covariate vector.
    pub fn duplicate_x(&self) -> bool {
        self.duplicate_x
    }
}

fn has_ties(values: &[f64]) -> bool {
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    sorted.windows(2).any(|w| w[0] == w[1])
}

fn has_duplicate_points(d: usize, x: &[f64]) -> bool {
    let mut rows: Vec<&[f64]> = x.chunks_exact(d).collect();
    rows.sort_unstable_by(|a, b| cmp_points(a, b));
    rows.windows(2).any(|w| w[0] == w[1])
}

fn cmp_points(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(u, v)| u.total_cmp(v))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Response ranks `r_i = #{j : y_j <= y_i}` (ties share the maximal rank).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankVector(Vec<usize>);

impl RankVector {
    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }
}

impl std::ops::Index<usize> for RankVector {
    type Output = usize;

    fn index(&self, i: usize) -> &usize {
        &self.0[i]
    }
}

/// Max-convention ranks of the responses, `O(n log n)`.
pub fn compute_ranks(sample: &Sample) -> RankVector {
    ranks_of(sample.y())
}

/// Max-convention ranks of an arbitrary finite slice.
pub fn ranks_of(values: &[f64]) -> RankVector {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&a, &b| values[a].total_cmp(&values[b]));

    let mut ranks = vec![0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end]] == values[order[start]] {
            end += 1;
        }
        for &i in &order[start..end] {
            ranks[i] = end;
        }
        start = end;
    }
    RankVector(ranks)
}

/// Direct evaluation of the defining count, `O(n^2)`. Testing oracle.
pub fn compute_ranks_naive(sample: &Sample) -> RankVector {
    let y = sample.y();
    RankVector(
        y.iter()
            .map(|yi| y.iter().filter(|yj| *yj <= yi).count())
            .collect(),
    )
}
