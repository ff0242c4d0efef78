//! Nearest-neighbor tables: Euclidean k-NN for any `d`, right k-NN for `d = 1`.

mod kdtree;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::Sample;

use kdtree::{dist_sq, BestK, KdTree};

/// Above this dimension exact tree search loses to a brute-force scan at
/// the sample sizes this crate targets.
pub const DEFAULT_SPATIAL_INDEX_MAX_DIM: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeighborKind {
    Euclidean,
    Right,
}

/// Per-observation neighbor indices plus the mutual-NN flag and shared-NN
/// count derived from the first neighbor. Indices are zero-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborTable {
    kind: NeighborKind,
    k_max: usize,
    nbr: Vec<usize>,
    mutual: Vec<bool>,
    shared_count: Vec<u32>,
}

impl NeighborTable {
    fn from_neighbors(kind: NeighborKind, k_max: usize, nbr: Vec<usize>) -> Self {
        let n = nbr.len() / k_max;
        let first = |i: usize| nbr[i * k_max];

        let mut in_degree = vec![0u32; n];
        for i in 0..n {
            in_degree[first(i)] += 1;
        }
        let mutual = (0..n).map(|i| first(first(i)) == i).collect();
        // Others pointing at N(i); when N(i) = i (right-NN fallback) the
        // count must not include i itself either way.
        let shared_count = (0..n).map(|i| in_degree[first(i)] - 1).collect();

        Self {
            kind,
            k_max,
            nbr,
            mutual,
            shared_count,
        }
    }

    pub fn kind(&self) -> NeighborKind {
        self.kind
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn n(&self) -> usize {
        self.mutual.len()
    }

    /// Index of the `order`-th neighbor (1-based order) of observation `i`.
    #[inline]
    pub fn neighbor(&self, i: usize, order: usize) -> usize {
        debug_assert!(order >= 1 && order <= self.k_max);
        self.nbr[i * self.k_max + order - 1]
    }

    /// First neighbor, `N(i)`.
    #[inline]
    pub fn nearest(&self, i: usize) -> usize {
        self.nbr[i * self.k_max]
    }

    pub fn neighbors_of(&self, i: usize) -> &[usize] {
        &self.nbr[i * self.k_max..(i + 1) * self.k_max]
    }

    /// `i == N(N(i))`.
    pub fn mutual(&self) -> &[bool] {
        &self.mutual
    }

    /// `|{j != i : N(j) = N(i)}|`.
    pub fn shared_count(&self) -> &[u32] {
        &self.shared_count
    }

    pub(crate) fn check_against(
        &self,
        sample: &Sample,
        kind: NeighborKind,
        min_k: usize,
    ) -> Result<()> {
        if self.kind != kind {
            return Err(Error::TableMismatch(format!(
                "expected a {kind:?} table, got {:?}",
                self.kind
            )));
        }
        if self.n() != sample.n() {
            return Err(Error::TableMismatch(format!(
                "table has {} rows, sample has {}",
                self.n(),
                sample.n()
            )));
        }
        if self.k_max < min_k {
            return Err(Error::TableMismatch(format!(
                "need k_max >= {min_k}, table has {}",
                self.k_max
            )));
        }
        Ok(())
    }
}

/// Options for Euclidean table construction.
#[derive(Debug, Clone, Copy)]
pub struct NnOptions {
    /// Largest dimension for which the kd-tree is used.
    pub spatial_index_max_dim: usize,
}

impl Default for NnOptions {
    fn default() -> Self {
        Self {
            spatial_index_max_dim: DEFAULT_SPATIAL_INDEX_MAX_DIM,
        }
    }
}

fn check_enough_points(n: usize, k_max: usize) -> Result<()> {
    if k_max == 0 {
        return Err(Error::OutOfDomain("k_max must be >= 1".into()));
    }
    if n <= k_max {
        return Err(Error::TooFewPoints {
            n,
            required: k_max + 1,
        });
    }
    Ok(())
}

/// Exact Euclidean k-NN table. Equidistant candidates are ordered by index.
pub fn build_nn_table(sample: &Sample, k_max: usize) -> Result<NeighborTable> {
    build_nn_table_with(sample, k_max, NnOptions::default())
}

pub fn build_nn_table_with(
    sample: &Sample,
    k_max: usize,
    options: NnOptions,
) -> Result<NeighborTable> {
    check_enough_points(sample.n(), k_max)?;
    if sample.d() > options.spatial_index_max_dim {
        return Ok(brute_force(sample, k_max));
    }
    let tree = KdTree::build(sample);
    let mut nbr = Vec::with_capacity(sample.n() * k_max);
    for i in 0..sample.n() {
        nbr.extend(tree.nearest_excluding(i, k_max));
    }
    Ok(NeighborTable::from_neighbors(
        NeighborKind::Euclidean,
        k_max,
        nbr,
    ))
}

fn brute_force(sample: &Sample, k_max: usize) -> NeighborTable {
    let n = sample.n();
    let mut nbr = Vec::with_capacity(n * k_max);
    for i in 0..n {
        let mut best = BestK::new(k_max);
        let p = sample.point(i);
        for j in (0..n).filter(|&j| j != i) {
            best.offer((dist_sq(p, sample.point(j)), j));
        }
        nbr.extend(best.indices());
    }
    NeighborTable::from_neighbors(NeighborKind::Euclidean, k_max, nbr)
}

/// Full sort of every other point per query, `O(n^2 log n)`. Testing oracle
/// for [`build_nn_table`]; intended for `n` up to a few thousand.
pub fn nn_brute_force_oracle(sample: &Sample, k_max: usize) -> Result<NeighborTable> {
    check_enough_points(sample.n(), k_max)?;
    let n = sample.n();
    let mut nbr = Vec::with_capacity(n * k_max);
    for i in 0..n {
        let p = sample.point(i);
        let mut others: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (dist_sq(p, sample.point(j)), j))
            .collect();
        others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        nbr.extend(others.iter().take(k_max).map(|c| c.1));
    }
    Ok(NeighborTable::from_neighbors(
        NeighborKind::Euclidean,
        k_max,
        nbr,
    ))
}

/// Right k-NN table for univariate covariates: the k-th successor in sorted
/// order, or the observation itself when fewer than `k` points lie above it.
pub fn build_right_nn_table(sample: &Sample, k_max: usize) -> Result<NeighborTable> {
    if sample.d() != 1 {
        return Err(Error::NotUnivariate { d: sample.d() });
    }
    if k_max == 0 {
        return Err(Error::OutOfDomain("k_max must be >= 1".into()));
    }
    let x = sample.x_flat();
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
    if let Some(w) = order.windows(2).find(|w| x[w[0]] == x[w[1]]) {
        return Err(Error::DuplicateX {
            value: x[w[0]],
            first: w[0].min(w[1]),
            second: w[0].max(w[1]),
        });
    }

    let mut nbr = vec![0; n * k_max];
    for (pos, &i) in order.iter().enumerate() {
        for k in 1..=k_max {
            nbr[i * k_max + k - 1] = order.get(pos + k).copied().unwrap_or(i);
        }
    }
    Ok(NeighborTable::from_neighbors(
        NeighborKind::Right,
        k_max,
        nbr,
    ))
}
