//! Static kd-tree for exact k-nearest-neighbor queries over a [`Sample`].
//!
//! Candidates are ordered lexicographically by (squared distance, index), so
//! results are deterministic and identical to a sorted brute-force scan.

use std::cmp::Ordering;

use crate::sample::Sample;

const LEAF_SIZE: usize = 12;
const NONE: u32 = u32::MAX;

#[derive(Debug, Clone)]
struct Node {
    start: u32,
    end: u32,
    axis: u32,
    split: f64,
    left: u32,
    right: u32,
}

pub(crate) struct KdTree<'a> {
    sample: &'a Sample,
    perm: Vec<usize>,
    nodes: Vec<Node>,
}

/// Squared Euclidean distance. Every k-NN path must use this so tie
/// detection is bit-identical across backends.
#[inline]
pub(crate) fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(u, v)| {
            let t = u - v;
            t * t
        })
        .sum()
}

#[inline]
pub(crate) fn cmp_candidate(a: (f64, usize), b: (f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// Best-k buffer kept sorted ascending; `k` is small, so insertion is linear.
pub(crate) struct BestK {
    k: usize,
    items: Vec<(f64, usize)>,
}

impl BestK {
    pub(crate) fn new(k: usize) -> Self {
        Self {
            k,
            items: Vec::with_capacity(k + 1),
        }
    }

    fn full(&self) -> bool {
        self.items.len() == self.k
    }

    fn worst(&self) -> f64 {
        self.items.last().map_or(f64::INFINITY, |c| c.0)
    }

    pub(crate) fn offer(&mut self, cand: (f64, usize)) {
        if self.full() && cmp_candidate(cand, *self.items.last().unwrap()).is_ge() {
            return;
        }
        let pos = self
            .items
            .partition_point(|c| cmp_candidate(*c, cand).is_lt());
        self.items.insert(pos, cand);
        self.items.truncate(self.k);
    }

    pub(crate) fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.items.iter().map(|c| c.1)
    }
}

impl<'a> KdTree<'a> {
    pub(crate) fn build(sample: &'a Sample) -> Self {
        let n = sample.n();
        let mut tree = Self {
            sample,
            perm: (0..n).collect(),
            nodes: Vec::with_capacity(2 * n / LEAF_SIZE + 1),
        };
        tree.build_node(0, n);
        tree
    }

    fn build_node(&mut self, start: usize, end: usize) -> u32 {
        let id = self.nodes.len() as u32;
        self.nodes.push(Node {
            start: start as u32,
            end: end as u32,
            axis: 0,
            split: 0.0,
            left: NONE,
            right: NONE,
        });
        if end - start <= LEAF_SIZE {
            return id;
        }

        let axis = self.widest_axis(start, end);
        let sample = self.sample;
        let mid = start + (end - start) / 2;
        self.perm[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            sample.point(a)[axis]
                .total_cmp(&sample.point(b)[axis])
                .then(a.cmp(&b))
        });
        let split = sample.point(self.perm[mid])[axis];

        let left = self.build_node(start, mid);
        let right = self.build_node(mid, end);
        let node = &mut self.nodes[id as usize];
        node.axis = axis as u32;
        node.split = split;
        node.left = left;
        node.right = right;
        id
    }

    fn widest_axis(&self, start: usize, end: usize) -> usize {
        let d = self.sample.d();
        let mut best = (0, f64::NEG_INFINITY);
        for axis in 0..d {
            let (lo, hi) = self.perm[start..end].iter().fold(
                (f64::INFINITY, f64::NEG_INFINITY),
                |(lo, hi), &i| {
                    let v = self.sample.point(i)[axis];
                    (lo.min(v), hi.max(v))
                },
            );
            if hi - lo > best.1 {
                best = (axis, hi - lo);
            }
        }
        best.0
    }

    /// The `k` nearest neighbors of observation `query`, excluding itself,
    /// nearest first.
    pub(crate) fn nearest_excluding(&self, query: usize, k: usize) -> Vec<usize> {
        let mut best = BestK::new(k);
        self.search(0, query, self.sample.point(query), &mut best);
        best.indices().collect()
    }

    fn search(&self, node_id: u32, query: usize, q: &[f64], best: &mut BestK) {
        let node = &self.nodes[node_id as usize];
        if node.left == NONE {
            for &j in &self.perm[node.start as usize..node.end as usize] {
                if j != query {
                    best.offer((dist_sq(q, self.sample.point(j)), j));
                }
            }
            return;
        }

        // Left holds coordinates <= split, right holds coordinates >= split.
        let diff = q[node.axis as usize] - node.split;
        let (near, far) = if diff <= 0.0 {
            (node.left, node.right)
        } else {
            (node.right, node.left)
        };
        self.search(near, query, q, best);
        // Equal bounds must still be visited: a tied candidate with a
        // smaller index could live on the far side.
        if !best.full() || diff * diff <= best.worst() {
            self.search(far, query, q, best);
        }
    }
}
