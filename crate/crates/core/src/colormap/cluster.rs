//! Average-linkage (UPGMA) agglomerative clustering, dendrograms and cuts.
//!
//! Merge choice is fully deterministic: the globally closest pair is merged,
//! and pairs within [`TIE_TOLERANCE`] of the minimum are tied and resolved by
//! the smallest (min member of one cluster, min member of the other) pair.
//! The child holding the smaller original index goes left.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::similarity::DistanceMatrix;

/// Distances closer than this to the current minimum count as ties.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Heights may decrease by at most this much between consecutive merges.
pub const HEIGHT_TOLERANCE: f64 = 1e-9;

/// One merge in linkage-matrix form. Leaves are ids `0..n`; the k-th merge creates id `n + k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Merge {
    #[serde(rename = "leftId")]
    pub left: usize,
    #[serde(rename = "rightId")]
    pub right: usize,
    pub height: f64,
    #[serde(rename = "newId")]
    pub id: usize,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DendrogramError {
    #[error("{n} leaves need {expected} merges, found {found}")]
    MergeCount { n: usize, expected: usize, found: usize },
    #[error("merge {index} has id {id}, expected {expected}")]
    MergeId { index: usize, id: usize, expected: usize },
    #[error("merge {index} uses node {node} which does not exist or was already merged")]
    InvalidChild { index: usize, node: usize },
    #[error("merge {index} has invalid height {height}")]
    InvalidHeight { index: usize, height: f64 },
    #[error("leaf order does not match a left-to-right traversal")]
    LeafOrder,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    n: usize,
    merges: Vec<Merge>,
    leaf_order: Vec<usize>,
}

impl Dendrogram {
    /// Validates a merge list and derives its leaf order.
    pub fn from_merges(n: usize, merges: Vec<Merge>) -> Result<Self, DendrogramError> {
        let expected = n.saturating_sub(1);
        if merges.len() != expected {
            return Err(DendrogramError::MergeCount { n, expected, found: merges.len() });
        }
        let mut used = vec![false; n + merges.len()];
        let mut last_height = 0.0f64;
        for (index, m) in merges.iter().enumerate() {
            if m.id != n + index {
                return Err(DendrogramError::MergeId { index, id: m.id, expected: n + index });
            }
            for node in [m.left, m.right] {
                if node >= n + index || used[node] || m.left == m.right {
                    return Err(DendrogramError::InvalidChild { index, node });
                }
            }
            used[m.left] = true;
            used[m.right] = true;
            if !(m.height >= 0.0) || m.height.is_infinite() || m.height < last_height - HEIGHT_TOLERANCE {
                return Err(DendrogramError::InvalidHeight { index, height: m.height });
            }
            last_height = last_height.max(m.height);
        }
        let mut d = Dendrogram { n, merges, leaf_order: Vec::new() };
        d.leaf_order = d.leaves_under(d.root());
        Ok(d)
    }

    pub fn leaf_count(&self) -> usize {
        self.n
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    /// Leaves in left-to-right order.
    pub fn leaf_order(&self) -> &[usize] {
        &self.leaf_order
    }

    /// Root node id, or 0 for an empty tree.
    pub fn root(&self) -> usize {
        (self.n + self.merges.len()).saturating_sub(1)
    }

    fn is_leaf(&self, node: usize) -> bool {
        node < self.n
    }

    pub fn height(&self, node: usize) -> f64 {
        if self.is_leaf(node) {
            0.0
        } else {
            self.merges[node - self.n].height
        }
    }

    fn children(&self, node: usize) -> Option<(usize, usize)> {
        (!self.is_leaf(node)).then(|| {
            let m = &self.merges[node - self.n];
            (m.left, m.right)
        })
    }

    fn leaves_under(&self, node: usize) -> Vec<usize> {
        if self.n == 0 {
            return Vec::new();
        }
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(v) = stack.pop() {
            match self.children(v) {
                Some((l, r)) => {
                    stack.push(r);
                    stack.push(l);
                }
                None => out.push(v),
            }
        }
        out
    }

    /// Position of every leaf within [`Dendrogram::leaf_order`].
    pub fn leaf_positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.n];
        for (p, &leaf) in self.leaf_order.iter().enumerate() {
            pos[leaf] = p;
        }
        pos
    }
}

/// Average-linkage clustering of all segments in `matrix`.
pub fn cluster(matrix: &DistanceMatrix) -> Dendrogram {
    let n = matrix.len();
    let mut work = Working::new(matrix);
    let mut merges = Vec::with_capacity(n.saturating_sub(1));

    for step in 0..n.saturating_sub(1) {
        let (a, b) = work.closest_pair();
        let height = work.dist(a, b);
        merges.push(Merge { left: work.node[a], right: work.node[b], height, id: n + step });
        work.merge(a, b, n + step);
    }
    Dendrogram::from_merges(n, merges).expect("agglomeration yields a valid merge list")
}

/// Mutable clustering state. Each active cluster lives in the slot of its
/// smallest member, so slot order equals tie-break order.
struct Working {
    n: usize,
    dist: Vec<f64>,
    active: Vec<usize>,
    size: Vec<f64>,
    node: Vec<usize>,
    row_min: Vec<f64>,
    row_arg: Vec<usize>,
}

impl Working {
    fn new(m: &DistanceMatrix) -> Self {
        let n = m.len();
        let mut w = Working {
            n,
            dist: m.condensed(),
            active: (0..n).collect(),
            size: vec![1.0; n],
            node: (0..n).collect(),
            row_min: vec![f64::INFINITY; n],
            row_arg: vec![usize::MAX; n],
        };
        for i in 0..n {
            w.refresh_row(i);
        }
        w
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        i * (2 * self.n - i - 1) / 2 + (j - i - 1)
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[self.idx(i, j)]
    }

    fn refresh_row(&mut self, i: usize) {
        let mut best = (f64::INFINITY, usize::MAX);
        for &j in &self.active {
            if j != i {
                let d = self.dist(i, j);
                if d < best.0 {
                    best = (d, j);
                }
            }
        }
        (self.row_min[i], self.row_arg[i]) = best;
    }

    fn closest_pair(&self) -> (usize, usize) {
        let global = self.active.iter().map(|&i| self.row_min[i]).fold(f64::INFINITY, f64::min);
        let cutoff = global + TIE_TOLERANCE;
        let a = *self
            .active
            .iter()
            .find(|&&i| self.row_min[i] <= cutoff)
            .expect("at least two active clusters");
        let b = *self
            .active
            .iter()
            .find(|&&j| j != a && self.dist(a, j) <= cutoff)
            .expect("row minimum is attained");
        (a, b)
    }

    fn merge(&mut self, a: usize, b: usize, id: usize) {
        let (sa, sb) = (self.size[a], self.size[b]);
        self.active.retain(|&k| k != b);
        for pos in 0..self.active.len() {
            let k = self.active[pos];
            if k == a {
                continue;
            }
            let merged = (sa * self.dist(k, a) + sb * self.dist(k, b)) / (sa + sb);
            let ix = self.idx(k, a);
            self.dist[ix] = merged;
        }
        self.size[a] = sa + sb;
        self.node[a] = id;

        for pos in 0..self.active.len() {
            let k = self.active[pos];
            if k == a {
                continue;
            }
            if self.row_arg[k] == a || self.row_arg[k] == b {
                self.refresh_row(k);
            } else {
                let d = self.dist(k, a);
                if d < self.row_min[k] {
                    self.row_min[k] = d;
                    self.row_arg[k] = a;
                }
            }
        }
        self.refresh_row(a);
    }
}

/// Clusters from cutting `dendrogram` at `threshold`: the maximal subtrees
/// whose merge height is at most `threshold`. Clusters are listed in leaf
/// order and each cluster's members follow the leaf order too.
pub fn cut(dendrogram: &Dendrogram, threshold: f64) -> Vec<Vec<usize>> {
    if dendrogram.leaf_count() == 0 {
        return Vec::new();
    }
    let mut clusters = Vec::new();
    let mut stack = vec![dendrogram.root()];
    while let Some(v) = stack.pop() {
        match dendrogram.children(v) {
            Some((l, r)) if dendrogram.height(v) > threshold => {
                stack.push(r);
                stack.push(l);
            }
            _ => clusters.push(dendrogram.leaves_under(v)),
        }
    }
    clusters
}
