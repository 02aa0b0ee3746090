//! Nested repetition tree over canonical bar identities.
//!
//! The tree is built greedily: the consecutive repetition covering the most
//! bars is factored out, then the material before it, the repeated block
//! itself and the material after it are compressed recursively.

use serde::{Deserialize, Serialize};

use crate::similarity::DistanceMatrix;

/// For every bar, the index of the first bar with identical content.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CanonicalIds(pub Vec<usize>);

impl CanonicalIds {
    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// Checks `ids[i] <= i` and `ids[ids[i]] == ids[i]`.
    pub fn is_valid(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &id)| id <= i && self.0[id] == id)
    }
}

/// Identity is judged by an exact zero in the bar-level matrix.
pub fn canonical_ids(matrix: &DistanceMatrix) -> CanonicalIds {
    CanonicalIds(
        (0..matrix.len())
            .map(|i| (0..=i).find(|&j| matrix.get(j, i) == 0.0).unwrap_or(i))
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum RepetitionNode {
    Leaf(usize),
    Seq(Vec<RepetitionNode>),
    Run {
        prefix: Option<Box<RepetitionNode>>,
        body: Box<RepetitionNode>,
        count: usize,
        suffix: Option<Box<RepetitionNode>>,
    },
}

impl RepetitionNode {
    /// Number of leaves, i.e. bar boxes shown in the compressed view.
    pub fn leaf_count(&self) -> usize {
        match self {
            RepetitionNode::Leaf(_) => 1,
            RepetitionNode::Seq(children) => children.iter().map(Self::leaf_count).sum(),
            RepetitionNode::Run { prefix, body, suffix, .. } => {
                prefix.as_deref().map_or(0, Self::leaf_count)
                    + body.leaf_count()
                    + suffix.as_deref().map_or(0, Self::leaf_count)
            }
        }
    }

    /// Largest number of runs on any root-to-leaf path.
    pub fn run_depth(&self) -> usize {
        match self {
            RepetitionNode::Leaf(_) => 0,
            RepetitionNode::Seq(children) => children.iter().map(Self::run_depth).max().unwrap_or(0),
            RepetitionNode::Run { prefix, body, suffix, .. } => {
                let side = |n: &Option<Box<RepetitionNode>>| n.as_deref().map_or(0, Self::run_depth);
                (1 + body.run_depth()).max(side(prefix)).max(side(suffix))
            }
        }
    }

    /// True if every run repeats at least twice.
    pub fn counts_valid(&self) -> bool {
        match self {
            RepetitionNode::Leaf(_) => true,
            RepetitionNode::Seq(children) => children.iter().all(Self::counts_valid),
            RepetitionNode::Run { prefix, body, count, suffix } => {
                *count >= 2
                    && body.counts_valid()
                    && prefix.as_deref().map_or(true, Self::counts_valid)
                    && suffix.as_deref().map_or(true, Self::counts_valid)
            }
        }
    }
}

/// A block `s[start..start + len]` occurring `count` times back to back.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Run {
    pub start: usize,
    pub len: usize,
    pub count: usize,
}

impl Run {
    pub fn covered(&self) -> usize {
        self.len * self.count
    }

    /// Ordering used to pick the run: larger coverage, then earlier start,
    /// then longer block, then more repetitions.
    fn beats(&self, other: &Run) -> bool {
        (self.covered(), std::cmp::Reverse(self.start), self.len, self.count)
            > (other.covered(), std::cmp::Reverse(other.start), other.len, other.count)
    }
}

/// The run that the tree builder factors out first, if any repetition exists.
pub fn find_best_run<T: PartialEq>(s: &[T]) -> Option<Run> {
    let n = s.len();
    let mut best: Option<Run> = None;
    // matches[i] = number of consecutive positions j >= i with s[j] == s[j + len].
    let mut matches = vec![0usize; n];
    for len in 1..=n / 2 {
        for i in (0..n - len).rev() {
            matches[i] = if s[i] == s[i + len] { 1 + matches.get(i + 1).copied().unwrap_or(0) } else { 0 };
        }
        for start in 0..n - len {
            let count = 1 + matches[start] / len;
            if count < 2 {
                continue;
            }
            let run = Run { start, len, count };
            if best.map_or(true, |b| run.beats(&b)) {
                best = Some(run);
            }
        }
        // Entries past n - len - 1 are stale for the next length.
        for m in matches.iter_mut().skip(n - len - 1) {
            *m = 0;
        }
    }
    best
}

pub fn build_repetition_tree(ids: &[usize]) -> RepetitionNode {
    let Some(run) = find_best_run(ids) else {
        return match ids {
            [single] => RepetitionNode::Leaf(*single),
            _ => RepetitionNode::Seq(ids.iter().copied().map(RepetitionNode::Leaf).collect()),
        };
    };
    let end = run.start + run.covered();
    let part = |slice: &[usize]| (!slice.is_empty()).then(|| Box::new(build_repetition_tree(slice)));
    RepetitionNode::Run {
        prefix: part(&ids[..run.start]),
        body: Box::new(build_repetition_tree(&ids[run.start..run.start + run.len])),
        count: run.count,
        suffix: part(&ids[end..]),
    }
}

/// Flattens a tree back into the id sequence it encodes.
pub fn expand(tree: &RepetitionNode) -> Vec<usize> {
    let mut out = Vec::new();
    expand_into(tree, &mut out);
    out
}

fn expand_into(tree: &RepetitionNode, out: &mut Vec<usize>) {
    match tree {
        RepetitionNode::Leaf(id) => out.push(*id),
        RepetitionNode::Seq(children) => children.iter().for_each(|c| expand_into(c, out)),
        RepetitionNode::Run { prefix, body, count, suffix } => {
            if let Some(p) = prefix {
                expand_into(p, out);
            }
            let from = out.len();
            expand_into(body, out);
            let block = out[from..].to_vec();
            for _ in 1..*count {
                out.extend_from_slice(&block);
            }
            if let Some(s) = suffix {
                expand_into(s, out);
            }
        }
    }
}
