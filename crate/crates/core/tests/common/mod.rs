//! Slow, obviously-correct reference implementations and random input
//! generators shared by the integration and acceptance tests.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use rand::Rng;
use scorelens::colormap::Merge;
use scorelens::similarity::DistanceMatrix;

/// Top-down recursion over the three edit operations, memoized on suffix
/// lengths so length-12 inputs stay fast.
pub fn levenshtein(a: &[u8], b: &[u8]) -> usize {
    fn go(a: &[u8], b: &[u8], memo: &mut HashMap<(usize, usize), usize>) -> usize {
        if let Some(&v) = memo.get(&(a.len(), b.len())) {
            return v;
        }
        let v = match (a.split_first(), b.split_first()) {
            (None, _) => b.len(),
            (_, None) => a.len(),
            (Some((x, ra)), Some((y, rb))) => {
                let substitute = go(ra, rb, memo) + usize::from(x != y);
                substitute.min(go(ra, b, memo) + 1).min(go(a, rb, memo) + 1)
            }
        };
        memo.insert((a.len(), b.len()), v);
        v
    }
    go(a, b, &mut HashMap::new())
}

/// |A ∩ B| / |A ∪ B| over pitch classes, 1 for two empty sets.
pub fn jaccard(a: &[u8], b: &[u8]) -> f64 {
    let a: BTreeSet<u8> = a.iter().map(|p| p % 12).collect();
    let b: BTreeSet<u8> = b.iter().map(|p| p % 12).collect();
    let union = a.union(&b).count();
    if union == 0 {
        1.0
    } else {
        a.intersection(&b).count() as f64 / union as f64
    }
}

/// Average linkage recomputed from the original matrix at every step.
///
/// Ties within `1e-12` of the minimum go to the lexicographically smallest
/// (min member, min member) pair; the cluster with the smaller minimum goes left.
pub fn upgma(m: &DistanceMatrix) -> Vec<Merge> {
    let n = m.len();
    let mut clusters: Vec<(usize, Vec<usize>)> = (0..n).map(|i| (i, vec![i])).collect();
    let mut merges = Vec::new();
    while clusters.len() > 1 {
        let linkage = |a: &[usize], b: &[usize]| {
            let total: f64 = a.iter().flat_map(|&i| b.iter().map(move |&j| (i, j))).map(|(i, j)| m.get(i, j)).sum();
            total / (a.len() * b.len()) as f64
        };
        let mut pairs = Vec::new();
        for x in 0..clusters.len() {
            for y in x + 1..clusters.len() {
                pairs.push((linkage(&clusters[x].1, &clusters[y].1), x, y));
            }
        }
        let best = pairs.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let key = |&(_, x, y): &(f64, usize, usize)| {
            let (mx, my) = (min_member(&clusters[x].1), min_member(&clusters[y].1));
            (mx.min(my), mx.max(my))
        };
        let &(height, x, y) = pairs.iter().filter(|p| p.0 <= best + 1e-12).min_by_key(|p| key(p)).unwrap();
        let (mut left, mut right) = (clusters[x].clone(), clusters[y].clone());
        if min_member(&right.1) < min_member(&left.1) {
            std::mem::swap(&mut left, &mut right);
        }
        let id = n + merges.len();
        merges.push(Merge { left: left.0, right: right.0, height, id });
        let mut members = left.1;
        members.extend(right.1);
        clusters.retain(|c| c.0 != left.0 && c.0 != right.0);
        clusters.push((id, members));
    }
    merges
}

fn min_member(members: &[usize]) -> usize {
    *members.iter().min().unwrap()
}

/// Largest k·L over every (start, length) with k ≥ 2 back-to-back copies.
pub fn best_cover(s: &[usize]) -> usize {
    let n = s.len();
    let mut best = 0;
    for p in 0..n {
        for l in 1..=n {
            let mut k = 1;
            while p + (k + 1) * l <= n && s[p..p + l] == s[p + k * l..p + (k + 1) * l] {
                k += 1;
            }
            if k >= 2 {
                best = best.max(k * l);
            }
        }
    }
    best
}

/// Sum of squared residuals after the best non-negative scaling of the
/// one-dimensional distances |p_i − p_j| onto the matrix.
pub fn stress(m: &DistanceMatrix, positions: &[f64]) -> f64 {
    let n = m.len();
    let pairs: Vec<(f64, f64)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| ((positions[i] - positions[j]).abs(), m.get(i, j)))
        .collect();
    let num: f64 = pairs.iter().map(|(e, d)| e * d).sum();
    let den: f64 = pairs.iter().map(|(e, _)| e * e).sum();
    let scale = if den > 0.0 { (num / den).max(0.0) } else { 0.0 };
    pairs.iter().map(|(e, d)| (scale * e - d).powi(2)).sum()
}

/// Normalized edit distances between random pitch sequences, some repeated,
/// so matrices contain duplicate rows and exact zeros.
pub fn random_sequence_matrix<R: Rng>(rng: &mut R, n: usize) -> (DistanceMatrix, Vec<Vec<u8>>) {
    let mut seqs: Vec<Vec<u8>> = Vec::with_capacity(n);
    for _ in 0..n {
        if !seqs.is_empty() && rng.gen_bool(0.3) {
            let copy = seqs[rng.gen_range(0..seqs.len())].clone();
            seqs.push(copy);
        } else {
            let len = rng.gen_range(1..=6);
            seqs.push((0..len).map(|_| rng.gen_range(60..66)).collect());
        }
    }
    let m = DistanceMatrix::from_fn(n, |i, j| {
        let longest = seqs[i].len().max(seqs[j].len());
        if longest == 0 {
            0.0
        } else {
            levenshtein(&seqs[i], &seqs[j]) as f64 / longest as f64
        }
    });
    (m, seqs)
}

/// Symmetric matrix with entries on a coarse grid, which makes ties common.
pub fn random_grid_matrix<R: Rng>(rng: &mut R, n: usize, steps: u32) -> DistanceMatrix {
    DistanceMatrix::from_fn(n, |_, _| f64::from(rng.gen_range(0..=steps)) / f64::from(steps))
}
