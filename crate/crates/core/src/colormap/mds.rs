//! One-dimensional classical (Torgerson) multidimensional scaling.
//!
//! Segments with identical distance rows are folded into one weighted point
//! before the eigendecomposition. Music repeats a lot, so this shrinks the
//! eigenproblem considerably and makes duplicates land on exactly the same
//! position.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::similarity::DistanceMatrix;

/// Eigenvalues at or below this are treated as zero.
pub const EIGENVALUE_TOLERANCE: f64 = 1e-10;

/// Principal coordinate of classical MDS before normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    /// Largest eigenvalue of the double-centered matrix.
    pub eigenvalue: f64,
    /// Unit eigenvector scaled by the square root of `eigenvalue`.
    pub coordinates: Vec<f64>,
}

/// Groups indices whose matrix rows are bitwise identical.
///
/// Returns, for each index, the group it belongs to, and the representative
/// (first member) of each group.
fn duplicate_groups(m: &DistanceMatrix) -> (Vec<usize>, Vec<usize>) {
    let n = m.len();
    let mut group_of = vec![usize::MAX; n];
    let mut reps = Vec::new();
    for i in 0..n {
        if group_of[i] != usize::MAX {
            continue;
        }
        group_of[i] = reps.len();
        let row_i = m.row(i);
        for j in i + 1..n {
            // Identical rows imply a zero mutual distance, which is cheap to check first.
            if group_of[j] == usize::MAX && m.get(i, j) == 0.0 && m.row(j) == row_i {
                group_of[j] = reps.len();
            }
        }
        reps.push(i);
    }
    (group_of, reps)
}

/// Classical MDS onto the principal axis.
///
/// Returns `None` when the double-centered matrix has no positive eigenvalue
/// above [`EIGENVALUE_TOLERANCE`] (including n < 2).
pub fn mds_embedding(m: &DistanceMatrix) -> Option<Embedding> {
    let n = m.len();
    if n < 2 {
        return None;
    }
    let (group_of, reps) = duplicate_groups(m);
    let k = reps.len();
    let mut weight = vec![0.0f64; k];
    for &g in &group_of {
        weight[g] += 1.0;
    }
    let nf = n as f64;

    // Squared distances between representatives; row means are over all n points.
    let sq = |a: usize, b: usize| {
        let d = m.get(reps[a], reps[b]);
        d * d
    };
    let row_mean: Vec<f64> = (0..k).map(|a| (0..k).map(|b| weight[b] * sq(a, b)).sum::<f64>() / nf).collect();
    let grand_mean = (0..k).map(|a| weight[a] * row_mean[a]).sum::<f64>() / nf;

    // B restricted to groups, symmetrized with the group weights:
    // S = W^(1/2) B~ W^(1/2) shares the nonzero spectrum of the full B.
    let sqrt_w: Vec<f64> = weight.iter().map(|w| w.sqrt()).collect();
    let s = DMatrix::from_fn(k, k, |a, b| {
        let centered = -0.5 * (sq(a, b) - row_mean[a] - row_mean[b] + grand_mean);
        sqrt_w[a] * centered * sqrt_w[b]
    });
    let eig = SymmetricEigen::new(s);
    let (top, &lambda) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))?;
    if !(lambda > EIGENVALUE_TOLERANCE) {
        return None;
    }
    let y = eig.eigenvectors.column(top);
    let scale = lambda.sqrt();
    let per_group: Vec<f64> = (0..k).map(|a| y[a] / sqrt_w[a] * scale).collect();
    Some(Embedding { eigenvalue: lambda, coordinates: group_of.iter().map(|&g| per_group[g]).collect() })
}

/// Positions in [0, 1] from min-max normalizing the principal coordinate.
///
/// Degenerate inputs (a single segment, all distances zero, no positive
/// eigenvalue) place every segment at 0.5. The sign is chosen so that the
/// first segment's position does not exceed the last one's.
pub fn mds_1d(m: &DistanceMatrix) -> Vec<f64> {
    let n = m.len();
    let Some(embedding) = mds_embedding(m) else {
        return vec![0.5; n];
    };
    let x = embedding.coordinates;
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    if !(range > EIGENVALUE_TOLERANCE) {
        return vec![0.5; n];
    }
    let mut positions: Vec<f64> = x.iter().map(|v| (v - lo) / range).collect();
    if positions[0] > positions[n - 1] {
        for p in &mut positions {
            *p = 1.0 - *p;
        }
    }
    positions
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: &[&[f64]]) -> DistanceMatrix {
        DistanceMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn two_points_span_the_range() {
        let m = matrix(&[&[0.0, 0.8], &[0.8, 0.0]]);
        assert_eq!(mds_1d(&m), vec![0.0, 1.0]);
    }

    #[test]
    fn colinear_three_points() {
        let m = matrix(&[&[0.0, 0.5, 1.0], &[0.5, 0.0, 0.5], &[1.0, 0.5, 0.0]]);
        let p = mds_1d(&m);
        for (got, want) in p.iter().zip([0.0, 0.5, 1.0]) {
            assert!((got - want).abs() < 1e-9, "{p:?}");
        }
        // Points at -0.5, 0, 0.5: B has eigenvalue 0.5.
        let e = mds_embedding(&m).unwrap();
        assert!((e.eigenvalue - 0.5).abs() < 1e-12);
    }

    #[test]
    fn identical_segments_share_a_position() {
        let m = matrix(&[
            &[0.0, 0.3, 0.0, 0.9],
            &[0.3, 0.0, 0.3, 0.7],
            &[0.0, 0.3, 0.0, 0.9],
            &[0.9, 0.7, 0.9, 0.0],
        ]);
        let p = mds_1d(&m);
        assert_eq!(p[0], p[2]);
        assert!(p[0] <= p[3]);
    }

    #[test]
    fn degenerate_inputs_sit_in_the_middle() {
        assert_eq!(mds_1d(&matrix(&[&[0.0]])), vec![0.5]);
        assert_eq!(mds_1d(&matrix(&[&[0.0, 0.0], &[0.0, 0.0]])), vec![0.5, 0.5]);
        assert!(mds_1d(&matrix(&[])).is_empty());
    }

    #[test]
    fn duplicate_folding_matches_the_unfolded_eigenproblem() {
        // Same configuration with and without a repeated point: compare
        // against a direct eigendecomposition of the full n x n matrix.
        let m = matrix(&[
            &[0.0, 0.2, 0.7, 0.2, 1.0],
            &[0.2, 0.0, 0.5, 0.0, 0.8],
            &[0.7, 0.5, 0.0, 0.5, 0.4],
            &[0.2, 0.0, 0.5, 0.0, 0.8],
            &[1.0, 0.8, 0.4, 0.8, 0.0],
        ]);
        let n = 5;
        let d2 = DMatrix::from_fn(n, n, |i, j| m.get(i, j).powi(2));
        let j = DMatrix::<f64>::identity(n, n) - DMatrix::from_element(n, n, 1.0 / n as f64);
        let b = -0.5 * &j * d2 * &j;
        let eig = SymmetricEigen::new(b);
        let top = eig.eigenvalues.imax();
        let folded = mds_embedding(&m).unwrap();
        assert!((folded.eigenvalue - eig.eigenvalues[top]).abs() < 1e-12);
        let v = eig.eigenvectors.column(top) * eig.eigenvalues[top].sqrt();
        let sign = if v[0] * folded.coordinates[0] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            assert!((sign * v[i] - folded.coordinates[i]).abs() < 1e-9);
        }
    }
}
