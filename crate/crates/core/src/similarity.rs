//! Pitch sequences, edit distance, Jaccard index and pairwise distance matrices.

use thiserror::Error;

use crate::model::Track;
use crate::segment::{Harmony, Segment};

/// Pitches of a segment's onset notes ordered by (start tick, pitch).
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct PitchSequence(pub Vec<u8>);

impl PitchSequence {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn pitch_sequence(segment: &Segment, track: &Track) -> PitchSequence {
    let mut notes: Vec<(u64, u8)> = segment
        .note_refs
        .iter()
        .filter_map(|&r| track.note(r))
        .filter(|n| n.is_onset())
        .map(|n| (n.start_tick, n.pitch))
        .collect();
    notes.sort_unstable();
    PitchSequence(notes.into_iter().map(|(_, p)| p).collect())
}

/// Unit-cost edit distance (insert, delete, substitute).
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (a, b) = if a.len() < b.len() { (b, a) } else { (a, b) };
    if b.is_empty() {
        return a.len();
    }
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, x) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag } else { 1 + diag.min(up).min(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}

/// Edit distance divided by the longer length; two empty sequences are identical.
pub fn normalized_distance(a: &PitchSequence, b: &PitchSequence) -> f64 {
    let longest = a.len().max(b.len());
    if longest == 0 {
        0.0
    } else {
        levenshtein(&a.0, &b.0) as f64 / longest as f64
    }
}

/// Ratio of intersection over union of pitch-class sets (1 when both are empty).
pub fn jaccard_similarity(a: &Harmony, b: &Harmony) -> f64 {
    let union = a.pitch_classes.union(b.pitch_classes).len();
    if union == 0 {
        1.0
    } else {
        a.pitch_classes.intersection(b.pitch_classes).len() as f64 / union as f64
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatrixError {
    #[error("NonSquareMatrix: row {row} has {len} entries, expected {n}")]
    NonSquareMatrix { row: usize, len: usize, n: usize },
    #[error("AsymmetricMatrix: entry ({i}, {j}) differs from ({j}, {i})")]
    AsymmetricMatrix { i: usize, j: usize },
    #[error("nonzero diagonal entry at {0}")]
    NonZeroDiagonal(usize),
    #[error("entry ({i}, {j}) = {value} outside [0, 1]")]
    OutOfRange { i: usize, j: usize, value: f64 },
    #[error("condensed matrix has {len} entries; {n} segments need {expected}")]
    CondensedLength { n: usize, len: usize, expected: usize },
}

/// Symmetric matrix of normalized distances with a zero diagonal.
///
/// Stored densely in row-major order; every constructor enforces the invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    values: Vec<f64>,
}

impl DistanceMatrix {
    /// Builds a matrix from a pairwise function evaluated on the upper triangle.
    ///
    /// Values are clamped to [0, 1].
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let d = f(i, j).clamp(0.0, 1.0);
                values[i * n + j] = d;
                values[j * n + i] = d;
            }
        }
        DistanceMatrix { n, values }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, MatrixError> {
        let n = rows.len();
        if let Some((row, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(MatrixError::NonSquareMatrix { row, len: r.len(), n });
        }
        for i in 0..n {
            if rows[i][i] != 0.0 {
                return Err(MatrixError::NonZeroDiagonal(i));
            }
            for j in 0..n {
                let v = rows[i][j];
                if !(0.0..=1.0).contains(&v) {
                    return Err(MatrixError::OutOfRange { i, j, value: v });
                }
                if v != rows[j][i] {
                    return Err(MatrixError::AsymmetricMatrix { i, j });
                }
            }
        }
        Ok(DistanceMatrix { n, values: rows.concat() })
    }

    /// Rebuilds a matrix from its upper triangle in row-major order.
    pub fn from_condensed(n: usize, condensed: &[f64]) -> Result<Self, MatrixError> {
        let expected = n * n.saturating_sub(1) / 2;
        if condensed.len() != expected {
            return Err(MatrixError::CondensedLength { n, len: condensed.len(), expected });
        }
        if let Some(k) = condensed.iter().position(|v| !(0.0..=1.0).contains(v)) {
            let (i, j) = condensed_index_to_pair(n, k);
            return Err(MatrixError::OutOfRange { i, j, value: condensed[k] });
        }
        let mut it = condensed.iter().copied();
        Ok(Self::from_fn(n, |_, _| it.next().unwrap_or(0.0)))
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    /// Upper triangle (i < j) in row-major order, length n(n-1)/2.
    pub fn condensed(&self) -> Vec<f64> {
        let n = self.n;
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| self.get(i, j)).collect()
    }
}

fn condensed_index_to_pair(n: usize, mut k: usize) -> (usize, usize) {
    for i in 0..n {
        let row = n - i - 1;
        if k < row {
            return (i, i + 1 + k);
        }
        k -= row;
    }
    (n, n)
}

/// Normalized edit distances between the pitch sequences of `segments`.
pub fn distance_matrix(segments: &[Segment], track: &Track) -> DistanceMatrix {
    let seqs: Vec<PitchSequence> = segments.iter().map(|s| pitch_sequence(s, track)).collect();
    DistanceMatrix::from_fn(seqs.len(), |i, j| normalized_distance(&seqs[i], &seqs[j]))
}

/// One minus the Jaccard index between every pair of harmonies.
pub fn harmony_distance_matrix(harmonies: &[Harmony]) -> DistanceMatrix {
    DistanceMatrix::from_fn(harmonies.len(), |i, j| 1.0 - jaccard_similarity(&harmonies[i], &harmonies[j]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Bar, Note, NoteRef};
    use crate::segment::{segment_bars, PitchClassSet};
    use proptest::prelude::*;

    /// Textbook recursion, exponential but obviously correct.
    fn naive_levenshtein(a: &[u8], b: &[u8]) -> usize {
        match (a.split_first(), b.split_first()) {
            (None, _) => b.len(),
            (_, None) => a.len(),
            (Some((x, ra)), Some((y, rb))) => {
                let sub = naive_levenshtein(ra, rb) + usize::from(x != y);
                sub.min(naive_levenshtein(ra, b) + 1).min(naive_levenshtein(a, rb) + 1)
            }
        }
    }

    fn harmony(pcs: &[u8]) -> Harmony {
        Harmony { start_tick: 0, pitch_classes: PitchClassSet::from_pitches(pcs.iter().copied()), note_refs: vec![] }
    }

    fn seq(p: &[u8]) -> PitchSequence {
        PitchSequence(p.to_vec())
    }

    #[test]
    fn levenshtein_examples() {
        assert_eq!(levenshtein(&[60, 64, 67], &[60, 64, 67]), 0);
        assert_eq!(levenshtein(&[60, 64, 67], &[60, 65, 67]), 1);
        assert_eq!(levenshtein::<u8>(&[], &[60, 62]), 2);
        assert_eq!(naive_levenshtein(&[60, 62, 64, 60], &[62, 64, 60, 62]), 2);
        assert_eq!(levenshtein(&[60, 62, 64, 60], &[62, 64, 60, 62]), 2);
    }

    #[test]
    fn normalized_distance_examples() {
        assert_eq!(normalized_distance(&seq(&[60, 64]), &seq(&[60, 64])), 0.0);
        assert_eq!(normalized_distance(&seq(&[]), &seq(&[])), 0.0);
        assert_eq!(normalized_distance(&seq(&[60]), &seq(&[62])), 1.0);
        assert_eq!(normalized_distance(&seq(&[]), &seq(&[62, 64])), 1.0);
    }

    #[test]
    fn pitch_sequence_sorts_and_skips_continuations() {
        let track = Track {
            name: "t".into(),
            tuning: None,
            bars: vec![
                Bar {
                    index: 0,
                    start_tick: 0,
                    length_ticks: 960,
                    time_sig_numerator: 2,
                    time_sig_denominator: 4,
                    notes: vec![Note::new(0, 480, 64), Note::new(0, 480, 60), Note::new(480, 480, 67)],
                },
                Bar {
                    index: 1,
                    start_tick: 960,
                    length_ticks: 960,
                    time_sig_numerator: 2,
                    time_sig_denominator: 4,
                    notes: vec![Note::new(960, 960, 67).tied()],
                },
                Bar {
                    index: 2,
                    start_tick: 1920,
                    length_ticks: 960,
                    time_sig_numerator: 2,
                    time_sig_denominator: 4,
                    notes: vec![],
                },
            ],
        };
        let segs = segment_bars(&track);
        assert_eq!(pitch_sequence(&segs[0], &track), seq(&[60, 64, 67]));
        assert_eq!(pitch_sequence(&segs[1], &track), seq(&[]));
        assert_eq!(pitch_sequence(&segs[2], &track), seq(&[]));
        assert_eq!(segs[0].note_refs[1], NoteRef { bar: 0, note: 1 });
    }

    #[test]
    fn jaccard_examples() {
        assert_eq!(jaccard_similarity(&harmony(&[0, 4, 7]), &harmony(&[0, 4, 7])), 1.0);
        assert_eq!(jaccard_similarity(&harmony(&[0, 4, 7]), &harmony(&[0, 3, 7])), 0.5);
        assert_eq!(jaccard_similarity(&harmony(&[0]), &harmony(&[1])), 0.0);
        assert_eq!(jaccard_similarity(&harmony(&[]), &harmony(&[])), 1.0);
    }

    fn bar_track(contents: &[&[u8]]) -> Track {
        Track {
            name: "t".into(),
            tuning: None,
            bars: contents
                .iter()
                .enumerate()
                .map(|(i, ps)| Bar {
                    index: i,
                    start_tick: i as u64 * 100,
                    length_ticks: 100,
                    time_sig_numerator: 4,
                    time_sig_denominator: 4,
                    notes: ps.iter().enumerate().map(|(k, &p)| Note::new(i as u64 * 100 + k as u64, 1, p)).collect(),
                })
                .collect(),
        }
    }

    #[test]
    fn distance_matrix_examples() {
        let one = bar_track(&[&[60]]);
        let m = distance_matrix(&segment_bars(&one), &one);
        assert_eq!((m.len(), m.get(0, 0)), (1, 0.0));

        let t = bar_track(&[&[60, 62], &[60, 62], &[70, 71]]);
        let m = distance_matrix(&segment_bars(&t), &t);
        assert_eq!(m.get(0, 1), 0.0);
        assert_eq!(m.get(0, 2), 1.0);
        assert_eq!(m.get(1, 2), 1.0);
        assert_eq!(m.condensed(), vec![0.0, 1.0, 1.0]);
    }

    #[test]
    fn distance_matrix_matches_pairwise_loop() {
        // Six bars of mixed content; the oracle recomputes every cell independently.
        let contents: [&[u8]; 6] = [&[60, 62, 64], &[60, 62], &[], &[64, 62, 60, 59], &[60, 62, 64], &[67]];
        let t = bar_track(&contents);
        let m = distance_matrix(&segment_bars(&t), &t);
        for i in 0..6 {
            for j in 0..6 {
                let longest = contents[i].len().max(contents[j].len());
                let expected = if longest == 0 {
                    0.0
                } else {
                    naive_levenshtein(contents[i], contents[j]) as f64 / longest as f64
                };
                assert_eq!(m.get(i, j), expected, "({i}, {j})");
            }
        }
    }

    #[test]
    fn harmony_matrix_matches_set_arithmetic() {
        let sets: [&[u8]; 5] = [&[0, 4, 7], &[0, 3, 7], &[2], &[0, 4, 7], &[1, 2, 3, 4, 5]];
        let hs: Vec<Harmony> = sets.iter().map(|s| harmony(s)).collect();
        let m = harmony_distance_matrix(&hs);
        for i in 0..5 {
            for j in 0..5 {
                let inter = sets[i].iter().filter(|x| sets[j].contains(x)).count();
                let union = sets[i].len() + sets[j].len() - inter;
                assert_eq!(m.get(i, j), 1.0 - inter as f64 / union as f64);
            }
        }
        assert_eq!(m.get(0, 3), 0.0);
    }

    #[test]
    fn constructors_reject_invalid_matrices() {
        assert!(matches!(
            DistanceMatrix::from_rows(&[vec![0.0, 0.5], vec![0.5]]),
            Err(MatrixError::NonSquareMatrix { row: 1, .. })
        ));
        assert!(matches!(
            DistanceMatrix::from_rows(&[vec![0.0, 0.5], vec![0.4, 0.0]]),
            Err(MatrixError::AsymmetricMatrix { .. })
        ));
        assert!(matches!(
            DistanceMatrix::from_rows(&[vec![0.1]]),
            Err(MatrixError::NonZeroDiagonal(0))
        ));
        assert!(matches!(
            DistanceMatrix::from_condensed(3, &[0.1, 0.2]),
            Err(MatrixError::CondensedLength { expected: 3, .. })
        ));
        assert!(matches!(
            DistanceMatrix::from_condensed(3, &[0.1, 0.2, 1.5]),
            Err(MatrixError::OutOfRange { i: 1, j: 2, .. })
        ));
        let m = DistanceMatrix::from_condensed(3, &[0.1, 0.2, 0.3]).unwrap();
        assert_eq!(m.get(2, 1), 0.3);
        assert_eq!(DistanceMatrix::from_rows(&[]).unwrap().condensed(), Vec::<f64>::new());
    }

    fn short_seq() -> impl Strategy<Value = Vec<u8>> {
        prop::collection::vec(50u8..=70, 0..=8)
    }

    proptest! {
        #[test]
        fn levenshtein_is_a_metric(a in short_seq(), b in short_seq(), c in short_seq()) {
            let ab = levenshtein(&a, &b);
            prop_assert_eq!(ab, levenshtein(&b, &a));
            prop_assert_eq!(ab == 0, a == b);
            prop_assert!(levenshtein(&a, &c) <= ab + levenshtein(&b, &c));
            prop_assert!(ab <= a.len().max(b.len()));
            prop_assert!(ab >= a.len().abs_diff(b.len()));
        }

        #[test]
        fn transposed_segments_never_match(a in prop::collection::vec(50u8..=70, 1..=8)) {
            let shifted: Vec<u8> = a.iter().map(|p| p + 1).collect();
            prop_assert!(normalized_distance(&PitchSequence(a.clone()), &PitchSequence(shifted)) > 0.0);
        }
    }
}
