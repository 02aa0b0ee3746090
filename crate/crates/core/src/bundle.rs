//! Versioned analysis document shared with renderers and the viewer.
//!
//! The wire format is canonical JSON: object keys sorted, no whitespace,
//! reals rounded to 9 significant digits. Rounding happens when the bundle
//! is built, so a built bundle survives a serialize/deserialize round trip
//! unchanged. Colors are not stored; consumers derive them from the MDS
//! positions, dendrograms and distances with whatever scale they choose.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::colormap::{
    cluster, map_clusters, map_direct, map_identical, mds_1d, ColorAssignment, ColorError, ColorScale, Dendrogram,
    DendrogramError, Merge,
};
use crate::compression::{build_repetition_tree, canonical_ids, expand, CanonicalIds, RepetitionNode};
use crate::model::{validate, Score, Track};
use crate::segment::{extract_harmonies, segment_bars, segment_sections, PitchClassSet};
use crate::similarity::{distance_matrix, harmony_distance_matrix, DistanceMatrix, MatrixError};

pub const FORMAT_VERSION: u64 = 1;

/// Above this many bars the quadratic matrices get large.
pub const LARGE_PIECE_BARS: usize = 2000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BundleError {
    #[error("UnsupportedVersion: formatVersion {0} is not supported (expected {FORMAT_VERSION})")]
    UnsupportedVersion(String),
    #[error("SchemaViolation at '{path}': {message}")]
    SchemaViolation { path: String, message: String },
    #[error("TrackOutOfRange: track {index} requested but the score has {count}")]
    TrackOutOfRange { index: usize, count: usize },
    #[error("InvalidScore: {0}")]
    InvalidScore(String),
}

fn violation(path: impl Into<String>, message: impl ToString) -> BundleError {
    BundleError::SchemaViolation { path: path.into(), message: message.to_string() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct AnalysisBundle {
    pub format_version: u64,
    pub score: Score,
    pub analysis: TrackAnalysis,
}

/// Analysis of the one track the bundle was built for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TrackAnalysis {
    pub track_index: usize,
    pub harmonies: Vec<HarmonyRecord>,
    pub levels: Levels,
    pub canonical_ids: CanonicalIds,
    pub repetition_tree: RepetitionNode,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct HarmonyRecord {
    pub start_tick: u64,
    pub pitch_classes: PitchClassSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Levels {
    pub section: LevelAnalysis,
    pub bar: LevelAnalysis,
    pub harmony: LevelAnalysis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct LevelAnalysis {
    pub count: usize,
    /// Upper triangle of the distance matrix, row-major.
    pub distances: Vec<f64>,
    pub mds_positions: Vec<f64>,
    pub dendrogram: DendrogramRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct DendrogramRecord {
    pub merges: Vec<Merge>,
    pub leaf_order: Vec<usize>,
}

/// How a consumer wants a level colored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ColorRequest {
    Mds,
    Cluster { threshold: f64 },
    Direct(usize),
    Identical(usize),
}

/// Rounds to 9 significant digits.
pub fn round_real(v: f64) -> f64 {
    format!("{v:.8e}").parse().unwrap_or(v)
}

impl LevelAnalysis {
    fn build(matrix: &DistanceMatrix) -> Self {
        let rounded = DistanceMatrix::from_condensed(
            matrix.len(),
            &matrix.condensed().into_iter().map(round_real).collect::<Vec<_>>(),
        )
        .expect("rounding keeps distances in [0, 1]");
        let dendrogram = cluster(&rounded);
        LevelAnalysis {
            count: rounded.len(),
            distances: rounded.condensed(),
            mds_positions: mds_1d(&rounded).into_iter().map(round_real).collect(),
            dendrogram: DendrogramRecord {
                merges: dendrogram
                    .merges()
                    .iter()
                    .map(|m| Merge { height: round_real(m.height), ..*m })
                    .collect(),
                leaf_order: dendrogram.leaf_order().to_vec(),
            },
        }
    }

    pub fn matrix(&self) -> Result<DistanceMatrix, MatrixError> {
        DistanceMatrix::from_condensed(self.count, &self.distances)
    }

    pub fn dendrogram(&self) -> Result<Dendrogram, DendrogramError> {
        let d = Dendrogram::from_merges(self.count, self.dendrogram.merges.clone())?;
        if d.leaf_order() != self.dendrogram.leaf_order.as_slice() {
            return Err(DendrogramError::LeafOrder);
        }
        Ok(d)
    }

    /// Colors for every segment of this level.
    pub fn colors(&self, request: ColorRequest, scale: &ColorScale) -> Result<ColorAssignment, ColorError> {
        match request {
            ColorRequest::Mds => Ok(ColorAssignment::from_mds_positions(&self.mds_positions, scale)),
            ColorRequest::Cluster { threshold } => {
                let d = self.dendrogram().expect("bundle dendrograms are validated");
                Ok(map_clusters(&d, threshold, scale))
            }
            ColorRequest::Direct(i) => map_direct(&self.matrix().expect("bundle matrices are validated"), i, scale),
            ColorRequest::Identical(i) => {
                map_identical(&self.matrix().expect("bundle matrices are validated"), i, scale)
            }
        }
    }

    fn check(&self, path: &str) -> Result<(), BundleError> {
        let matrix = self.matrix().map_err(|e| violation(format!("{path}.distances"), e))?;
        if self.mds_positions.len() != self.count {
            return Err(violation(
                format!("{path}.mdsPositions"),
                format!("{} positions for {} segments", self.mds_positions.len(), self.count),
            ));
        }
        if let Some(k) = self.mds_positions.iter().position(|p| !(0.0..=1.0).contains(p)) {
            return Err(violation(format!("{path}.mdsPositions[{k}]"), "position outside [0, 1]"));
        }
        self.dendrogram().map_err(|e| violation(format!("{path}.dendrogram"), e))?;
        drop(matrix);
        Ok(())
    }
}

impl AnalysisBundle {
    pub fn track(&self) -> &Track {
        &self.score.tracks[self.analysis.track_index]
    }

    /// Structural checks beyond what the schema types enforce.
    pub fn check(&self) -> Result<(), BundleError> {
        if self.format_version != FORMAT_VERSION {
            return Err(BundleError::UnsupportedVersion(self.format_version.to_string()));
        }
        if let Some(v) = validate(&self.score).into_iter().next() {
            return Err(violation(format!("score.{}", v.location), v.message));
        }
        let a = &self.analysis;
        let Some(track) = self.score.tracks.get(a.track_index) else {
            return Err(violation("analysis.trackIndex", "no such track"));
        };
        let expected_counts = [
            ("section", &a.levels.section, segment_sections(&self.score, track).len()),
            ("bar", &a.levels.bar, track.bars.len()),
            ("harmony", &a.levels.harmony, extract_harmonies(track).len()),
        ];
        for (name, level, expected) in expected_counts {
            let path = format!("analysis.levels.{name}");
            if level.count != expected {
                return Err(violation(
                    format!("{path}.count"),
                    format!("{} segments, the track has {expected}", level.count),
                ));
            }
            level.check(&path)?;
        }
        let harmonies = harmony_records(track);
        if a.harmonies != harmonies {
            return Err(violation("analysis.harmonies", "does not match the track's onsets"));
        }
        let bar_matrix = a.levels.bar.matrix().map_err(|e| violation("analysis.levels.bar.distances", e))?;
        if a.canonical_ids != canonical_ids(&bar_matrix) {
            return Err(violation("analysis.canonicalIds", "inconsistent with the bar distances"));
        }
        if expand(&a.repetition_tree) != a.canonical_ids.0 || !a.repetition_tree.counts_valid() {
            return Err(violation("analysis.repetitionTree", "does not expand to canonicalIds"));
        }
        Ok(())
    }
}

fn harmony_records(track: &Track) -> Vec<HarmonyRecord> {
    extract_harmonies(track)
        .into_iter()
        .map(|h| HarmonyRecord { start_tick: h.start_tick, pitch_classes: h.pitch_classes })
        .collect()
}

/// Runs the full analysis pipeline on one track.
pub fn build_bundle(score: &Score, track_index: usize) -> Result<AnalysisBundle, BundleError> {
    let track = score
        .tracks
        .get(track_index)
        .ok_or(BundleError::TrackOutOfRange { index: track_index, count: score.tracks.len() })?;
    let violations = validate(score);
    if !violations.is_empty() {
        let text: Vec<String> = violations.iter().map(ToString::to_string).collect();
        return Err(BundleError::InvalidScore(text.join("; ")));
    }
    if track.bars.len() > LARGE_PIECE_BARS {
        log::warn!(
            "track has {} bars; distance matrices grow quadratically beyond {LARGE_PIECE_BARS}",
            track.bars.len()
        );
    }

    let bar_level = LevelAnalysis::build(&distance_matrix(&segment_bars(track), track));
    let section_level = LevelAnalysis::build(&distance_matrix(&segment_sections(score, track), track));
    let harmonies = extract_harmonies(track);
    let harmony_level = LevelAnalysis::build(&harmony_distance_matrix(&harmonies));

    let ids = canonical_ids(&bar_level.matrix().expect("freshly built"));
    let repetition_tree = build_repetition_tree(&ids.0);
    Ok(AnalysisBundle {
        format_version: FORMAT_VERSION,
        score: score.clone(),
        analysis: TrackAnalysis {
            track_index,
            harmonies: harmony_records(track),
            levels: Levels { section: section_level, bar: bar_level, harmony: harmony_level },
            canonical_ids: ids,
            repetition_tree,
        },
    })
}

/// Canonical JSON bytes.
pub fn serialize(bundle: &AnalysisBundle) -> Vec<u8> {
    let value = serde_json::to_value(bundle).expect("bundle types serialize to JSON");
    let mut out = Vec::new();
    write_canonical(&value, &mut out);
    out
}

/// Writes `value` with sorted keys and no whitespace, independent of how the
/// JSON map type orders its entries.
pub fn write_canonical(value: &Value, out: &mut Vec<u8>) {
    match value {
        Value::Array(items) => {
            out.push(b'[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(b',');
                }
                write_canonical(item, out);
            }
            out.push(b']');
        }
        Value::Object(map) => {
            let mut entries: Vec<(&String, &Value)> = map.iter().collect();
            entries.sort_by(|a, b| a.0.cmp(b.0));
            out.push(b'{');
            for (i, (key, item)) in entries.into_iter().enumerate() {
                if i > 0 {
                    out.push(b',');
                }
                serde_json::to_writer(&mut *out, key).expect("writing to a Vec cannot fail");
                out.push(b':');
                write_canonical(item, out);
            }
            out.push(b'}');
        }
        leaf => serde_json::to_writer(&mut *out, leaf).expect("writing to a Vec cannot fail"),
    }
}

fn parse_value(bytes: &[u8]) -> Result<Value, serde_json::Error> {
    let mut de = serde_json::Deserializer::from_slice(bytes);
    de.disable_recursion_limit();
    let value = Value::deserialize(&mut de)?;
    de.end()?;
    Ok(value)
}

/// Parses and fully re-validates a bundle.
pub fn deserialize(bytes: &[u8]) -> Result<AnalysisBundle, BundleError> {
    let value = match parse_value(bytes) {
        Ok(v) => v,
        Err(syntax) => {
            // Re-read with the typed schema to learn how far the document got.
            let mut de = serde_json::Deserializer::from_slice(bytes);
            de.disable_recursion_limit();
            let path = match serde_path_to_error::deserialize::<_, AnalysisBundle>(&mut de) {
                Err(e) => e.path().to_string(),
                Ok(_) => ".".to_string(),
            };
            return Err(violation(path, syntax));
        }
    };
    match value.get("formatVersion") {
        None => return Err(violation("formatVersion", "missing field")),
        Some(v) if v.as_u64() != Some(FORMAT_VERSION) => {
            return Err(BundleError::UnsupportedVersion(v.to_string()))
        }
        Some(_) => {}
    }
    let bundle: AnalysisBundle =
        serde_path_to_error::deserialize(value).map_err(|e| violation(e.path().to_string(), e.inner()))?;
    bundle.check()?;
    Ok(bundle)
}
