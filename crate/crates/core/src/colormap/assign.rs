//! Turning distances into per-segment colors.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::cluster::Dendrogram;
use super::mds::mds_1d;
use super::scale::{ColorScale, Rgb, ScaleId};
use crate::similarity::DistanceMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ColorMode {
    Direct,
    Identical,
    Mds,
    Cluster,
}

impl ColorMode {
    /// Single-hue for one-to-many comparison, multi-hue otherwise.
    pub fn default_scale(self) -> ScaleId {
        match self {
            ColorMode::Direct | ColorMode::Identical => ScaleId::Blues,
            ColorMode::Mds | ColorMode::Cluster => ScaleId::Spectral,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ColorError {
    #[error("IndexOutOfRange: segment {index} selected but only {len} exist")]
    IndexOutOfRange { index: usize, len: usize },
}

/// Scale position and color for every segment. `None` leaves a segment uncolored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ColorAssignment {
    pub positions: Vec<Option<f64>>,
    pub colors: Vec<Option<Rgb>>,
    pub mode: ColorMode,
    pub selected: Option<usize>,
    pub threshold: Option<f64>,
}

impl ColorAssignment {
    fn from_positions(positions: Vec<Option<f64>>, scale: &ColorScale, mode: ColorMode) -> Self {
        let colors = positions.iter().map(|p| p.map(|t| scale.color(t))).collect();
        ColorAssignment { positions, colors, mode, selected: None, threshold: None }
    }

    /// Colors from precomputed MDS positions.
    pub fn from_mds_positions(positions: &[f64], scale: &ColorScale) -> Self {
        Self::from_positions(positions.iter().copied().map(Some).collect(), scale, ColorMode::Mds)
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    /// Same positions re-evaluated on another scale.
    pub fn with_scale(&self, scale: &ColorScale) -> Self {
        ColorAssignment {
            colors: self.positions.iter().map(|p| p.map(|t| scale.color(t))).collect(),
            ..self.clone()
        }
    }
}

fn check_index(matrix: &DistanceMatrix, selected: usize) -> Result<(), ColorError> {
    if selected < matrix.len() {
        Ok(())
    } else {
        Err(ColorError::IndexOutOfRange { index: selected, len: matrix.len() })
    }
}

/// Similarity to the selected segment, mapped linearly onto the scale.
pub fn map_direct(matrix: &DistanceMatrix, selected: usize, scale: &ColorScale) -> Result<ColorAssignment, ColorError> {
    check_index(matrix, selected)?;
    let positions = matrix.row(selected).iter().map(|d| Some(1.0 - d)).collect();
    Ok(ColorAssignment {
        selected: Some(selected),
        ..ColorAssignment::from_positions(positions, scale, ColorMode::Direct)
    })
}

/// Highlights only the segments identical to the selected one, using the scale's end color.
pub fn map_identical(matrix: &DistanceMatrix, selected: usize, scale: &ColorScale) -> Result<ColorAssignment, ColorError> {
    check_index(matrix, selected)?;
    let positions = matrix.row(selected).iter().map(|&d| (d == 0.0).then_some(1.0)).collect();
    Ok(ColorAssignment {
        selected: Some(selected),
        ..ColorAssignment::from_positions(positions, scale, ColorMode::Identical)
    })
}

/// One-dimensional MDS positions mapped onto the scale.
pub fn map_mds(matrix: &DistanceMatrix, scale: &ColorScale) -> ColorAssignment {
    ColorAssignment::from_mds_positions(&mds_1d(matrix), scale)
}

/// Gives each cluster the scale color at the midpoint of its leaf-order span.
pub fn cluster_colors(dendrogram: &Dendrogram, clusters: &[Vec<usize>], scale: &ColorScale) -> ColorAssignment {
    let n = dendrogram.leaf_count();
    let leaf_pos = dendrogram.leaf_positions();
    let mut positions = vec![None; n];
    for members in clusters {
        let span = members.iter().map(|&m| leaf_pos[m]);
        let (lo, hi) = span.fold((usize::MAX, 0), |(lo, hi), p| (lo.min(p), hi.max(p)));
        if lo == usize::MAX {
            continue;
        }
        let t = if n <= 1 { 0.5 } else { (lo + hi) as f64 / 2.0 / (n - 1) as f64 };
        for &m in members {
            positions[m] = Some(t);
        }
    }
    ColorAssignment::from_positions(positions, scale, ColorMode::Cluster)
}

/// Cuts the dendrogram and colors the clusters in one step.
pub fn map_clusters(dendrogram: &Dendrogram, threshold: f64, scale: &ColorScale) -> ColorAssignment {
    let clusters = super::cluster::cut(dendrogram, threshold);
    ColorAssignment { threshold: Some(threshold), ..cluster_colors(dendrogram, &clusters, scale) }
}

/// Viridis color for a note by its place within the piece's pitch range.
pub fn note_pitch_color(pitch: u8, range: (u8, u8)) -> Rgb {
    let (lo, hi) = range;
    let t = if hi <= lo { 0.5 } else { (f64::from(pitch) - f64::from(lo)) / f64::from(hi - lo) };
    ScaleId::Viridis.scale().color(t)
}

/// Relative luminance of an sRGB color (0 = black, 1 = white).
pub fn relative_luminance(c: Rgb) -> f64 {
    let lin = |v: u8| {
        let s = f64::from(v) / 255.0;
        if s <= 0.04045 {
            s / 12.92
        } else {
            ((s + 0.055) / 1.055).powf(2.4)
        }
    };
    0.2126 * lin(c.r) + 0.7152 * lin(c.g) + 0.0722 * lin(c.b)
}

pub const TEXT_LUMINANCE_THRESHOLD: f64 = 0.45;

/// Black on light backgrounds, white on dark ones.
pub fn contrast_text_color(background: Rgb) -> Rgb {
    if relative_luminance(background) >= TEXT_LUMINANCE_THRESHOLD {
        Rgb::BLACK
    } else {
        Rgb::WHITE
    }
}
