//! Similarity-to-color mapping: direct and identical comparison against a
//! selected segment, one-dimensional MDS, and agglomerative clustering.

mod assign;
pub mod cluster;
pub mod mds;
mod scale;

pub use assign::{
    cluster_colors, contrast_text_color, map_clusters, map_direct, map_identical, map_mds,
    note_pitch_color, relative_luminance, ColorAssignment, ColorError, ColorMode,
    TEXT_LUMINANCE_THRESHOLD,
};
pub use cluster::{cluster, cut, Dendrogram, DendrogramError, Merge};
pub use mds::{mds_1d, mds_embedding, Embedding};
pub use scale::{scale_color, ColorScale, Rgb, ScaleId};
