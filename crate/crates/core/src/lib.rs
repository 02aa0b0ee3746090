//! Structure analysis for symbolic music.
//!
//! Parses MusicXML into a [`model::Score`], splits tracks into sections,
//! bars and harmonies, compares them with edit distance and Jaccard
//! similarity, and turns the resulting distance matrices into colors, a
//! nested repetition tree and SVG overviews. [`bundle`] serializes the whole
//! analysis for external viewers.

pub mod bundle;
pub mod colormap;
pub mod compression;
pub mod model;
pub mod musicxml;
pub mod render;
pub mod segment;
pub mod similarity;

pub use model::{validate, Bar, Note, NoteRef, Score, Section, Track};
pub use musicxml::{parse_score, ParseError, ParseOptions, ParsedScore};
