//! Deterministic SVG output: single bars, the compact whole-piece view and
//! the compressed repetition view.
//!
//! All coordinates are written with exactly three fractional digits.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::colormap::{contrast_text_color, note_pitch_color, ColorAssignment, Rgb, ScaleId};
use crate::compression::{expand, CanonicalIds, RepetitionNode};
use crate::model::{Bar, Track};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum NoteMode {
    PianoRoll,
    TabSimple,
    TabFrets,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RenderConfig {
    pub note_mode: NoteMode,
    pub bars_per_row: usize,
    pub bar_box_width: f64,
    pub bar_box_height: f64,
    pub overlay_opacity: f64,
    pub scale: ScaleId,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            note_mode: NoteMode::PianoRoll,
            bars_per_row: 8,
            bar_box_width: 120.0,
            bar_box_height: 48.0,
            overlay_opacity: 0.45,
            scale: ScaleId::Spectral,
        }
    }
}

impl RenderConfig {
    pub fn check(&self) -> Result<(), RenderError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if self.bars_per_row == 0 || !positive(self.bar_box_width) || !positive(self.bar_box_height) {
            return Err(RenderError::InvalidConfig("dimensions must be positive".into()));
        }
        if !(self.overlay_opacity > 0.0 && self.overlay_opacity <= 1.0) {
            return Err(RenderError::InvalidConfig(format!(
                "overlay opacity {} outside (0, 1]",
                self.overlay_opacity
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RenderError {
    #[error("MissingTabData: {0}")]
    MissingTabData(String),
    #[error("LengthMismatch: expected {expected} colors, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("InconsistentTree: repetition tree does not expand to the canonical ids")]
    InconsistentTree,
    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),
}

const GAP: f64 = 4.0;
const LABEL_HEIGHT: f64 = 12.0;
const LABEL_FONT_SIZE: f64 = 10.0;
const BRACKET_STEP: f64 = 16.0;
const MARGIN: f64 = 4.0;
const ONSET_EDGE_WIDTH: f64 = 1.0;
const ONSET_EDGE_DARKEN: f64 = 0.7;
const TIED_OPACITY: f64 = 0.5;
const FRAME_COLOR: &str = "#bbbbbb";
const STRING_COLOR: &str = "#999999";

/// Fixed three-digit formatting without negative zero.
fn num(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".to_string()
    } else {
        s
    }
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

fn document(width: f64, height: f64, body: &str) -> String {
    let (w, h) = (num(width), num(height));
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect x=\"0.000\" y=\"0.000\" width=\"{w}\" height=\"{h}\" fill=\"#ffffff\"/>\n{body}</svg>\n"
    )
}

fn label(out: &mut String, x: f64, y: f64, anchor: &str, text: &str) {
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"{}\" text-anchor=\"{anchor}\" fill=\"#333333\">{}</text>",
        num(x),
        num(y),
        num(LABEL_FONT_SIZE),
        escape(text)
    );
}

/// Per-track context shared by all bars: the vertical pitch range is fixed
/// for the whole piece so that bars are comparable.
struct BarRenderer<'a> {
    track: &'a Track,
    config: &'a RenderConfig,
    pitch_range: (u8, u8),
}

impl<'a> BarRenderer<'a> {
    fn new(track: &'a Track, config: &'a RenderConfig) -> Result<Self, RenderError> {
        config.check()?;
        if config.note_mode != NoteMode::PianoRoll {
            check_tab_data(track)?;
        }
        Ok(BarRenderer { track, config, pitch_range: track.pitch_range().unwrap_or((60, 60)) })
    }

    /// Bar contents with the box's top-left corner at the origin.
    fn render(&self, bar: &Bar, fill: Option<Rgb>) -> String {
        let (w, h) = (self.config.bar_box_width, self.config.bar_box_height);
        let mut out = String::new();
        if let Some(c) = fill {
            let _ = writeln!(
                out,
                "<rect x=\"0.000\" y=\"0.000\" width=\"{}\" height=\"{}\" fill=\"{c}\" fill-opacity=\"{}\"/>",
                num(w),
                num(h),
                num(self.config.overlay_opacity)
            );
        }
        let _ = writeln!(
            out,
            "<rect x=\"0.000\" y=\"0.000\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"{FRAME_COLOR}\" stroke-width=\"0.500\"/>",
            num(w),
            num(h)
        );
        match self.config.note_mode {
            NoteMode::PianoRoll => self.piano_roll(bar, &mut out),
            NoteMode::TabSimple | NoteMode::TabFrets => self.tab(bar, fill, &mut out),
        }
        out
    }

    fn x_span(&self, bar: &Bar, start: u64, duration: u64) -> (f64, f64) {
        let len = bar.length_ticks.max(1) as f64;
        let w = self.config.bar_box_width;
        let x = start.saturating_sub(bar.start_tick) as f64 / len * w;
        (x, duration as f64 / len * w)
    }

    fn piano_roll(&self, bar: &Bar, out: &mut String) {
        let (lo, hi) = self.pitch_range;
        let row_h = self.config.bar_box_height / f64::from(hi - lo + 1);
        for note in &bar.notes {
            let (x, width) = self.x_span(bar, note.start_tick, note.duration_ticks);
            let y = f64::from(hi.saturating_sub(note.pitch)) * row_h;
            let color = note_pitch_color(note.pitch, self.pitch_range);
            let opacity = if note.tie_continuation {
                format!(" fill-opacity=\"{}\"", num(TIED_OPACITY))
            } else {
                String::new()
            };
            let _ = writeln!(
                out,
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{color}\"{opacity}/>",
                num(x),
                num(y),
                num(width),
                num(row_h)
            );
            if note.is_onset() {
                let _ = writeln!(
                    out,
                    "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"/>",
                    num(x),
                    num(y),
                    num(ONSET_EDGE_WIDTH.min(width)),
                    num(row_h),
                    color.darken(ONSET_EDGE_DARKEN)
                );
            }
        }
    }

    fn tab(&self, bar: &Bar, fill: Option<Rgb>, out: &mut String) {
        let strings = self.track.tuning.as_ref().map_or(1, Vec::len).max(1);
        let row_h = self.config.bar_box_height / strings as f64;
        for s in 0..strings {
            let y = (s as f64 + 0.5) * row_h;
            let _ = writeln!(
                out,
                "<line x1=\"0.000\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"{STRING_COLOR}\" stroke-width=\"0.500\"/>",
                num(self.config.bar_box_width),
                y = num(y)
            );
        }
        // Blocks contrast with what is underneath them, frets with the block.
        let background = fill.map_or(Rgb::WHITE, |c| c.over(Rgb::WHITE, self.config.overlay_opacity));
        let block = contrast_text_color(background);
        let text = contrast_text_color(block);
        for note in &bar.notes {
            let (Some(string), Some(fret)) = (note.string, note.fret) else { continue };
            let (x, width) = self.x_span(bar, note.start_tick, note.duration_ticks);
            let y = f64::from(string - 1) * row_h + row_h * 0.1;
            let opacity = if note.tie_continuation {
                format!(" fill-opacity=\"{}\"", num(TIED_OPACITY))
            } else {
                String::new()
            };
            let _ = writeln!(
                out,
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{block}\"{opacity}/>",
                num(x),
                num(y),
                num(width),
                num(row_h * 0.8)
            );
            if self.config.note_mode == NoteMode::TabFrets {
                let _ = writeln!(
                    out,
                    "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"{}\" text-anchor=\"middle\" dominant-baseline=\"central\" fill=\"{text}\">{fret}</text>",
                    num(x + width / 2.0),
                    num(f64::from(string - 1) * row_h + row_h / 2.0),
                    num(row_h * 0.7)
                );
            }
        }
    }
}

fn check_tab_data(track: &Track) -> Result<(), RenderError> {
    let Some(tuning) = &track.tuning else {
        return Err(RenderError::MissingTabData(format!("track '{}' has no tuning", track.name)));
    };
    for (r, note) in track.notes() {
        match note.string {
            Some(s) if note.fret.is_some() && s >= 1 && usize::from(s) <= tuning.len() => {}
            _ => {
                return Err(RenderError::MissingTabData(format!(
                    "bar {} note {} has no usable string/fret",
                    r.bar + 1,
                    r.note
                )))
            }
        }
    }
    Ok(())
}

/// One bar as an SVG fragment whose box spans (0, 0) to (barBoxWidth, barBoxHeight).
pub fn render_bar(bar: &Bar, track: &Track, config: &RenderConfig, fill: Option<Rgb>) -> Result<String, RenderError> {
    Ok(BarRenderer::new(track, config)?.render(bar, fill))
}

/// Every bar of the track, wrapped into rows, with 1-based bar numbers above.
pub fn render_compact(track: &Track, colors: &ColorAssignment, config: &RenderConfig) -> Result<String, RenderError> {
    let n = track.bars.len();
    if colors.len() != n {
        return Err(RenderError::LengthMismatch { expected: n, found: colors.len() });
    }
    let renderer = BarRenderer::new(track, config)?;
    let (w, h) = (config.bar_box_width, config.bar_box_height);
    let cell_h = LABEL_HEIGHT + h + GAP;
    let mut body = String::new();
    for (i, bar) in track.bars.iter().enumerate() {
        let x = MARGIN + (i % config.bars_per_row) as f64 * (w + GAP);
        let y = MARGIN + (i / config.bars_per_row) as f64 * cell_h;
        label(&mut body, x + 1.0, y + LABEL_HEIGHT - 2.0, "start", &(i + 1).to_string());
        let _ = writeln!(body, "<g transform=\"translate({},{})\">", num(x), num(y + LABEL_HEIGHT));
        body.push_str(&renderer.render(bar, colors.colors[i]));
        body.push_str("</g>\n");
    }
    let cols = n.min(config.bars_per_row);
    let rows = n.div_ceil(config.bars_per_row);
    let width = 2.0 * MARGIN + cols as f64 * (w + GAP) - if cols > 0 { GAP } else { 0.0 };
    let height = 2.0 * MARGIN + rows as f64 * cell_h;
    Ok(document(width, height, &body))
}

struct Bracket {
    first_leaf: usize,
    last_leaf: usize,
    count: usize,
    level: usize,
}

fn collect(node: &RepetitionNode, leaves: &mut Vec<usize>, brackets: &mut Vec<Bracket>) {
    match node {
        RepetitionNode::Leaf(id) => leaves.push(*id),
        RepetitionNode::Seq(children) => children.iter().for_each(|c| collect(c, leaves, brackets)),
        RepetitionNode::Run { prefix, body, count, suffix } => {
            if let Some(p) = prefix {
                collect(p, leaves, brackets);
            }
            let first_leaf = leaves.len();
            collect(body, leaves, brackets);
            if leaves.len() > first_leaf {
                brackets.push(Bracket { first_leaf, last_leaf: leaves.len() - 1, count: *count, level: body.run_depth() });
            }
            if let Some(s) = suffix {
                collect(s, leaves, brackets);
            }
        }
    }
}

/// Repeated blocks drawn once under a bracket labelled with the repeat count.
///
/// Leaves show the content of the bar they stand for, are labelled with that
/// bar's 1-based number, and take the color assigned to it. Inner brackets
/// sit closer to the bars than the ones enclosing them.
pub fn render_compressed(
    tree: &RepetitionNode,
    track: &Track,
    ids: &CanonicalIds,
    colors: &ColorAssignment,
    config: &RenderConfig,
) -> Result<String, RenderError> {
    if expand(tree) != ids.0 {
        return Err(RenderError::InconsistentTree);
    }
    let n = track.bars.len();
    if ids.0.len() != n {
        return Err(RenderError::LengthMismatch { expected: n, found: ids.0.len() });
    }
    if colors.len() != n {
        return Err(RenderError::LengthMismatch { expected: n, found: colors.len() });
    }
    let renderer = BarRenderer::new(track, config)?;
    let mut leaves = Vec::new();
    let mut brackets = Vec::new();
    collect(tree, &mut leaves, &mut brackets);

    let (w, h) = (config.bar_box_width, config.bar_box_height);
    let depth = tree.run_depth();
    let boxes_top = MARGIN + depth as f64 * BRACKET_STEP + LABEL_HEIGHT;
    let leaf_x = |k: usize| MARGIN + k as f64 * (w + GAP);
    let mut body = String::new();

    for b in &brackets {
        let y = boxes_top - LABEL_HEIGHT - b.level as f64 * BRACKET_STEP - 6.0;
        let (x0, x1) = (leaf_x(b.first_leaf), leaf_x(b.last_leaf) + w);
        let _ = writeln!(
            body,
            "<path d=\"M{} {}V{}H{}V{}\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1.000\"/>",
            num(x0),
            num(y + 4.0),
            num(y),
            num(x1),
            num(y + 4.0)
        );
        label(&mut body, (x0 + x1) / 2.0, y - 2.0, "middle", &format!("\u{d7}{}", b.count));
    }
    for (k, &id) in leaves.iter().enumerate() {
        let x = leaf_x(k);
        label(&mut body, x + 1.0, boxes_top - 2.0, "start", &(id + 1).to_string());
        let _ = writeln!(body, "<g transform=\"translate({},{})\">", num(x), num(boxes_top));
        body.push_str(&renderer.render(&track.bars[id], colors.colors[id]));
        body.push_str("</g>\n");
    }
    let count = leaves.len();
    let width = 2.0 * MARGIN + count as f64 * (w + GAP) - if count > 0 { GAP } else { 0.0 };
    let height = boxes_top + h + MARGIN;
    Ok(document(width, height, &body))
}
