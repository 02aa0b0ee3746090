//! MusicXML (`score-partwise`) ingestion, including compressed `.mxl` containers.
//!
//! Every part becomes a [`Track`]. Tick resolutions of all parts are merged
//! into one piece-global value (the least common multiple of all `divisions`,
//! capped at [`MAX_TICKS_PER_QUARTER`]). Section boundaries come from
//! `rehearsal` marks and non-empty direction `words`.

use std::collections::BTreeMap;
use std::io::{Cursor, Read};

use roxmltree::{Document, Node, ParsingOptions};
use thiserror::Error;

use crate::model::{Bar, Note, Score, Section, Track};

pub const MAX_TICKS_PER_QUARTER: u64 = 960;

/// Name of the single section used when a document carries no section marks.
pub const WHOLE_PIECE_SECTION: &str = "piece";

/// Name of the section covering bars before the first section mark.
pub const LEADING_SECTION: &str = "start";

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseOptions {
    /// Part indices to keep, in document order. `None` keeps every part.
    pub track_filter: Option<Vec<usize>>,
    /// Fail on unsupported elements instead of skipping them with a warning.
    pub strict: bool,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("MalformedXml: {0}")]
    MalformedXml(String),
    #[error("UnsupportedRoot: expected <score-partwise>, found <{0}>")]
    UnsupportedRoot(String),
    #[error("MissingDivisions: {0}")]
    MissingDivisions(String),
    #[error("UnsupportedElement: {0}")]
    UnsupportedElement(String),
    #[error("InvalidContainer: {0}")]
    InvalidContainer(String),
    #[error("EmptyScore: document yields no tracks")]
    EmptyScore,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedScore {
    pub score: Score,
    pub warnings: Vec<String>,
}

/// Parses a MusicXML document or `.mxl` archive.
pub fn parse_score(document: &[u8], options: &ParseOptions) -> Result<ParsedScore, ParseError> {
    let xml = if document.starts_with(b"PK\x03\x04") {
        read_container(document)?
    } else {
        document.to_vec()
    };
    let text = std::str::from_utf8(&xml)
        .map_err(|e| ParseError::MalformedXml(format!("document is not UTF-8: {e}")))?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let opts = ParsingOptions { allow_dtd: true, ..ParsingOptions::default() };
    let doc = Document::parse_with_options(text, opts)
        .map_err(|e| ParseError::MalformedXml(e.to_string()))?;

    let mut diag = Diagnostics { strict: options.strict, warnings: Vec::new() };
    let score = read_score(&doc, options, &mut diag)?;
    Ok(ParsedScore { score, warnings: diag.warnings })
}

fn read_container(bytes: &[u8]) -> Result<Vec<u8>, ParseError> {
    let bad = |e: &dyn std::fmt::Display| ParseError::InvalidContainer(e.to_string());
    let mut archive = zip::ZipArchive::new(Cursor::new(bytes)).map_err(|e| bad(&e))?;
    let mut read_entry = |name: &str| -> Result<Vec<u8>, ParseError> {
        let mut file = archive.by_name(name).map_err(|e| bad(&format!("{name}: {e}")))?;
        let mut buf = Vec::new();
        file.read_to_end(&mut buf).map_err(|e| bad(&e))?;
        Ok(buf)
    };
    let container = read_entry("META-INF/container.xml")?;
    let container = String::from_utf8(container).map_err(|e| bad(&e))?;
    let doc = Document::parse(&container).map_err(|e| bad(&e))?;
    let path = doc
        .descendants()
        .find(|n| n.has_tag_name("rootfile"))
        .and_then(|n| n.attribute("full-path"))
        .ok_or_else(|| ParseError::InvalidContainer("container.xml names no rootfile".into()))?
        .to_string();
    read_entry(&path)
}

struct Diagnostics {
    strict: bool,
    warnings: Vec<String>,
}

impl Diagnostics {
    fn warn(&mut self, msg: String) {
        self.warnings.push(msg);
    }

    /// Records content that the model cannot represent.
    fn skip(&mut self, msg: String) -> Result<(), ParseError> {
        if self.strict {
            Err(ParseError::UnsupportedElement(msg))
        } else {
            self.warnings.push(format!("skipped {msg}"));
            Ok(())
        }
    }
}

const SUPPORTED_VERSIONS: &[&str] = &["1.0", "1.1", "2.0", "3.0", "3.1", "4.0"];

/// Measure children that carry nothing the model represents.
const IGNORED_MEASURE_CHILDREN: &[&str] = &[
    "print",
    "barline",
    "sound",
    "harmony",
    "figured-bass",
    "bookmark",
    "link",
    "grouping",
    "listening",
];

fn read_score(doc: &Document, options: &ParseOptions, diag: &mut Diagnostics) -> Result<Score, ParseError> {
    let root = doc.root_element();
    let root_name = root.tag_name().name();
    if root_name != "score-partwise" {
        return Err(ParseError::UnsupportedRoot(root_name.to_string()));
    }
    match root.attribute("version") {
        Some(v) if SUPPORTED_VERSIONS.contains(&v) => {}
        Some(v) => diag.warn(format!("unknown MusicXML version {v}; parsing anyway")),
        None => {}
    }

    let title = child(root, "work")
        .and_then(|w| child_text(w, "work-title"))
        .or_else(|| child_text(root, "movement-title"))
        .unwrap_or_default();

    let part_names: BTreeMap<&str, String> = child(root, "part-list")
        .into_iter()
        .flat_map(|pl| pl.children().filter(|n| n.has_tag_name("score-part")))
        .filter_map(|sp| Some((sp.attribute("id")?, child_text(sp, "part-name").unwrap_or_default())))
        .collect();

    let tpq = global_ticks_per_quarter(root, diag)?;

    let parts: Vec<Node> = root.children().filter(|n| n.has_tag_name("part")).collect();
    let selected: Vec<usize> = match &options.track_filter {
        None => (0..parts.len()).collect(),
        Some(filter) => {
            let mut keep = Vec::new();
            for &i in filter {
                if i < parts.len() {
                    keep.push(i);
                } else {
                    diag.warn(format!("track filter index {i} out of range ({} parts)", parts.len()));
                }
            }
            keep
        }
    };

    let mut markers: BTreeMap<usize, String> = BTreeMap::new();
    let mut tracks = Vec::new();
    for (i, part) in parts.iter().enumerate() {
        let id = part.attribute("id").unwrap_or("");
        let keep = selected.contains(&i);
        let mut reader = PartReader::new(tpq, diag, keep);
        let bars = reader.read(*part, &mut markers)?;
        if keep {
            let name = part_names
                .get(id)
                .filter(|n| !n.is_empty())
                .cloned()
                .unwrap_or_else(|| id.to_string());
            tracks.push((i, Track { name, tuning: reader.tuning(), bars }));
        }
    }
    // Preserve filter order.
    let tracks: Vec<Track> = selected
        .iter()
        .filter_map(|s| tracks.iter().position(|(i, _)| i == s).map(|p| tracks[p].1.clone()))
        .collect();
    if tracks.is_empty() {
        return Err(ParseError::EmptyScore);
    }

    let bar_count = tracks.iter().map(|t| t.bars.len()).max().unwrap_or(0);
    let sections = sections_from_markers(&markers, bar_count);
    Ok(Score { title, ticks_per_quarter: tpq as u32, tracks, sections })
}

fn global_ticks_per_quarter(root: Node, diag: &mut Diagnostics) -> Result<u64, ParseError> {
    let mut lcm_all: Option<u64> = None;
    for node in root.descendants().filter(|n| n.has_tag_name("divisions")) {
        let value = parse_number(node)
            .filter(|v| *v > 0.0 && v.fract() == 0.0)
            .ok_or_else(|| {
                ParseError::MissingDivisions(format!("invalid divisions value {:?}", node.text()))
            })? as u64;
        lcm_all = Some(match lcm_all {
            None => value,
            // Saturate so pathological inputs still hit the cap below.
            Some(acc) => lcm(acc, value).unwrap_or(u64::MAX),
        });
    }
    let lcm_all =
        lcm_all.ok_or_else(|| ParseError::MissingDivisions("no <divisions> element found".into()))?;
    if lcm_all > MAX_TICKS_PER_QUARTER {
        diag.warn(format!(
            "combined divisions {lcm_all} exceed {MAX_TICKS_PER_QUARTER}; durations are rounded"
        ));
        Ok(MAX_TICKS_PER_QUARTER)
    } else {
        Ok(lcm_all)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn lcm(a: u64, b: u64) -> Option<u64> {
    (a / gcd(a, b)).checked_mul(b)
}

fn sections_from_markers(markers: &BTreeMap<usize, String>, bar_count: usize) -> Vec<Section> {
    if bar_count == 0 {
        return Vec::new();
    }
    let mut starts: Vec<(usize, String)> = markers
        .iter()
        .filter(|(&m, _)| m < bar_count)
        .map(|(&m, name)| (m, name.clone()))
        .collect();
    match starts.first() {
        None => starts.push((0, WHOLE_PIECE_SECTION.to_string())),
        Some((0, _)) => {}
        Some(_) => starts.insert(0, (0, LEADING_SECTION.to_string())),
    }
    starts
        .iter()
        .enumerate()
        .map(|(i, (first, name))| Section {
            name: name.clone(),
            first_bar: *first,
            last_bar: starts.get(i + 1).map(|(next, _)| next - 1).unwrap_or(bar_count - 1),
        })
        .collect()
}

struct PartReader<'d> {
    tpq: u64,
    diag: &'d mut Diagnostics,
    /// Only kept parts report skipped content; others are scanned for sections.
    report: bool,
    divisions: Option<u64>,
    time_sig: (u32, u32),
    /// Semitone offset from written to sounding pitch.
    transpose: i32,
    staff_lines: Option<u32>,
    /// Open-string pitch keyed by staff line (line 1 = lowest string).
    tuning_lines: BTreeMap<u32, i32>,
    inexact_warned: bool,
}

impl<'d> PartReader<'d> {
    fn new(tpq: u64, diag: &'d mut Diagnostics, report: bool) -> Self {
        PartReader {
            tpq,
            diag,
            report,
            divisions: None,
            time_sig: (4, 4),
            transpose: 0,
            staff_lines: None,
            tuning_lines: BTreeMap::new(),
            inexact_warned: false,
        }
    }

    fn skip(&mut self, msg: String) -> Result<(), ParseError> {
        if self.report {
            self.diag.skip(msg)
        } else {
            Ok(())
        }
    }

    fn warn(&mut self, msg: String) {
        if self.report {
            self.diag.warn(msg);
        }
    }

    fn tuning(&self) -> Option<Vec<u8>> {
        if self.tuning_lines.is_empty() {
            return None;
        }
        let lines = self
            .staff_lines
            .unwrap_or(0)
            .max(*self.tuning_lines.keys().last().unwrap_or(&0));
        // String 1 sits on the top line.
        (1..=lines)
            .rev()
            .map(|line| self.tuning_lines.get(&line).and_then(|&p| u8::try_from(p).ok()))
            .collect()
    }

    fn ticks(&mut self, node: Node, context: &str) -> Result<u64, ParseError> {
        let raw = child(node, "duration").and_then(parse_number).unwrap_or(0.0).max(0.0);
        let div = self.divisions.ok_or_else(|| {
            ParseError::MissingDivisions(format!("{context} appears before any <divisions>"))
        })?;
        let scaled = raw * self.tpq as f64 / div as f64;
        let rounded = scaled.round();
        if (scaled - rounded).abs() > 1e-9 && !self.inexact_warned {
            self.inexact_warned = true;
            self.warn(format!("duration {raw} at divisions {div} is not representable exactly"));
        }
        Ok(rounded as u64)
    }

    fn read(&mut self, part: Node, markers: &mut BTreeMap<usize, String>) -> Result<Vec<Bar>, ParseError> {
        let part_id = part.attribute("id").unwrap_or("?").to_string();
        let mut bars = Vec::new();
        let mut cursor = 0u64;
        for (index, measure) in part.children().filter(|n| n.has_tag_name("measure")).enumerate() {
            let start = cursor;
            let mut pos = start;
            let mut extent = start;
            let mut chord_start = start;
            let mut notes = Vec::new();
            let here = format!("part {part_id} measure {}", measure.attribute("number").unwrap_or("?"));

            for el in measure.children().filter(Node::is_element) {
                match el.tag_name().name() {
                    "attributes" => self.read_attributes(el),
                    "note" => {
                        let is_chord = child(el, "chord").is_some();
                        if child(el, "grace").is_some() {
                            self.skip(format!("grace note in {here}"))?;
                            continue;
                        }
                        let duration = self.ticks(el, &here)?;
                        let onset = if is_chord { chord_start } else { pos };
                        if !is_chord {
                            chord_start = pos;
                            pos += duration;
                        }
                        extent = extent.max(onset + duration);

                        if child(el, "rest").is_some() {
                            continue;
                        }
                        if child(el, "cue").is_some() {
                            self.skip(format!("cue note in {here}"))?;
                            continue;
                        }
                        if child(el, "unpitched").is_some() {
                            self.skip(format!("unpitched note in {here}"))?;
                            continue;
                        }
                        if duration == 0 {
                            self.skip(format!("zero-duration note in {here}"))?;
                            continue;
                        }
                        let Some(pitch) = child(el, "pitch").and_then(|p| pitch_of(p, self.transpose)) else {
                            self.skip(format!("note without a valid pitch in {here}"))?;
                            continue;
                        };
                        let mut note = Note::new(onset, duration, pitch);
                        note.tie_continuation = is_tie_stop(el);
                        self.read_technical(el, &mut note, &here);
                        notes.push(note);
                    }
                    "backup" => {
                        let d = self.ticks(el, &here)?;
                        if d > pos - start {
                            self.warn(format!("<backup> before measure start in {here}"));
                        }
                        pos = pos.saturating_sub(d).max(start);
                    }
                    "forward" => {
                        pos += self.ticks(el, &here)?;
                        extent = extent.max(pos);
                    }
                    "direction" => {
                        if let Some(name) = section_mark(el) {
                            markers.entry(index).or_insert(name);
                        }
                    }
                    name if IGNORED_MEASURE_CHILDREN.contains(&name) => {}
                    other => self.skip(format!("<{other}> in {here}"))?,
                }
            }

            let (num, den) = self.time_sig;
            let nominal = (self.tpq * 4 * u64::from(num) / u64::from(den)).max(1);
            let length = if extent > start { extent - start } else { nominal };
            notes.sort_by_key(|n: &Note| (n.start_tick, n.pitch));
            bars.push(Bar {
                index,
                notes,
                start_tick: start,
                length_ticks: length,
                time_sig_numerator: num,
                time_sig_denominator: den,
            });
            cursor = start + length;
        }
        Ok(bars)
    }

    fn read_attributes(&mut self, attrs: Node) {
        for el in attrs.children().filter(Node::is_element) {
            match el.tag_name().name() {
                "divisions" => self.divisions = parse_number(el).map(|v| v as u64).filter(|&v| v > 0),
                "time" => {
                    let beats = child(el, "beats").and_then(|b| {
                        // Compound signatures such as "3+2" are summed.
                        b.text()?
                            .split('+')
                            .map(|s| s.trim().parse::<u32>().ok())
                            .sum::<Option<u32>>()
                    });
                    let beat_type = child(el, "beat-type").and_then(parse_number).map(|v| v as u32);
                    if let (Some(b), Some(t)) = (beats, beat_type) {
                        if b > 0 && t > 0 {
                            self.time_sig = (b, t);
                        }
                    }
                }
                "transpose" => {
                    let chromatic = child(el, "chromatic").and_then(parse_number).unwrap_or(0.0);
                    let octaves = child(el, "octave-change").and_then(parse_number).unwrap_or(0.0);
                    self.transpose = (chromatic + 12.0 * octaves).round() as i32;
                }
                "staff-details" => {
                    if let Some(lines) = child(el, "staff-lines").and_then(parse_number) {
                        self.staff_lines = Some(lines as u32);
                    }
                    for st in el.children().filter(|n| n.has_tag_name("staff-tuning")) {
                        let line = st.attribute("line").and_then(|l| l.parse::<u32>().ok());
                        let step = child_text(st, "tuning-step");
                        let octave = child(st, "tuning-octave").and_then(parse_number);
                        let alter = child(st, "tuning-alter").and_then(parse_number).unwrap_or(0.0);
                        if let (Some(line), Some(step), Some(octave)) = (line, step, octave) {
                            if let Some(semi) = step_semitone(&step) {
                                let p = (octave as i32 + 1) * 12 + semi + alter.round() as i32;
                                self.tuning_lines.insert(line, p);
                            }
                        }
                    }
                }
                _ => {}
            }
        }
    }

    fn read_technical(&mut self, note_el: Node, note: &mut Note, here: &str) {
        let technical = child(note_el, "notations").and_then(|n| child(n, "technical"));
        let Some(technical) = technical else { return };
        let string = child(technical, "string").and_then(parse_number).map(|v| v as u8);
        let fret = child(technical, "fret").and_then(parse_number).map(|v| v as u8);
        match (string, fret) {
            (Some(s), Some(f)) if s >= 1 => {
                note.string = Some(s);
                note.fret = Some(f);
                let open = self
                    .tuning()
                    .and_then(|t| t.get(usize::from(s) - 1).copied());
                if let Some(open) = open {
                    if u16::from(open) + u16::from(f) != u16::from(note.pitch) {
                        self.warn(format!(
                            "tab position string {s} fret {f} disagrees with pitch {} in {here}",
                            note.pitch
                        ));
                    }
                }
            }
            (None, None) => {}
            _ => self.warn(format!("incomplete string/fret pair dropped in {here}")),
        }
    }
}

fn is_tie_stop(note: Node) -> bool {
    let stop = |n: Node| n.attribute("type") == Some("stop");
    note.children().any(|n| n.has_tag_name("tie") && stop(n))
        || child(note, "notations")
            .map(|ns| ns.children().any(|n| n.has_tag_name("tied") && stop(n)))
            .unwrap_or(false)
}

fn section_mark(direction: Node) -> Option<String> {
    direction
        .children()
        .filter(|n| n.has_tag_name("direction-type"))
        .flat_map(|dt| dt.children())
        .filter(|n| n.has_tag_name("rehearsal") || n.has_tag_name("words"))
        .filter_map(|n| n.text().map(str::trim))
        .find(|t| !t.is_empty())
        .map(str::to_string)
}

fn step_semitone(step: &str) -> Option<i32> {
    Some(match step.trim() {
        "C" => 0,
        "D" => 2,
        "E" => 4,
        "F" => 5,
        "G" => 7,
        "A" => 9,
        "B" => 11,
        _ => return None,
    })
}

fn pitch_of(pitch: Node, transpose: i32) -> Option<u8> {
    let step = step_semitone(&child_text(pitch, "step")?)?;
    let octave = child(pitch, "octave").and_then(parse_number)? as i32;
    let alter = child(pitch, "alter").and_then(parse_number).unwrap_or(0.0).round() as i32;
    let midi = (octave + 1) * 12 + step + alter + transpose;
    u8::try_from(midi).ok().filter(|&p| p <= 127)
}

fn child<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    node.children().find(|n| n.has_tag_name(name))
}

fn child_text(node: Node, name: &str) -> Option<String> {
    child(node, name).and_then(|n| n.text()).map(|t| t.trim().to_string())
}

fn parse_number(node: Node) -> Option<f64> {
    node.text()?.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}
