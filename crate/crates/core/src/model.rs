//! In-memory representation of a parsed piece.
//!
//! Time is measured in integer ticks. A [`Score`] carries a single
//! piece-global tick resolution (`ticks_per_quarter`) so that notes from
//! different parts can be grouped by exact start time.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A single sounding (or held) note.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Note {
    pub start_tick: u64,
    pub duration_ticks: u64,
    /// MIDI semitone number, 60 = C4.
    pub pitch: u8,
    /// Tablature string, 1 = highest-pitched string.
    pub string: Option<u8>,
    pub fret: Option<u8>,
    /// Set when the note continues a tie and does not re-onset.
    pub tie_continuation: bool,
}

impl Note {
    pub fn new(start_tick: u64, duration_ticks: u64, pitch: u8) -> Self {
        Note {
            start_tick,
            duration_ticks,
            pitch,
            string: None,
            fret: None,
            tie_continuation: false,
        }
    }

    pub fn with_tab(mut self, string: u8, fret: u8) -> Self {
        self.string = Some(string);
        self.fret = Some(fret);
        self
    }

    pub fn tied(mut self) -> Self {
        self.tie_continuation = true;
        self
    }

    /// True for notes that start a new sound.
    pub fn is_onset(&self) -> bool {
        !self.tie_continuation
    }

    pub fn end_tick(&self) -> u64 {
        self.start_tick + self.duration_ticks
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Bar {
    pub index: usize,
    pub notes: Vec<Note>,
    pub start_tick: u64,
    pub length_ticks: u64,
    pub time_sig_numerator: u32,
    pub time_sig_denominator: u32,
}

impl Bar {
    pub fn end_tick(&self) -> u64 {
        self.start_tick + self.length_ticks
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Track {
    pub name: String,
    /// Open-string pitches ordered string 1..k (highest string first).
    pub tuning: Option<Vec<u8>>,
    pub bars: Vec<Bar>,
}

impl Track {
    /// Iterates over all notes together with their (bar, note) position.
    pub fn notes(&self) -> impl Iterator<Item = (NoteRef, &Note)> {
        self.bars.iter().enumerate().flat_map(|(b, bar)| {
            bar.notes
                .iter()
                .enumerate()
                .map(move |(n, note)| (NoteRef { bar: b, note: n }, note))
        })
    }

    pub fn note(&self, r: NoteRef) -> Option<&Note> {
        self.bars.get(r.bar).and_then(|bar| bar.notes.get(r.note))
    }

    /// Lowest and highest pitch over all notes, if any.
    pub fn pitch_range(&self) -> Option<(u8, u8)> {
        self.notes().fold(None, |acc, (_, n)| match acc {
            None => Some((n.pitch, n.pitch)),
            Some((lo, hi)) => Some((lo.min(n.pitch), hi.max(n.pitch))),
        })
    }

    pub fn end_tick(&self) -> u64 {
        self.bars.last().map(Bar::end_tick).unwrap_or(0)
    }
}

/// Position of a note inside a track.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NoteRef {
    pub bar: usize,
    pub note: usize,
}

/// A named, contiguous, inclusive bar range.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Section {
    pub name: String,
    pub first_bar: usize,
    pub last_bar: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Score {
    pub title: String,
    pub ticks_per_quarter: u32,
    pub tracks: Vec<Track>,
    pub sections: Vec<Section>,
}

impl Score {
    /// Bar count of the longest track; sections are validated against it.
    pub fn bar_count(&self) -> usize {
        self.tracks.iter().map(|t| t.bars.len()).max().unwrap_or(0)
    }
}

/// One broken invariant, located by a path such as `tracks[0].bars[3].notes[1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub location: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

/// Checks every model invariant and reports each violation found.
///
/// An empty result means the score is well-formed.
pub fn validate(score: &Score) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |location: String, message: String| out.push(Violation { location, message });

    if score.tracks.is_empty() {
        push("score".into(), "score has no tracks".into());
    }
    if score.ticks_per_quarter == 0 {
        push("score".into(), "ticksPerQuarter must be at least 1".into());
    }

    for (t, track) in score.tracks.iter().enumerate() {
        let tloc = format!("tracks[{t}]");
        if let Some(tuning) = &track.tuning {
            if tuning.is_empty() {
                push(format!("{tloc}.tuning"), "tuning lists no strings".into());
            }
            if let Some(p) = tuning.iter().find(|&&p| p > 127) {
                push(format!("{tloc}.tuning"), format!("tuning pitch {p} outside 0..=127"));
            }
        }
        for (b, bar) in track.bars.iter().enumerate() {
            let bloc = format!("{tloc}.bars[{b}]");
            if bar.index != b {
                push(bloc.clone(), format!("bar index {} does not match position {b}", bar.index));
            }
            if bar.length_ticks == 0 {
                push(bloc.clone(), "lengthTicks must be at least 1".into());
            }
            if bar.time_sig_numerator == 0 || bar.time_sig_denominator == 0 {
                push(bloc.clone(), "time signature terms must be at least 1".into());
            }
            if bar
                .notes
                .windows(2)
                .any(|w| (w[0].start_tick, w[0].pitch) > (w[1].start_tick, w[1].pitch))
            {
                push(bloc.clone(), "notes are not sorted by (startTick, pitch)".into());
            }
            for (n, note) in bar.notes.iter().enumerate() {
                let nloc = format!("{bloc}.notes[{n}]");
                if note.pitch > 127 {
                    push(nloc.clone(), format!("pitch {} outside 0..=127", note.pitch));
                }
                if note.duration_ticks == 0 {
                    push(nloc.clone(), "durationTicks must be at least 1".into());
                }
                match (note.string, note.fret) {
                    (Some(_), None) | (None, Some(_)) => {
                        push(nloc.clone(), "string and fret must be both present or both absent".into())
                    }
                    (Some(0), Some(_)) => push(nloc.clone(), "string numbers start at 1".into()),
                    _ => {}
                }
                if note.start_tick < bar.start_tick || note.start_tick >= bar.end_tick() {
                    push(
                        nloc,
                        format!(
                            "start tick {} outside bar range [{}, {})",
                            note.start_tick,
                            bar.start_tick,
                            bar.end_tick()
                        ),
                    );
                }
            }
        }
    }

    let bar_count = score.bar_count();
    let mut expected_first = 0usize;
    for (s, section) in score.sections.iter().enumerate() {
        let sloc = format!("sections[{s}]");
        if section.first_bar > section.last_bar || section.last_bar >= bar_count {
            push(
                sloc,
                format!(
                    "bar range [{}, {}] invalid for {bar_count} bars",
                    section.first_bar, section.last_bar
                ),
            );
            // Report the bad range once, not again as a coverage gap.
            expected_first = expected_first.max(section.last_bar.saturating_add(1).min(bar_count));
            continue;
        }
        if section.first_bar != expected_first {
            push(
                sloc,
                format!(
                    "section starts at bar {} but bar {expected_first} is next uncovered",
                    section.first_bar
                ),
            );
        }
        expected_first = section.last_bar + 1;
    }
    if !score.sections.is_empty() && expected_first != bar_count {
        push("sections".into(), format!("sections do not cover bars {expected_first}..{bar_count}"));
    }
    out
}

/// Spelled pitch name such as `C4` or `F#3`.
pub fn pitch_name(pitch: u8) -> String {
    const NAMES: [&str; 12] = ["C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B"];
    let octave = i32::from(pitch) / 12 - 1;
    format!("{}{}", NAMES[usize::from(pitch % 12)], octave)
}
