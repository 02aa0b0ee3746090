//! Segments compared by the similarity metrics (sections, bars, harmonies)
//! and the piece → section → bar → harmony → note hierarchy.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{pitch_name, NoteRef, Score, Track};
use crate::musicxml::WHOLE_PIECE_SECTION;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Level {
    Section,
    Bar,
    Harmony,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub level: Level,
    pub ordinal: usize,
    pub label: String,
    /// Inclusive bar range; `None` for harmonies.
    pub bar_range: Option<(usize, usize)>,
    pub start_tick: u64,
    pub note_refs: Vec<NoteRef>,
}

/// Set of pitch classes (0 = C … 11 = B) stored as a 12-bit mask.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PitchClassSet(u16);

impl PitchClassSet {
    pub fn from_pitches<I: IntoIterator<Item = u8>>(pitches: I) -> Self {
        PitchClassSet(pitches.into_iter().fold(0, |m, p| m | 1 << (p % 12)))
    }

    pub fn from_mask(mask: u16) -> Self {
        PitchClassSet(mask & 0x0fff)
    }

    pub fn mask(self) -> u16 {
        self.0
    }

    pub fn len(self) -> u32 {
        self.0.count_ones()
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, pc: u8) -> bool {
        pc < 12 && self.0 & (1 << pc) != 0
    }

    pub fn intersection(self, other: Self) -> Self {
        PitchClassSet(self.0 & other.0)
    }

    pub fn union(self, other: Self) -> Self {
        PitchClassSet(self.0 | other.0)
    }

    /// Members in ascending order.
    pub fn classes(self) -> Vec<u8> {
        (0..12).filter(|&pc| self.contains(pc)).collect()
    }
}

impl FromIterator<u8> for PitchClassSet {
    fn from_iter<I: IntoIterator<Item = u8>>(iter: I) -> Self {
        Self::from_pitches(iter)
    }
}

impl Serialize for PitchClassSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.classes().serialize(s)
    }
}

impl<'de> Deserialize<'de> for PitchClassSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let classes = Vec::<u8>::deserialize(d)?;
        if let Some(bad) = classes.iter().find(|&&pc| pc >= 12) {
            return Err(serde::de::Error::custom(format!("pitch class {bad} outside 0..=11")));
        }
        Ok(PitchClassSet::from_pitches(classes))
    }
}

/// Notes sharing one onset tick.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Harmony {
    pub start_tick: u64,
    pub pitch_classes: PitchClassSet,
    pub note_refs: Vec<NoteRef>,
}

pub fn segment_bars(track: &Track) -> Vec<Segment> {
    track
        .bars
        .iter()
        .enumerate()
        .map(|(i, bar)| Segment {
            level: Level::Bar,
            ordinal: i,
            label: format!("bar {}", i + 1),
            bar_range: Some((i, i)),
            start_tick: bar.start_tick,
            note_refs: (0..bar.notes.len()).map(|n| NoteRef { bar: i, note: n }).collect(),
        })
        .collect()
}

/// One segment per score section. A score without sections is treated as a
/// single section spanning every bar.
pub fn segment_sections(score: &Score, track: &Track) -> Vec<Segment> {
    let fallback;
    let sections = if score.sections.is_empty() {
        if track.bars.is_empty() {
            return Vec::new();
        }
        fallback = [crate::model::Section {
            name: WHOLE_PIECE_SECTION.to_string(),
            first_bar: 0,
            last_bar: track.bars.len() - 1,
        }];
        &fallback[..]
    } else {
        &score.sections[..]
    };

    sections
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let covered = s.first_bar..(s.last_bar + 1).min(track.bars.len());
            let note_refs = covered
                .clone()
                .flat_map(|b| (0..track.bars[b].notes.len()).map(move |n| NoteRef { bar: b, note: n }))
                .collect();
            Segment {
                level: Level::Section,
                ordinal: i,
                label: s.name.clone(),
                bar_range: Some((s.first_bar, s.last_bar)),
                start_tick: track.bars.get(s.first_bar).map(|b| b.start_tick).unwrap_or(track.end_tick()),
                note_refs,
            }
        })
        .collect()
}

/// Groups onset notes by absolute start tick.
pub fn extract_harmonies(track: &Track) -> Vec<Harmony> {
    let mut by_tick: BTreeMap<u64, Vec<NoteRef>> = BTreeMap::new();
    for (r, note) in track.notes().filter(|(_, n)| n.is_onset()) {
        by_tick.entry(note.start_tick).or_default().push(r);
    }
    by_tick
        .into_iter()
        .map(|(start_tick, note_refs)| Harmony {
            start_tick,
            pitch_classes: note_refs.iter().filter_map(|&r| track.note(r)).map(|n| n.pitch).collect(),
            note_refs,
        })
        .collect()
}

/// Harmonies viewed as segments, for code that is generic over levels.
pub fn harmony_segments(harmonies: &[Harmony]) -> Vec<Segment> {
    harmonies
        .iter()
        .enumerate()
        .map(|(i, h)| Segment {
            level: Level::Harmony,
            ordinal: i,
            label: format!("tick {}", h.start_tick),
            bar_range: None,
            start_tick: h.start_tick,
            note_refs: h.note_refs.clone(),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum NodeLevel {
    Piece,
    Section,
    Bar,
    Harmony,
    Note,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HierarchyNode {
    pub level: NodeLevel,
    /// Position within the level across the whole piece.
    pub ordinal: usize,
    pub label: String,
    pub start_tick: u64,
    pub children: Vec<HierarchyNode>,
}

impl HierarchyNode {
    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(HierarchyNode::node_count).sum::<usize>()
    }

    pub fn count_level(&self, level: NodeLevel) -> usize {
        usize::from(self.level == level)
            + self.children.iter().map(|c| c.count_level(level)).sum::<usize>()
    }
}

pub fn build_hierarchy(score: &Score, track: &Track) -> HierarchyNode {
    let mut harmony_ordinal = 0;
    let mut note_ordinal = 0;
    let sections = segment_sections(score, track)
        .into_iter()
        .map(|section| {
            let (first, last) = section.bar_range.unwrap_or((0, 0));
            let bars = (first..=last)
                .filter_map(|b| track.bars.get(b))
                .map(|bar| {
                    let mut by_tick: BTreeMap<u64, Vec<(u8, usize)>> = BTreeMap::new();
                    for (n, note) in bar.notes.iter().enumerate().filter(|(_, n)| n.is_onset()) {
                        by_tick.entry(note.start_tick).or_default().push((note.pitch, n));
                    }
                    let harmonies = by_tick
                        .into_iter()
                        .map(|(tick, mut members)| {
                            members.sort();
                            let notes = members
                                .into_iter()
                                .map(|(pitch, _)| {
                                    note_ordinal += 1;
                                    HierarchyNode {
                                        level: NodeLevel::Note,
                                        ordinal: note_ordinal - 1,
                                        label: pitch_name(pitch),
                                        start_tick: tick,
                                        children: Vec::new(),
                                    }
                                })
                                .collect();
                            harmony_ordinal += 1;
                            HierarchyNode {
                                level: NodeLevel::Harmony,
                                ordinal: harmony_ordinal - 1,
                                label: tick.to_string(),
                                start_tick: tick,
                                children: notes,
                            }
                        })
                        .collect();
                    HierarchyNode {
                        level: NodeLevel::Bar,
                        ordinal: bar.index,
                        label: format!("bar {}", bar.index + 1),
                        start_tick: bar.start_tick,
                        children: harmonies,
                    }
                })
                .collect();
            HierarchyNode {
                level: NodeLevel::Section,
                ordinal: section.ordinal,
                label: section.label,
                start_tick: section.start_tick,
                children: bars,
            }
        })
        .collect();
    HierarchyNode {
        level: NodeLevel::Piece,
        ordinal: 0,
        label: if score.title.is_empty() { WHOLE_PIECE_SECTION.to_string() } else { score.title.clone() },
        start_tick: 0,
        children: sections,
    }
}
