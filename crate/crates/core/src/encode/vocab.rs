use super::tensor::{BinaryTensor, ScoreTensor};
use super::EncodeError;
use crate::kern::{NoteValue, ParsedScore, SpineCell};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::Path;

const VOCAB_FORMAT: &str = "kernattr-vocab";
const VOCAB_VERSION: u32 = 1;

/// Bijection between note-values and duration channels, plus the pitch range
/// and spine count that fix the tensor shape `T × P × (N + D + 1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NoteValueVocab {
    values: Vec<NoteValue>,
    index: HashMap<NoteValue, usize>,
    /// Pitch range size (N).
    pub n_pitches: usize,
    /// Semitones above C1 of pitch channel 0.
    pub pitch_base: u32,
    /// Maximum spine count (P).
    pub max_spines: usize,
}

impl NoteValueVocab {
    /// Builds a vocabulary from note-values listed in index order.
    pub fn new(
        values: Vec<NoteValue>,
        n_pitches: usize,
        pitch_base: u32,
        max_spines: usize,
    ) -> Result<Self, EncodeError> {
        if values.is_empty() || n_pitches == 0 || max_spines == 0 {
            return Err(EncodeError::EmptyVocab);
        }
        let mut index = HashMap::with_capacity(values.len());
        for (i, v) in values.iter().enumerate() {
            if *v <= NoteValue::from_integer(0) {
                return Err(EncodeError::Format(format!("non-positive note-value {v}")));
            }
            if index.insert(*v, i).is_some() {
                return Err(EncodeError::Format(format!("note-value {v} listed twice")));
            }
        }
        Ok(Self {
            values,
            index,
            n_pitches,
            pitch_base,
            max_spines,
        })
    }

    /// Number of distinct note-values (D).
    pub fn n_values(&self) -> usize {
        self.values.len()
    }

    /// Channel count N + D + 1.
    pub fn channels(&self) -> usize {
        self.n_pitches + self.values.len() + 1
    }

    pub fn continuation_channel(&self) -> usize {
        self.n_pitches + self.values.len()
    }

    pub fn value_channel(&self, index: usize) -> usize {
        self.n_pitches + index
    }

    pub fn values(&self) -> &[NoteValue] {
        &self.values
    }

    pub fn index_of(&self, value: NoteValue) -> Option<usize> {
        self.index.get(&value).copied()
    }

    /// Index of the vocabulary value closest to `value` (lowest index on ties).
    pub fn nearest_index(&self, value: NoteValue) -> usize {
        let distance = |v: &NoteValue| if *v > value { *v - value } else { value - *v };
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if distance(v) < distance(&self.values[best]) {
                best = i;
            }
        }
        best
    }

    /// Pitch channel for a pitch given in semitones above C1.
    pub fn pitch_channel(&self, pitch: u32) -> Option<usize> {
        let offset = pitch.checked_sub(self.pitch_base)? as usize;
        (offset < self.n_pitches).then_some(offset)
    }

    pub fn to_toml(&self) -> String {
        let file = VocabFile {
            format: VOCAB_FORMAT.into(),
            version: VOCAB_VERSION,
            n_pitches: self.n_pitches,
            pitch_base: self.pitch_base,
            max_spines: self.max_spines,
            n_values: self.values.len(),
            note_values: self
                .values
                .iter()
                .map(|v| format!("{}/{}", v.numer(), v.denom()))
                .collect(),
        };
        toml::to_string(&file).expect("vocab serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, EncodeError> {
        let file: VocabFile =
            toml::from_str(text).map_err(|e| EncodeError::Format(format!("vocab file: {e}")))?;
        if file.format != VOCAB_FORMAT || file.version != VOCAB_VERSION {
            return Err(EncodeError::Format(format!(
                "unsupported vocab format {} v{}",
                file.format, file.version
            )));
        }
        if file.n_values != file.note_values.len() {
            return Err(EncodeError::Format(format!(
                "vocab declares {} note-values but lists {}",
                file.n_values,
                file.note_values.len()
            )));
        }
        let values = file
            .note_values
            .iter()
            .map(|s| parse_ratio(s))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(values, file.n_pitches, file.pitch_base, file.max_spines)
    }

    pub fn load(path: &Path) -> Result<Self, EncodeError> {
        let text = std::fs::read_to_string(path).map_err(|e| EncodeError::io(path, e))?;
        Self::from_toml(&text)
    }
}

/// Parses "num/den" or a bare integer into a positive rational.
pub fn parse_ratio(text: &str) -> Result<NoteValue, EncodeError> {
    let bad = || EncodeError::Format(format!("bad rational \"{text}\""));
    let (num, den) = match text.trim().split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text.trim(), "1"),
    };
    let num: u32 = num.parse().map_err(|_| bad())?;
    let den: u32 = den.parse().map_err(|_| bad())?;
    if num == 0 || den == 0 {
        return Err(bad());
    }
    Ok(NoteValue::new(num, den))
}

#[derive(Debug, Serialize, Deserialize)]
struct VocabFile {
    format: String,
    version: u32,
    n_pitches: usize,
    pitch_base: u32,
    max_spines: usize,
    n_values: usize,
    note_values: Vec<String>,
}

/// Accumulates note-values (first-encounter order), pitch extremes and the
/// widest spine count over a corpus.
#[derive(Debug, Default)]
pub struct VocabBuilder {
    values: Vec<NoteValue>,
    seen: HashMap<NoteValue, usize>,
    min_pitch: Option<u32>,
    max_pitch: Option<u32>,
    max_spines: usize,
}

impl VocabBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_score(&mut self, score: &ParsedScore, duration_scale: NoteValue) {
        self.max_spines = self.max_spines.max(score.spine_count);
        for value in score.durations() {
            let scaled = value * duration_scale;
            if !self.seen.contains_key(&scaled) {
                self.seen.insert(scaled, self.values.len());
                self.values.push(scaled);
            }
        }
        for pitch in score.pitches() {
            self.min_pitch = Some(self.min_pitch.map_or(pitch, |m| m.min(pitch)));
            self.max_pitch = Some(self.max_pitch.map_or(pitch, |m| m.max(pitch)));
        }
    }

    pub fn finish(self) -> Result<NoteValueVocab, EncodeError> {
        let (pitch_base, n_pitches) = match (self.min_pitch, self.max_pitch) {
            (Some(lo), Some(hi)) => (lo, (hi - lo + 1) as usize),
            // A corpus of rests only still needs one pitch channel.
            _ => (0, 1),
        };
        NoteValueVocab::new(self.values, n_pitches, pitch_base, self.max_spines.max(1))
    }
}

/// What to do with a note-value missing from the vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UnknownValuePolicy {
    #[default]
    Reject,
    /// Map it to the nearest vocabulary value.
    Nearest,
}

/// Encodes a parsed score as a binary tensor over the vocabulary's channels.
///
/// Notes set one bit per pitch plus one duration bit, rests set only the
/// duration bit, continuations set only channel N + D. Inactive cells and
/// spines past the score's own spine count stay zero.
pub fn encode_score(
    parsed: &ParsedScore,
    vocab: &NoteValueVocab,
    duration_scale: NoteValue,
    policy: UnknownValuePolicy,
) -> Result<ScoreTensor, EncodeError> {
    if parsed.spine_count > vocab.max_spines {
        return Err(EncodeError::SpineOverflow {
            path: parsed.source_path.clone(),
            spines: parsed.spine_count,
            max: vocab.max_spines,
        });
    }
    let value_channel = |duration: NoteValue| -> Result<usize, EncodeError> {
        let scaled = duration * duration_scale;
        let index = match (vocab.index_of(scaled), policy) {
            (Some(i), _) => i,
            (None, UnknownValuePolicy::Nearest) => vocab.nearest_index(scaled),
            (None, UnknownValuePolicy::Reject) => {
                return Err(EncodeError::UnknownValue {
                    path: parsed.source_path.clone(),
                    value: format!("{}/{}", scaled.numer(), scaled.denom()),
                })
            }
        };
        Ok(vocab.value_channel(index))
    };

    let spines = vocab.max_spines;
    let mut cells: Vec<Vec<usize>> = Vec::with_capacity(parsed.rows.len() * spines);
    for row in &parsed.rows {
        for p in 0..spines {
            let mut active = Vec::new();
            match row.cells.get(p) {
                Some(SpineCell::Continuation) => active.push(vocab.continuation_channel()),
                Some(SpineCell::Rest { duration }) => active.push(value_channel(*duration)?),
                Some(SpineCell::Notes { duration, pitches }) => {
                    for &pitch in pitches {
                        let channel =
                            vocab
                                .pitch_channel(pitch)
                                .ok_or_else(|| EncodeError::UnknownPitch {
                                    path: parsed.source_path.clone(),
                                    pitch,
                                })?;
                        active.push(channel);
                    }
                    active.push(value_channel(*duration)?);
                }
                Some(SpineCell::Inactive) | None => {}
            }
            cells.push(active);
        }
    }
    Ok(ScoreTensor {
        data: BinaryTensor::from_cells(parsed.rows.len(), spines, vocab.channels(), cells),
        label: None,
    })
}

/// A cell recovered from a score tensor, with note-values as vocabulary indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecodedCell {
    Empty,
    Continuation,
    Rest { value: usize },
    Notes { value: usize, pitches: Vec<u32> },
}

/// Inverse of [`encode_score`]: recovers the cell kind, pitches (semitones
/// above C1) and note-value index of every (row, spine).
pub fn decode_score(
    tensor: &ScoreTensor,
    vocab: &NoteValueVocab,
) -> Result<Vec<Vec<DecodedCell>>, EncodeError> {
    let data = &tensor.data;
    let n = vocab.n_pitches;
    let cont = vocab.continuation_channel();
    let mut rows = Vec::with_capacity(data.rows());
    for t in 0..data.rows() {
        let mut row = Vec::with_capacity(data.spines());
        for p in 0..data.spines() {
            let active = data.cell(t, p);
            let pitches: Vec<u32> = active
                .iter()
                .map(|&c| c as usize)
                .filter(|&c| c < n)
                .map(|c| c as u32 + vocab.pitch_base)
                .collect();
            let values: Vec<usize> = active
                .iter()
                .map(|&c| c as usize)
                .filter(|&c| c >= n && c < cont)
                .map(|c| c - n)
                .collect();
            let continued = active.last().is_some_and(|&c| c as usize == cont);
            let cell = match (continued, values.as_slice(), pitches.is_empty()) {
                (false, [], true) => DecodedCell::Empty,
                (true, [], true) => DecodedCell::Continuation,
                (false, [v], true) => DecodedCell::Rest { value: *v },
                (false, [v], false) => DecodedCell::Notes { value: *v, pitches },
                _ => {
                    return Err(EncodeError::Format(format!(
                        "cell ({t}, {p}) has an impossible channel combination"
                    )))
                }
            };
            row.push(cell);
        }
        rows.push(row);
    }
    Ok(rows)
}
