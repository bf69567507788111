//! Parser for the subset of the Humdrum **kern format that carries pitch,
//! note-value and voicing. Everything else in a score is skipped.

mod token;

pub use token::{parse_duration, pitch_to_semitone, NoteValue, TokenError, C1_MIDI};

use std::path::Path;
use thiserror::Error;
use token::{parse_event, Event};

/// Maximum concurrent spine count used when nothing else is configured.
pub const DEFAULT_MAX_SPINES: usize = 6;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum KernError {
    #[error("line {line}, column {column}: {reason}")]
    Syntax {
        line: usize,
        column: usize,
        reason: String,
    },
    #[error("line {line}, column {column}: pitch lies {semitones} semitones below C1")]
    Range {
        line: usize,
        column: usize,
        semitones: i32,
    },
    #[error("line {line}: unsupported: {reason}")]
    UnsupportedFeature { line: usize, reason: String },
}

/// Content of one spine on one data row.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SpineCell {
    /// A '.' null token: the previous note or rest is still sounding.
    Continuation,
    Rest { duration: NoteValue },
    /// One or more simultaneous pitches (a chord) sharing a note-value.
    Notes { duration: NoteValue, pitches: Vec<u32> },
    /// No spine occupies this column on this row (before a split or after a merge).
    Inactive,
}

impl SpineCell {
    pub fn duration(&self) -> Option<NoteValue> {
        match self {
            SpineCell::Rest { duration } | SpineCell::Notes { duration, .. } => Some(*duration),
            _ => None,
        }
    }

    pub fn pitches(&self) -> &[u32] {
        match self {
            SpineCell::Notes { pitches, .. } => pitches,
            _ => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DataRow {
    pub cells: Vec<SpineCell>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedScore {
    pub rows: Vec<DataRow>,
    pub spine_count: usize,
    pub source_path: String,
}

impl ParsedScore {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// All (cell, pitch) values in the score, in row-major order.
    pub fn pitches(&self) -> impl Iterator<Item = u32> + '_ {
        self.rows
            .iter()
            .flat_map(|r| r.cells.iter())
            .flat_map(|c| c.pitches().iter().copied())
    }

    pub fn durations(&self) -> impl Iterator<Item = NoteValue> + '_ {
        self.rows
            .iter()
            .flat_map(|r| r.cells.iter())
            .filter_map(SpineCell::duration)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParseOptions {
    /// Highest number of simultaneous kern columns accepted (P).
    pub max_spines: usize,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self {
            max_spines: DEFAULT_MAX_SPINES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SpineKind {
    Kern,
    Other,
    /// Added by `*+`; the next interpretation line names its type.
    Pending,
}

#[derive(Debug, Clone, Copy)]
struct Spine {
    kind: SpineKind,
    column: Option<usize>,
}

/// Tracks live spines across manipulators and hands kern spines stable columns.
struct SpineMap {
    spines: Vec<Spine>,
    used: Vec<bool>,
    max_spines: usize,
    width: usize,
}

impl SpineMap {
    fn new(max_spines: usize) -> Self {
        Self {
            spines: Vec::new(),
            used: Vec::new(),
            max_spines,
            width: 0,
        }
    }

    fn claim_column(&mut self, line: usize) -> Result<usize, KernError> {
        let column = match self.used.iter().position(|u| !u) {
            Some(free) => free,
            None => {
                self.used.push(false);
                self.used.len() - 1
            }
        };
        if column >= self.max_spines {
            return Err(KernError::UnsupportedFeature {
                line,
                reason: format!(
                    "more than {} concurrent kern spines",
                    self.max_spines
                ),
            });
        }
        self.used[column] = true;
        self.width = self.width.max(column + 1);
        Ok(column)
    }

    fn release(&mut self, spine: Spine) {
        if let Some(c) = spine.column {
            self.used[c] = false;
        }
    }

    fn set_kind(&mut self, index: usize, kind: SpineKind, line: usize) -> Result<(), KernError> {
        let old = self.spines[index];
        if old.kind == SpineKind::Kern && kind != SpineKind::Kern {
            self.release(old);
        }
        let column = if kind == SpineKind::Kern {
            match old.column {
                Some(c) => Some(c),
                None => Some(self.claim_column(line)?),
            }
        } else {
            None
        };
        self.spines[index] = Spine { kind, column };
        Ok(())
    }

    fn exclusive(&mut self, tokens: &[&str], line: usize) -> Result<(), KernError> {
        for (i, tok) in tokens.iter().enumerate() {
            let kind = if *tok == "**kern" {
                SpineKind::Kern
            } else {
                SpineKind::Other
            };
            self.set_kind(i, kind, line)?;
        }
        Ok(())
    }

    fn interpret(&mut self, tokens: &[&str], line: usize) -> Result<(), KernError> {
        if tokens.len() != self.spines.len() {
            return Err(KernError::Syntax {
                line,
                column: 1,
                reason: format!(
                    "interpretation line has {} tokens for {} spines",
                    tokens.len(),
                    self.spines.len()
                ),
            });
        }
        let mut next = Vec::with_capacity(self.spines.len() + 2);
        let mut retyped = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            let spine = self.spines[i];
            match tokens[i] {
                "*^" => {
                    next.push(spine);
                    let column = match spine.kind {
                        SpineKind::Kern => Some(self.claim_column(line)?),
                        _ => None,
                    };
                    next.push(Spine {
                        kind: spine.kind,
                        column,
                    });
                }
                "*v" => {
                    let mut j = i + 1;
                    while j < tokens.len() && tokens[j] == "*v" {
                        j += 1;
                    }
                    if j - i < 2 {
                        return Err(KernError::UnsupportedFeature {
                            line,
                            reason: "lone *v merge manipulator".into(),
                        });
                    }
                    for merged in &self.spines[i + 1..j] {
                        if let Some(c) = merged.column {
                            self.used[c] = false;
                        }
                    }
                    next.push(spine);
                    i = j;
                    continue;
                }
                "*-" => self.release(spine),
                "*+" => {
                    next.push(spine);
                    next.push(Spine {
                        kind: SpineKind::Pending,
                        column: None,
                    });
                }
                "*x" => {
                    if i + 1 >= tokens.len() || tokens[i + 1] != "*x" {
                        return Err(KernError::UnsupportedFeature {
                            line,
                            reason: "unpaired *x exchange manipulator".into(),
                        });
                    }
                    next.push(self.spines[i + 1]);
                    next.push(spine);
                    i += 2;
                    continue;
                }
                tok if tok.starts_with("**") => {
                    next.push(spine);
                    let kind = if tok == "**kern" {
                        SpineKind::Kern
                    } else {
                        SpineKind::Other
                    };
                    retyped.push((next.len() - 1, kind));
                }
                _ => next.push(spine),
            }
            i += 1;
        }
        self.spines = next;
        for (index, kind) in retyped {
            self.set_kind(index, kind, line)?;
        }
        Ok(())
    }
}

fn is_structural(token: &str) -> bool {
    token == "."
}

/// Parses **kern text with default options.
pub fn parse_score(text: &str, source_path: impl AsRef<Path>) -> Result<ParsedScore, KernError> {
    parse_score_with(text, source_path, ParseOptions::default())
}

/// Parses **kern text into rows of per-spine note, rest and continuation cells.
///
/// Barlines, interpretations, comments and every non-**kern spine produce no
/// data. Lines whose kern cells are all null tokens (or grace notes only) are
/// structural and emit no row.
pub fn parse_score_with(
    text: &str,
    source_path: impl AsRef<Path>,
    options: ParseOptions,
) -> Result<ParsedScore, KernError> {
    let mut map = SpineMap::new(options.max_spines);
    let mut rows: Vec<Vec<(usize, SpineCell)>> = Vec::new();
    let mut started = false;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.trim_end_matches('\r');
        if content.is_empty() || content.starts_with('!') {
            continue;
        }
        let tokens: Vec<&str> = content.split('\t').collect();
        if !started {
            if !content.starts_with("**") {
                return Err(KernError::Syntax {
                    line,
                    column: 1,
                    reason: "data before the exclusive interpretation line".into(),
                });
            }
            map.spines = vec![
                Spine {
                    kind: SpineKind::Other,
                    column: None,
                };
                tokens.len()
            ];
            map.exclusive(&tokens, line)?;
            started = true;
            continue;
        }
        if map.spines.is_empty() {
            // All spines terminated; anything further is trailing material.
            continue;
        }
        if content.starts_with('*') {
            map.interpret(&tokens, line)?;
            continue;
        }
        if content.starts_with('=') {
            continue;
        }
        if tokens.len() != map.spines.len() {
            return Err(KernError::Syntax {
                line,
                column: 1,
                reason: format!(
                    "data line has {} tokens for {} spines",
                    tokens.len(),
                    map.spines.len()
                ),
            });
        }

        let mut cells = Vec::new();
        let mut has_event = false;
        let mut column_offset = 1;
        for (spine, tok) in map.spines.iter().zip(&tokens) {
            let start_col = column_offset;
            column_offset += tok.len() + 1;
            let Some(column) = spine.column else { continue };
            if spine.kind != SpineKind::Kern {
                continue;
            }
            let cell = if is_structural(tok) {
                SpineCell::Continuation
            } else {
                let cell = parse_cell(tok, line, start_col)?;
                if !matches!(cell, SpineCell::Continuation) {
                    has_event = true;
                }
                cell
            };
            cells.push((column, cell));
        }
        if has_event {
            rows.push(cells);
        }
    }

    if !started {
        return Err(KernError::Syntax {
            line: 1,
            column: 1,
            reason: "no exclusive interpretation line (e.g. **kern)".into(),
        });
    }
    let spine_count = map.width.max(1);
    let rows = rows
        .into_iter()
        .map(|assigned| {
            let mut cells = vec![SpineCell::Inactive; spine_count];
            for (column, cell) in assigned {
                cells[column] = cell;
            }
            DataRow { cells }
        })
        .collect();
    Ok(ParsedScore {
        rows,
        spine_count,
        source_path: source_path.as_ref().display().to_string(),
    })
}

fn parse_cell(token: &str, line: usize, column: usize) -> Result<SpineCell, KernError> {
    let mut duration = None;
    let mut pitches = Vec::new();
    let mut is_rest = false;
    for sub in token.split(' ').filter(|s| !s.is_empty()) {
        let event = parse_event(sub).map_err(|e| match e {
            TokenError::Syntax(reason) => KernError::Syntax {
                line,
                column,
                reason,
            },
            TokenError::Range(semitones) => KernError::Range {
                line,
                column,
                semitones,
            },
        })?;
        match event {
            Event::Grace => {}
            Event::Rest { duration: d } => {
                is_rest = true;
                duration.get_or_insert(d);
            }
            Event::Note { duration: d, pitch } => {
                // Chord members normally share one value; the first one wins.
                duration.get_or_insert(d);
                if !pitches.contains(&pitch) {
                    pitches.push(pitch);
                }
            }
        }
    }
    Ok(match duration {
        None => SpineCell::Continuation,
        Some(duration) if pitches.is_empty() && is_rest => SpineCell::Rest { duration },
        Some(duration) => SpineCell::Notes { duration, pitches },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    fn notes(d: u32, pitches: &[&str]) -> SpineCell {
        SpineCell::Notes {
            duration: Ratio::new(1, d),
            pitches: pitches.iter().map(|p| pitch_to_semitone(p).unwrap()).collect(),
        }
    }

    const EXCERPT: &str = "**kern\t**kern\t**kern\t**kern
2..r\t2..r\t2..r\t2..r
8r\t8r\t8r\t8dd
=1\t=1\t=1\t=1
1r\t1r\t8r\t4dd
.\t.\t8f# 8a\t.
.\t.\t8a 8f#\t8ff#
.\t.\t8a 8f#\t16ee
.\t.\t.\t16dd
*-\t*-\t*-\t*-
";

    #[test]
    fn excerpt_rows() {
        let score = parse_score(EXCERPT, "excerpt.krn").unwrap();
        assert_eq!(score.spine_count, 4);
        assert_eq!(score.rows.len(), 7);
        let fifth = &score.rows[4].cells;
        assert_eq!(fifth[0], SpineCell::Continuation);
        assert_eq!(fifth[1], SpineCell::Continuation);
        assert_eq!(fifth[2], notes(8, &["a", "f#"]));
        assert_eq!(fifth[3], notes(8, &["ff#"]));
    }

    #[test]
    fn single_rest() {
        let score = parse_score("**kern\n4r\n*-\n", "x").unwrap();
        assert_eq!(score.spine_count, 1);
        assert_eq!(
            score.rows,
            vec![DataRow {
                cells: vec![SpineCell::Rest {
                    duration: Ratio::new(1, 4)
                }]
            }]
        );
    }

    #[test]
    fn two_spine_chord() {
        let score = parse_score("**kern\t**kern\n8c\t8e 8g\n*-\t*-\n", "x").unwrap();
        assert_eq!(score.rows.len(), 1);
        let cells = &score.rows[0].cells;
        assert_eq!(
            cells[0],
            SpineCell::Notes {
                duration: Ratio::new(1, 8),
                pitches: vec![36]
            }
        );
        assert_eq!(
            cells[1],
            SpineCell::Notes {
                duration: Ratio::new(1, 8),
                pitches: vec![40, 43]
            }
        );
    }

    #[test]
    fn skips_comments_interpretations_and_other_spines() {
        let text = "!!!COM: Nobody\n**kern\t**dynam\t**kern\n*M4/4\t*\t*clefG2\n\
                    !local\t!\t!\n4c\tp\t4e\n.\tf\t.\n=2\t=2\t=2\n*-\t*-\t*-\n";
        let score = parse_score(text, "x").unwrap();
        assert_eq!(score.spine_count, 2);
        // The dynamics-only line carries no kern event.
        assert_eq!(score.rows.len(), 1);
        assert_eq!(score.rows[0].cells[1], notes(4, &["e"]));
    }

    #[test]
    fn ties_are_fresh_events() {
        let score = parse_score("**kern\n[4c\n4c]\n.\n8d\n*-\n", "x").unwrap();
        assert_eq!(score.rows.len(), 3);
        assert_eq!(score.rows[1].cells[0], notes(4, &["c"]));
    }

    #[test]
    fn grace_only_line_is_dropped() {
        let score = parse_score("**kern\t**kern\nqc\t.\n4c\t4d\n*-\t*-\n", "x").unwrap();
        assert_eq!(score.rows.len(), 1);
    }

    #[test]
    fn split_and_merge_keep_stable_columns() {
        let text = "**kern\t**kern\n4C\t4c\n*^\t*\n4D\t4F\t4d\n*v\t*v\t*\n4E\t4e\n*-\t*-\n";
        let score = parse_score(text, "x").unwrap();
        assert_eq!(score.spine_count, 3);
        let first = &score.rows[0].cells;
        assert_eq!(first[2], SpineCell::Inactive);
        let split = &score.rows[1].cells;
        assert_eq!(split[0], notes(4, &["D"]));
        assert_eq!(split[1], notes(4, &["d"]));
        assert_eq!(split[2], notes(4, &["F"]));
        let merged = &score.rows[2].cells;
        assert_eq!(merged[0], notes(4, &["E"]));
        assert_eq!(merged[1], notes(4, &["e"]));
        assert_eq!(merged[2], SpineCell::Inactive);
    }

    #[test]
    fn exchange_swaps_positions_not_columns() {
        let text = "**kern\t**kern\n4c\t4d\n*x\t*x\n4e\t4f\n*-\t*-\n";
        let score = parse_score(text, "x").unwrap();
        assert_eq!(score.rows[1].cells[0], notes(4, &["f"]));
        assert_eq!(score.rows[1].cells[1], notes(4, &["e"]));
    }

    #[test]
    fn too_many_spines() {
        let header = ["**kern"; 7].join("\t");
        let data = ["4c"; 7].join("\t");
        let err = parse_score(&format!("{header}\n{data}\n"), "x").unwrap_err();
        assert!(matches!(err, KernError::UnsupportedFeature { line: 1, .. }));

        let text = "**kern\n*^\n*^\t*\n4c\t4d\t4e\n";
        let err = parse_score_with(text, "x", ParseOptions { max_spines: 2 }).unwrap_err();
        assert!(matches!(err, KernError::UnsupportedFeature { line: 3, .. }));
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_score("**kern\t**kern\n4c\t4x\n", "x").unwrap_err();
        assert_eq!(
            err,
            KernError::Syntax {
                line: 2,
                column: 4,
                reason: "\"4x\" is neither a note nor a rest".into()
            }
        );
        let err = parse_score("**kern\n4c\t4d\n", "x").unwrap_err();
        assert!(matches!(err, KernError::Syntax { line: 2, .. }));
        let err = parse_score("4c\n", "x").unwrap_err();
        assert!(matches!(err, KernError::Syntax { line: 1, .. }));
        let err = parse_score("**kern\n4CCC-\n", "x").unwrap_err();
        assert!(matches!(err, KernError::Range { line: 2, semitones: -1, .. }));
    }
}
