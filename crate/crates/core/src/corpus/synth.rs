//! Deterministic toy **kern scores in a handful of distinguishable "styles".
//!
//! Styles differ in voice count, rhythm vocabulary, melodic interval size
//! and register, so even simple models can tell them apart.

use crate::encode::{write_atomic, Manifest, ManifestEntry};
use crate::kern::NoteValue;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynthOptions {
    /// Score length in sixteenth notes.
    pub length: u32,
    /// Probability (percent) that an event is a rest.
    pub rest_percent: u32,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            length: 96,
            rest_percent: 8,
        }
    }
}

/// Sixteenth-note counts with a plain kern spelling.
const SPELLINGS: [(u32, &str); 8] = [
    (16, "1"),
    (12, "2."),
    (8, "2"),
    (6, "4."),
    (4, "4"),
    (3, "8."),
    (2, "8"),
    (1, "16"),
];

const RHYTHMS: [&[u32]; 4] = [&[4, 4, 8], &[2, 2, 3, 1], &[4, 2, 6, 2], &[8, 4, 12, 16]];

struct Style {
    voices: usize,
    rhythm: &'static [u32],
    max_step: i32,
    register: i32,
}

fn style(index: usize) -> Style {
    Style {
        voices: 2 + index % 3,
        rhythm: RHYTHMS[index % RHYTHMS.len()],
        max_step: 2 + 3 * (index % 3) as i32,
        register: 26 + 5 * (index % 4) as i32,
    }
}

fn spelling(units: u32) -> (u32, &'static str) {
    *SPELLINGS
        .iter()
        .find(|(u, _)| *u <= units)
        .expect("one sixteenth always fits")
}

/// Kern pitch name for `semitone` above C1.
fn pitch_name(semitone: i32) -> String {
    const NAMES: [(char, &str); 12] = [
        ('c', ""),
        ('c', "#"),
        ('d', ""),
        ('d', "#"),
        ('e', ""),
        ('f', ""),
        ('f', "#"),
        ('g', ""),
        ('g', "#"),
        ('a', ""),
        ('a', "#"),
        ('b', ""),
    ];
    let midi = semitone + 24;
    let octave = midi.div_euclid(12) - 1;
    let (letter, accidental) = NAMES[midi.rem_euclid(12) as usize];
    let letters = if octave >= 4 {
        letter.to_string().repeat((octave - 3) as usize)
    } else {
        letter.to_ascii_uppercase().to_string().repeat((4 - octave) as usize)
    };
    letters + accidental
}

/// One voice as (onset, token) pairs covering `[0, length)`.
fn voice_events(style: &Style, voice: usize, opts: SynthOptions, rng: &mut ChaCha8Rng) -> Vec<(u32, String)> {
    let mut events = Vec::new();
    let mut pitch = style.register + 7 * voice as i32;
    let low = (pitch - 12).max(0);
    let high = pitch + 12;
    let mut t = 0;
    while t < opts.length {
        let want = style.rhythm[rng.gen_range(0..style.rhythm.len())];
        let (units, dur) = spelling(want.min(opts.length - t));
        let token = if rng.gen_range(0..100) < opts.rest_percent {
            format!("{dur}r")
        } else {
            let step = rng.gen_range(-style.max_step..=style.max_step);
            pitch += step;
            if pitch < low || pitch > high {
                pitch -= 2 * step;
            }
            format!("{dur}{}", pitch_name(pitch))
        };
        events.push((t, token));
        t += units;
    }
    events
}

/// A complete kern score for `style_index`, fully determined by `seed`.
pub fn synth_score(style_index: usize, seed: u64, opts: SynthOptions) -> String {
    let style = style(style_index);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (style_index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let voices: Vec<Vec<(u32, String)>> = (0..style.voices)
        .map(|v| voice_events(&style, v, opts, &mut rng))
        .collect();
    let mut onsets: Vec<u32> = voices.iter().flatten().map(|(t, _)| *t).collect();
    onsets.sort_unstable();
    onsets.dedup();

    let join = |cell: &str| vec![cell; style.voices].join("\t");
    let mut out = String::new();
    let _ = writeln!(out, "!!!OTL: synthetic style {style_index}, seed {seed}");
    let _ = writeln!(out, "{}", join("**kern"));
    let _ = writeln!(out, "{}", join("*M4/4"));
    let mut cursors = vec![0usize; style.voices];
    let mut bar = 1;
    for t in onsets {
        if t > 0 && t % 16 == 0 {
            bar += 1;
            let _ = writeln!(out, "{}", join(&format!("={bar}")));
        }
        let cells: Vec<&str> = voices
            .iter()
            .zip(cursors.iter_mut())
            .map(|(events, cursor)| match events.get(*cursor) {
                Some((onset, token)) if *onset == t => {
                    *cursor += 1;
                    token.as_str()
                }
                _ => ".",
            })
            .collect();
        let _ = writeln!(out, "{}", cells.join("\t"));
    }
    let _ = writeln!(out, "{}", join("*-"));
    out
}

/// Writes `per_style` scores for each of `styles` styles under
/// `dir/style-<k>/`, plus `dir/manifest.tsv`, and returns the manifest.
pub fn write_synthetic_corpus(
    dir: &Path,
    styles: usize,
    per_style: usize,
    seed: u64,
    opts: SynthOptions,
) -> std::io::Result<Manifest> {
    // The file lists paths relative to `dir`; the returned manifest has them joined.
    let mut relative = Vec::new();
    for s in 0..styles {
        let composer = format!("style-{s}");
        for i in 0..per_style {
            let rel = Path::new(&composer).join(format!("score-{i:03}.krn"));
            let text = synth_score(s, seed.wrapping_add(i as u64), opts);
            write_atomic(&dir.join(&rel), text.as_bytes())?;
            relative.push(ManifestEntry {
                path: rel,
                composer: composer.clone(),
                duration_scale: NoteValue::from_integer(1),
            });
        }
    }
    let mut manifest = Manifest { entries: relative };
    write_atomic(&dir.join("manifest.tsv"), manifest.to_text().as_bytes())?;
    for entry in &mut manifest.entries {
        entry.path = dir.join(&entry.path);
    }
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kern::{parse_score, pitch_to_semitone};

    #[test]
    fn pitch_names_round_trip() {
        for s in 0..80 {
            assert_eq!(pitch_to_semitone(&pitch_name(s)).unwrap(), s as u32, "{}", pitch_name(s));
        }
        assert_eq!(pitch_name(36), "c");
        assert_eq!(pitch_name(35), "B");
    }

    #[test]
    fn scores_parse_and_are_deterministic() {
        for style in 0..6 {
            let text = synth_score(style, 7, SynthOptions::default());
            assert_eq!(text, synth_score(style, 7, SynthOptions::default()));
            let parsed = parse_score(&text, Path::new("synthetic.krn")).unwrap();
            assert_eq!(parsed.spine_count, 2 + style % 3);
            assert!(parsed.rows.len() >= 96 / 16);
        }
        assert_ne!(
            synth_score(0, 1, SynthOptions::default()),
            synth_score(0, 2, SynthOptions::default())
        );
    }
}
