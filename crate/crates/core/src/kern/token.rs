//! Token-level grammar for **kern data cells: pitches, note-values, rests.

use num_rational::Ratio;
use thiserror::Error;

/// A note-value expressed as an exact fraction of a whole note.
pub type NoteValue = Ratio<u32>;

/// Semitone index of C1 in MIDI numbering. All pitch indices are relative to it.
pub const C1_MIDI: i32 = 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TokenError {
    #[error("{0}")]
    Syntax(String),
    #[error("pitch lies {0} semitones below C1")]
    Range(i32),
}

fn syntax(msg: impl Into<String>) -> TokenError {
    TokenError::Syntax(msg.into())
}

fn letter_semitone(letter: char) -> Option<i32> {
    match letter.to_ascii_lowercase() {
        'c' => Some(0),
        'd' => Some(2),
        'e' => Some(4),
        'f' => Some(5),
        'g' => Some(7),
        'a' => Some(9),
        'b' => Some(11),
        _ => None,
    }
}

/// Converts a **kern pitch token ("a", "ff#", "BB-") to semitones above C1.
///
/// Lowercase `c` is middle C (C4) and each repetition of a lowercase letter
/// raises an octave; uppercase `C` is C3 and each repetition lowers one.
pub fn pitch_to_semitone(token: &str) -> Result<u32, TokenError> {
    let mut chars = token.chars().peekable();
    let letter = chars
        .next()
        .ok_or_else(|| syntax("empty pitch token"))?;
    let base = letter_semitone(letter)
        .ok_or_else(|| syntax(format!("'{letter}' is not a pitch letter")))?;
    let mut repeats = 1i32;
    while chars.peek() == Some(&letter) {
        chars.next();
        repeats += 1;
    }
    let octave = if letter.is_ascii_lowercase() {
        3 + repeats
    } else {
        4 - repeats
    };
    let mut accidental = 0i32;
    for c in chars {
        match c {
            '#' => accidental += 1,
            '-' => accidental -= 1,
            'n' => {}
            other => {
                return Err(syntax(format!(
                    "unexpected '{other}' in pitch token \"{token}\""
                )))
            }
        }
    }
    // MIDI: C4 = 60 = 12 * (4 + 1)
    let midi = 12 * (octave + 1) + base + accidental;
    let above_c1 = midi - C1_MIDI;
    u32::try_from(above_c1).map_err(|_| TokenError::Range(above_c1))
}

/// Parses a **kern duration ("8", "2..", "0", "3%2") into a fraction of a whole note.
///
/// `0` is a breve, `00` a long and `000` a maxima. Each augmentation dot adds
/// half of the previously added amount.
pub fn parse_duration(token: &str) -> Result<NoteValue, TokenError> {
    let digits_end = token
        .find(|c: char| !c.is_ascii_digit())
        .unwrap_or(token.len());
    let (digits, rest) = token.split_at(digits_end);
    if digits.is_empty() {
        return Err(syntax(format!("duration \"{token}\" has no digits")));
    }
    let (base, dots) = if let Some(after) = rest.strip_prefix('%') {
        let den_end = after
            .find(|c: char| !c.is_ascii_digit())
            .unwrap_or(after.len());
        let (den, dots) = after.split_at(den_end);
        let num: u32 = digits
            .parse()
            .map_err(|_| syntax(format!("bad duration \"{token}\"")))?;
        let den: u32 = den
            .parse()
            .map_err(|_| syntax(format!("bad duration \"{token}\"")))?;
        if num == 0 || den == 0 {
            return Err(syntax(format!("zero in rational duration \"{token}\"")));
        }
        (Ratio::new(den, num), dots)
    } else if digits.bytes().all(|b| b == b'0') {
        if digits.len() > 3 {
            return Err(syntax(format!("duration \"{token}\" is longer than a maxima")));
        }
        (Ratio::from_integer(1u32 << digits.len()), rest)
    } else {
        if digits.starts_with('0') {
            return Err(syntax(format!("leading zero in duration \"{token}\"")));
        }
        let n: u32 = digits
            .parse()
            .map_err(|_| syntax(format!("bad duration \"{token}\"")))?;
        (Ratio::new(1, n), rest)
    };
    if !dots.bytes().all(|b| b == b'.') {
        return Err(syntax(format!("unexpected characters in duration \"{token}\"")));
    }
    let mut value = base;
    let mut increment = base;
    for _ in 0..dots.len() {
        increment /= 2;
        value += increment;
    }
    Ok(value)
}

/// One parsed sub-token of a data cell (a single note or rest of a chord).
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Event {
    Note { duration: NoteValue, pitch: u32 },
    Rest { duration: NoteValue },
    /// Grace note without a notated duration; carries nothing encodable.
    Grace,
}

fn is_pitch_letter(c: char) -> bool {
    matches!(c, 'a'..='g' | 'A'..='G')
}

/// Parses one space-free sub-token of a data cell, stripping every marking
/// that is not pitch, note-value, rest or grace.
pub(crate) fn parse_event(token: &str) -> Result<Event, TokenError> {
    if !token.is_ascii() {
        return Err(syntax(format!("non-ASCII character in \"{token}\"")));
    }
    let bytes = token.as_bytes();
    let mut duration: Option<&str> = None;
    let mut pitch: Option<&str> = None;
    let mut rest = false;
    let mut grace = false;
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'%') {
                i += 1;
            }
            while i < bytes.len() && bytes[i] == b'.' {
                i += 1;
            }
            if duration.replace(&token[start..i]).is_some() {
                return Err(syntax(format!("two durations in \"{token}\"")));
            }
            continue;
        }
        if is_pitch_letter(c) {
            let start = i;
            while i < bytes.len() && bytes[i] as char == c {
                i += 1;
            }
            while i < bytes.len() && matches!(bytes[i], b'#' | b'-' | b'n') {
                i += 1;
            }
            if pitch.replace(&token[start..i]).is_some() {
                return Err(syntax(format!("two pitches in \"{token}\"")));
            }
            continue;
        }
        match c {
            'r' => rest = true,
            'q' | 'Q' => grace = true,
            '.' => return Err(syntax(format!("stray '.' in \"{token}\""))),
            '#' | '-' | 'n' => {
                // Accidental not attached to a pitch letter, e.g. "4#".
                return Err(syntax(format!("dangling accidental in \"{token}\"")));
            }
            _ => {}
        }
        i += 1;
    }
    let duration = match duration {
        Some(d) => Some(parse_duration(d)?),
        None if grace => return Ok(Event::Grace),
        None => return Err(syntax(format!("\"{token}\" has no duration"))),
    };
    let duration = duration.expect("checked above");
    if rest {
        return Ok(Event::Rest { duration });
    }
    match pitch {
        Some(p) => Ok(Event::Note {
            duration,
            pitch: pitch_to_semitone(p)?,
        }),
        None => Err(syntax(format!("\"{token}\" is neither a note nor a rest"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: u32, d: u32) -> NoteValue {
        Ratio::new(n, d)
    }

    #[test]
    fn pitch_examples() {
        assert_eq!(pitch_to_semitone("f"), Ok(41));
        assert_eq!(pitch_to_semitone("C"), Ok(24));
        // F#5 = MIDI 78
        assert_eq!(pitch_to_semitone("ff#"), Ok(54));
        assert_eq!(pitch_to_semitone("c"), Ok(36));
        assert_eq!(pitch_to_semitone("a"), Ok(45));
        assert_eq!(pitch_to_semitone("CCC"), Ok(0));
        assert_eq!(pitch_to_semitone("BB-"), Ok(22));
        assert_eq!(pitch_to_semitone("en"), Ok(40));
        assert_eq!(pitch_to_semitone("g##"), Ok(45));
    }

    #[test]
    fn pitch_errors() {
        assert_eq!(pitch_to_semitone("CCC-"), Err(TokenError::Range(-1)));
        assert_eq!(pitch_to_semitone("AAAA"), Err(TokenError::Range(-3)));
        assert!(matches!(pitch_to_semitone(""), Err(TokenError::Syntax(_))));
        assert!(matches!(pitch_to_semitone("h"), Err(TokenError::Syntax(_))));
        assert!(matches!(pitch_to_semitone("cd"), Err(TokenError::Syntax(_))));
        assert!(matches!(pitch_to_semitone("c#x"), Err(TokenError::Syntax(_))));
    }

    #[test]
    fn duration_examples() {
        assert_eq!(parse_duration("8"), Ok(r(1, 8)));
        assert_eq!(parse_duration("4"), Ok(r(1, 4)));
        assert_eq!(parse_duration("2.."), Ok(r(7, 8)));
        assert_eq!(parse_duration("0"), Ok(r(2, 1)));
        assert_eq!(parse_duration("00"), Ok(r(4, 1)));
        assert_eq!(parse_duration("0."), Ok(r(3, 1)));
        assert_eq!(parse_duration("3"), Ok(r(1, 3)));
        assert_eq!(parse_duration("3%2"), Ok(r(2, 3)));
        assert_eq!(parse_duration("16."), Ok(r(3, 32)));
    }

    #[test]
    fn duration_errors() {
        for bad in ["", ".", "4x", "08", "0000", "3%", "%2", "0%2", "4.x"] {
            assert!(
                matches!(parse_duration(bad), Err(TokenError::Syntax(_))),
                "{bad:?} should be rejected"
            );
        }
    }

    #[test]
    fn events_strip_markings() {
        assert_eq!(
            parse_event("8a"),
            Ok(Event::Note { duration: r(1, 8), pitch: 45 })
        );
        assert_eq!(
            parse_event("(8ff#L'"),
            Ok(Event::Note { duration: r(1, 8), pitch: 54 })
        );
        assert_eq!(
            parse_event("[4.cc-TJ]"),
            Ok(Event::Note { duration: r(3, 8), pitch: 47 })
        );
        assert_eq!(parse_event("2..r"), Ok(Event::Rest { duration: r(7, 8) }));
        assert_eq!(parse_event("4ryy"), Ok(Event::Rest { duration: r(1, 4) }));
        // Rests carrying a display pitch are still rests.
        assert_eq!(parse_event("1rG"), Ok(Event::Rest { duration: r(1, 1) }));
        assert_eq!(parse_event("qf#"), Ok(Event::Grace));
        assert_eq!(parse_event("Qcc"), Ok(Event::Grace));
    }

    #[test]
    fn event_errors() {
        for bad in ["c", "4", "4cd", "4c8", "4c.", "4#", "4c\u{e9}"] {
            assert!(parse_event(bad).is_err(), "{bad:?} should be rejected");
        }
    }
}
