use super::vocab::parse_ratio;
use super::EncodeError;
use crate::kern::NoteValue;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// One score listed in a manifest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    /// Lowercase composer slug.
    pub composer: String,
    /// Factor applied to every note-value before vocabulary lookup.
    pub duration_scale: NoteValue,
}

/// Ordered list of scores with composer labels.
///
/// The text form is tab-separated, one score per line:
/// `path<TAB>composer<TAB>scale`, where scale is a rational such as `1/4`.
/// Blank lines and lines starting with `#` are ignored. Relative paths are
/// resolved against the manifest's directory when loaded from disk.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

pub fn composer_slug(name: &str) -> String {
    name.trim()
        .to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join("-")
}

impl Manifest {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, EncodeError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let bad = |reason: &str| EncodeError::Manifest {
                line: i + 1,
                reason: reason.into(),
            };
            if fields.len() != 3 {
                return Err(bad("expected path, composer and scale separated by tabs"));
            }
            let composer = composer_slug(fields[1]);
            if fields[0].trim().is_empty() || composer.is_empty() {
                return Err(bad("empty path or composer"));
            }
            let duration_scale =
                parse_ratio(fields[2]).map_err(|_| bad("scale must be a positive rational"))?;
            let path = Path::new(fields[0].trim());
            let path = if path.is_relative() {
                base_dir.join(path)
            } else {
                path.to_path_buf()
            };
            entries.push(ManifestEntry {
                path,
                composer,
                duration_scale,
            });
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, EncodeError> {
        let text = std::fs::read_to_string(path).map_err(|e| EncodeError::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# path\tcomposer\tscale\n");
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{}\t{}\t{}/{}",
                e.path.display(),
                e.composer,
                e.duration_scale.numer(),
                e.duration_scale.denom()
            );
        }
        out
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Distinct composers in order of first appearance; the position is the class label.
    pub fn composers(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for e in &self.entries {
            if !out.contains(&e.composer) {
                out.push(e.composer.clone());
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_resolves_paths() {
        let text = "# header\nbach/a.krn\tBach\t1\n\n/abs/b.krn\tDu Fay\t1/4\n";
        let m = Manifest::parse(text, Path::new("/corpus")).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.entries[0].path, PathBuf::from("/corpus/bach/a.krn"));
        assert_eq!(m.entries[1].path, PathBuf::from("/abs/b.krn"));
        assert_eq!(m.entries[1].composer, "du-fay");
        assert_eq!(m.entries[1].duration_scale, NoteValue::new(1, 4));
        assert_eq!(m.composers(), vec!["bach", "du-fay"]);
    }

    #[test]
    fn text_round_trip() {
        let text = "/x/a.krn\tbach\t1\n/x/b.krn\tjapart\t1/4\n";
        let m = Manifest::parse(text, Path::new("/")).unwrap();
        let again = Manifest::parse(&m.to_text(), Path::new("/")).unwrap();
        assert_eq!(m, again);
    }

    #[test]
    fn rejects_bad_lines() {
        for bad in ["a.krn\tbach", "a.krn\tbach\tzero", "a.krn\t\t1", "a.krn\tbach\t0/4"] {
            let err = Manifest::parse(bad, Path::new("/")).unwrap_err();
            assert!(matches!(err, EncodeError::Manifest { line: 1, .. }), "{bad}");
        }
    }

    #[test]
    fn slugs_are_case_insensitive() {
        assert_eq!(composer_slug("D. Scarlatti"), "d-scarlatti");
        assert_eq!(composer_slug("de la Rue"), "de-la-rue");
        assert_eq!(composer_slug("BACH"), "bach");
    }
}
