//! The reference collection's composers, manifest helpers, and a synthetic
//! score generator for tests and demonstrations.

mod synth;

pub use synth::{synth_score, write_synthetic_corpus, SynthOptions};

use crate::encode::{composer_slug, EncodeError, Manifest, ManifestEntry};
use crate::kern::NoteValue;
use std::fmt::Write as _;
use std::path::Path;

/// One composer's sub-collection in the reference corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Collection {
    pub composer: &'static str,
    pub dates: &'static str,
    pub collection: &'static str,
    pub scores: usize,
    /// Mensural-era note-values, shortened by a factor of 4 before encoding.
    pub renaissance: bool,
}

const fn c(
    composer: &'static str,
    dates: &'static str,
    collection: &'static str,
    scores: usize,
    renaissance: bool,
) -> Collection {
    Collection {
        composer,
        dates,
        collection,
        scores,
        renaissance,
    }
}

pub const COLLECTIONS: &[Collection] = &[
    c("Du Fay", "1397-1474", "Choral", 35, true),
    c("Ockeghem", "1410-1497", "Choral", 98, true),
    c("Busnois", "1430-1492", "Choral", 68, true),
    c("Martini", "1440-1497", "Choral", 122, true),
    c("Compere", "1445-1518", "Choral", 27, true),
    c("Josquin", "1450-1521", "Choral", 423, true),
    c("de la Rue", "1452-1518", "Choral", 178, true),
    c("Orto", "1460-1529", "Choral", 43, true),
    c("Japart", "1474-1507", "Choral", 22, true),
    c("Corelli", "1653-1713", "Trio Sonatas", 188, false),
    c("Vivaldi", "1678-1741", "Concertos", 33, false),
    c("Bach", "1685-1750", "Chorales", 370, false),
    c("Bach", "1685-1750", "Well-Tempered Clavier", 96, false),
    c("D. Scarlatti", "1685-1757", "Keyboard Sonatas", 59, false),
    c("Haydn", "1732-1809", "String Quartets", 209, false),
    c("Mozart", "1756-1791", "Piano Sonatas", 69, false),
    c("Mozart", "1756-1791", "String Quartets", 82, false),
    c("Beethoven", "1770-1827", "Piano Sonatas", 102, false),
    c("Beethoven", "1770-1827", "String Quartets", 67, false),
    c("Hummel", "1778-1837", "Preludes", 24, false),
    c("Chopin", "1810-1849", "Preludes and Mazurkas", 76, false),
    c("Joplin", "1868-1917", "Ragtimes", 47, false),
];

/// Composer slugs in collection order, without repeats.
pub fn composers() -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for col in COLLECTIONS {
        let slug = composer_slug(col.composer);
        if !out.contains(&slug) {
            out.push(slug);
        }
    }
    out
}

/// Note-value scale for a composer slug: 1/4 for the Renaissance composers,
/// 1 for everyone else (including composers not in the collection).
pub fn duration_scale(composer: &str) -> NoteValue {
    let slug = composer_slug(composer);
    let renaissance = COLLECTIONS
        .iter()
        .any(|c| c.renaissance && composer_slug(c.composer) == slug);
    if renaissance {
        NoteValue::new(1, 4)
    } else {
        NoteValue::from_integer(1)
    }
}

/// Commented manifest listing every composer and sub-collection with its
/// note-value scale.
pub fn manifest_template() -> String {
    let mut out = String::from(
        "# path<TAB>composer<TAB>scale\n\
         #\n\
         # Store scores as <root>/<composer>/<collection>/*.krn and run\n\
         # `kernattr manifest <root>` to list them with the scales below,\n\
         # or write entries by hand in the same three-column form.\n\
         #\n",
    );
    for col in COLLECTIONS {
        let slug = composer_slug(col.composer);
        let scale = duration_scale(&slug);
        let _ = writeln!(
            out,
            "# {slug}/{}/*.krn\t{slug}\t{}/{}\t({} scores, {})",
            composer_slug(col.collection),
            scale.numer(),
            scale.denom(),
            col.scores,
            col.dates
        );
    }
    out
}

/// Lists every `.krn` file below `root` (sorted by path); the first directory
/// level names the composer and sets the note-value scale.
pub fn scan_directory(root: &Path) -> Result<Manifest, EncodeError> {
    let mut entries = Vec::new();
    for item in walkdir::WalkDir::new(root).sort_by_file_name() {
        let item = item.map_err(|e| {
            let path = e.path().unwrap_or(root).to_path_buf();
            EncodeError::io(&path, e.into())
        })?;
        let path = item.path();
        if !item.file_type().is_file() || path.extension().and_then(|e| e.to_str()) != Some("krn") {
            continue;
        }
        let rel = path.strip_prefix(root).expect("walk stays under root");
        let mut parts = rel.components();
        let (Some(first), Some(_)) = (parts.next(), parts.next()) else {
            continue;
        };
        let composer = composer_slug(&first.as_os_str().to_string_lossy());
        if composer.is_empty() {
            continue;
        }
        entries.push(ManifestEntry {
            path: path.to_path_buf(),
            duration_scale: duration_scale(&composer),
            composer,
        });
    }
    Ok(Manifest { entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_totals() {
        assert_eq!(composers().len(), 19);
        assert_eq!(COLLECTIONS.iter().map(|c| c.scores).sum::<usize>(), 2438);
        let bach: usize = COLLECTIONS.iter().filter(|c| c.composer == "Bach").map(|c| c.scores).sum();
        assert_eq!(bach, 466);
        assert_eq!(duration_scale("Du Fay"), NoteValue::new(1, 4));
        assert_eq!(duration_scale("japart"), NoteValue::new(1, 4));
        assert_eq!(duration_scale("Corelli"), NoteValue::from_integer(1));
        assert_eq!(duration_scale("someone-else"), NoteValue::from_integer(1));
    }

    #[test]
    fn template_lists_every_collection() {
        let t = manifest_template();
        assert_eq!(t.lines().filter(|l| l.contains(".krn\t")).count(), COLLECTIONS.len());
        assert!(t.contains("# de-la-rue/choral/*.krn\tde-la-rue\t1/4"));
        assert!(Manifest::parse(&t, Path::new("/")).unwrap().is_empty());
    }
}
