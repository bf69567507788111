//! Binary tensor encoding of parsed scores.

mod cache;
mod manifest;
mod tensor;
mod vocab;

pub use cache::{EncodedCorpus, EncodedScore};
pub use manifest::{composer_slug, Manifest, ManifestEntry};
pub use tensor::{subsample, window_starts, BinaryTensor, SampledTensor, ScoreTensor};
pub use vocab::{
    decode_score, encode_score, parse_ratio, DecodedCell, NoteValueVocab, UnknownValuePolicy,
    VocabBuilder,
};

use crate::kern::{parse_score_with, KernError, ParseOptions, ParsedScore};
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EncodeError {
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: KernError },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: note-value {value} is not in the vocabulary")]
    UnknownValue { path: String, value: String },
    #[error("{path}: pitch {pitch} is outside the vocabulary's pitch range")]
    UnknownPitch { path: String, pitch: u32 },
    #[error("{path}: {spines} spines exceed the vocabulary maximum of {max}")]
    SpineOverflow {
        path: String,
        spines: usize,
        max: usize,
    },
    #[error("vocabulary would be empty")]
    EmptyVocab,
    #[error("manifest line {line}: {reason}")]
    Manifest { line: usize, reason: String },
    #[error("manifest lists no scores")]
    EmptyManifest,
    #[error("{0}")]
    Format(String),
    /// Several scores failed; each failure is listed.
    #[error("{} scores failed:\n{}", .0.len(), .0.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n"))]
    Many(Vec<EncodeError>),
}

impl EncodeError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        EncodeError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Reads and parses every manifest score in parallel, preserving manifest order.
/// All failures are collected rather than stopping at the first one.
pub fn parse_manifest_scores(
    manifest: &Manifest,
    options: ParseOptions,
) -> Result<Vec<ParsedScore>, EncodeError> {
    if manifest.is_empty() {
        return Err(EncodeError::EmptyManifest);
    }
    let results: Vec<Result<ParsedScore, EncodeError>> = manifest
        .entries
        .par_iter()
        .map(|entry| {
            let text = std::fs::read_to_string(&entry.path)
                .map_err(|e| EncodeError::io(&entry.path, e))?;
            parse_score_with(&text, &entry.path, options).map_err(|source| EncodeError::Parse {
                path: entry.path.clone(),
                source,
            })
        })
        .collect();
    collect_all(results)
}

fn collect_all<T>(results: Vec<Result<T, EncodeError>>) -> Result<Vec<T>, EncodeError> {
    let mut ok = Vec::with_capacity(results.len());
    let mut failed = Vec::new();
    for r in results {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => failed.push(e),
        }
    }
    match failed.len() {
        0 => Ok(ok),
        1 => Err(failed.pop().expect("one failure")),
        _ => Err(EncodeError::Many(failed)),
    }
}

/// Builds the vocabulary over every score in the manifest, applying each
/// entry's duration scale.
pub fn build_vocab(manifest: &Manifest, options: ParseOptions) -> Result<NoteValueVocab, EncodeError> {
    let scores = parse_manifest_scores(manifest, options)?;
    let mut builder = VocabBuilder::new();
    for (entry, score) in manifest.entries.iter().zip(&scores) {
        builder.add_score(score, entry.duration_scale);
    }
    builder.finish()
}

/// Parses and encodes every manifest score with composer labels.
pub fn encode_corpus(
    manifest: &Manifest,
    vocab: &NoteValueVocab,
    vocab_sha256: &str,
    policy: UnknownValuePolicy,
) -> Result<EncodedCorpus, EncodeError> {
    let options = ParseOptions {
        max_spines: vocab.max_spines,
    };
    let scores = parse_manifest_scores(manifest, options)?;
    let composers = manifest.composers();
    let results: Vec<Result<EncodedScore, EncodeError>> = manifest
        .entries
        .par_iter()
        .zip(scores.par_iter())
        .map(|(entry, parsed)| {
            let mut tensor = encode_score(parsed, vocab, entry.duration_scale, policy)?;
            tensor.label = composers.iter().position(|c| *c == entry.composer);
            Ok(EncodedScore {
                path: entry.path.display().to_string(),
                tensor,
            })
        })
        .collect();
    Ok(EncodedCorpus {
        composers,
        spines: vocab.max_spines,
        channels: vocab.channels(),
        vocab_sha256: vocab_sha256.to_string(),
        scores: collect_all(results)?,
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `bytes` to a temporary file beside `path` and renames it into place,
/// so readers never observe a partially written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
