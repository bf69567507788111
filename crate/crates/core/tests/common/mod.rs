use kernattr::corpus::{write_synthetic_corpus, SynthOptions};
use kernattr::encode::{build_vocab, encode_corpus, EncodedCorpus, NoteValueVocab, UnknownValuePolicy};
use kernattr::kern::ParseOptions;
use kernattr::models::{Architecture, ConvDims, HarmonicDims, ModelConfig};
use std::path::Path;

/// Encodes a synthetic corpus of `styles` × `per_style` scores written under `dir`.
pub fn synthetic_corpus(dir: &Path, styles: usize, per_style: usize) -> (NoteValueVocab, EncodedCorpus) {
    let manifest = write_synthetic_corpus(dir, styles, per_style, 11, SynthOptions::default()).unwrap();
    let vocab = build_vocab(&manifest, ParseOptions::default()).unwrap();
    let corpus = encode_corpus(&manifest, &vocab, "test", UnknownValuePolicy::Reject).unwrap();
    (vocab, corpus)
}

/// Small widths so cross-validation runs in well under a second.
#[allow(dead_code)]
pub fn small_model(arch: Architecture, vocab: &NoteValueVocab) -> ModelConfig {
    let mut m = ModelConfig::new(arch, vocab.n_pitches, vocab.n_values(), vocab.max_spines);
    m.conv = ConvDims { n: 3, k: 8, k2: 8 };
    m.harmonic = HarmonicDims {
        j: m.harmonic.j,
        k: 6,
        k2: 8,
    };
    m.sample = 16;
    m
}
