use kernattr::corpus::{synth_score, write_synthetic_corpus, SynthOptions};
use kernattr::encode::{
    build_vocab, decode_score, encode_corpus, encode_score, DecodedCell, EncodedCorpus, Manifest, NoteValueVocab,
    UnknownValuePolicy,
};
use kernattr::kern::{parse_score, NoteValue, ParseOptions, SpineCell};
use proptest::prelude::*;

fn vocab_for(texts: &[String]) -> NoteValueVocab {
    let dir = tempfile::tempdir().unwrap();
    let mut lines = String::new();
    for (i, t) in texts.iter().enumerate() {
        std::fs::write(dir.path().join(format!("{i}.krn")), t).unwrap();
        lines += &format!("{i}.krn\tx\t1\n");
    }
    let manifest = Manifest::parse(&lines, dir.path()).unwrap();
    build_vocab(&manifest, ParseOptions::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn encoding_is_lossless_and_sparse(style in 0usize..6, seed in any::<u64>(), length in 8u32..200) {
        let opts = SynthOptions { length, rest_percent: 10 };
        let text = synth_score(style, seed, opts);
        let vocab = vocab_for(std::slice::from_ref(&text));
        let score = parse_score(&text, "s.krn").unwrap();
        let tensor = encode_score(&score, &vocab, NoteValue::from_integer(1), UnknownValuePolicy::Reject).unwrap();
        let x = &tensor.data;
        prop_assert_eq!(x.shape(), [score.rows.len(), vocab.max_spines, vocab.channels()]);

        let n = vocab.n_pitches;
        let cont = vocab.continuation_channel();
        for t in 0..x.rows() {
            for p in 0..x.spines() {
                let cell = x.cell(t, p);
                let durations = cell.iter().filter(|&&c| (c as usize) >= n && (c as usize) < cont).count();
                prop_assert!(durations <= 1);
                if cell.iter().any(|&c| c as usize == cont) {
                    prop_assert_eq!(cell.len(), 1);
                }
            }
        }

        let decoded = decode_score(&tensor, &vocab).unwrap();
        for (row, cells) in score.rows.iter().zip(&decoded) {
            for (original, back) in row.cells.iter().zip(cells) {
                let expected = match original {
                    SpineCell::Continuation => DecodedCell::Continuation,
                    SpineCell::Inactive => DecodedCell::Empty,
                    SpineCell::Rest { duration } => DecodedCell::Rest { value: vocab.index_of(*duration).unwrap() },
                    SpineCell::Notes { duration, pitches } => {
                        let mut pitches = pitches.clone();
                        pitches.sort_unstable();
                        pitches.dedup();
                        DecodedCell::Notes { value: vocab.index_of(*duration).unwrap(), pitches }
                    }
                };
                prop_assert_eq!(back, &expected);
            }
        }
    }

    #[test]
    fn vocab_shape_ignores_manifest_order(seeds in prop::collection::vec(any::<u64>(), 2..6), rotate in 0usize..6) {
        let texts: Vec<String> = seeds.iter().enumerate().map(|(i, &s)| synth_score(i, s, SynthOptions::default())).collect();
        let mut rotated = texts.clone();
        rotated.rotate_left(rotate % texts.len());
        let (a, b) = (vocab_for(&texts), vocab_for(&rotated));
        prop_assert_eq!(a.n_values(), b.n_values());
        prop_assert_eq!(a.n_pitches, b.n_pitches);
        prop_assert_eq!(a.pitch_base, b.pitch_base);
        prop_assert_eq!(a.max_spines, b.max_spines);
        let mut va = a.values().to_vec();
        let mut vb = b.values().to_vec();
        va.sort();
        vb.sort();
        prop_assert_eq!(va, vb);
    }
}

#[test]
fn corpus_pipeline_round_trips_through_cache() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_synthetic_corpus(dir.path(), 3, 4, 2, SynthOptions::default()).unwrap();
    let reloaded = Manifest::load(&dir.path().join("manifest.tsv")).unwrap();
    assert_eq!(reloaded, manifest);

    let vocab = build_vocab(&manifest, ParseOptions::default()).unwrap();
    assert_eq!(NoteValueVocab::from_toml(&vocab.to_toml()).unwrap(), vocab);
    let corpus = encode_corpus(&manifest, &vocab, "abc", UnknownValuePolicy::Reject).unwrap();
    assert_eq!(corpus.composers, vec!["style-0", "style-1", "style-2"]);
    assert_eq!(corpus.class_counts(), vec![4, 4, 4]);
    assert_eq!(corpus.spines, vocab.max_spines);

    let bytes = corpus.to_bytes();
    assert_eq!(EncodedCorpus::from_bytes(&bytes).unwrap(), corpus);
    assert!(EncodedCorpus::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    let path = dir.path().join("cache.bin");
    std::fs::write(&path, &bytes).unwrap();
    assert_eq!(EncodedCorpus::load(&path).unwrap(), corpus);
}

#[test]
fn unknown_values_follow_policy() {
    let vocab = vocab_for(&["**kern\n4c\n8d\n*-\n".to_string()]);
    let score = parse_score("**kern\n16c\n*-\n", "x.krn").unwrap();
    let one = NoteValue::from_integer(1);
    assert!(encode_score(&score, &vocab, one, UnknownValuePolicy::Reject).is_err());
    let x = encode_score(&score, &vocab, one, UnknownValuePolicy::Nearest).unwrap();
    let eighth = vocab.index_of(NoteValue::new(1, 8)).unwrap();
    assert!(x.data.get(0, 0, vocab.value_channel(eighth)));
}
