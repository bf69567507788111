use kernattr::autodiff::{check_gradients, Tape};
use kernattr::encode::BinaryTensor;
use kernattr::models::{
    forward, logits, predict, Architecture, ConvDims, HarmonicDims, ModelConfig, ModelError, ModelParams,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const N: usize = 8;
const D: usize = 3;
const P: usize = 2;

fn tiny(arch: Architecture) -> ModelConfig {
    let mut c = ModelConfig::new(arch, N, D, P);
    c.classes = 3;
    c.sample = 4;
    c.conv = ConvDims { n: 3, k: 4, k2: 5 };
    c.harmonic = HarmonicDims { j: 3, k: 3, k2: 4 };
    c
}

/// Random score rows: each cell is empty, a continuation, a rest, or 1–2 notes.
fn random_input(rows: usize, pitch_range: std::ops::Range<usize>, rng: &mut ChaCha8Rng) -> BinaryTensor {
    let cont = N + D;
    let cells: Vec<Vec<usize>> = (0..rows * P)
        .map(|_| match rng.gen_range(0..4) {
            0 => vec![],
            1 => vec![cont],
            2 => vec![N + rng.gen_range(0..D)],
            _ => {
                let mut v: Vec<usize> = (0..rng.gen_range(1..3))
                    .map(|_| rng.gen_range(pitch_range.clone()))
                    .collect();
                v.push(N + rng.gen_range(0..D));
                v
            }
        })
        .collect();
    BinaryTensor::from_cells(rows, P, N + D + 1, cells)
}

fn map_cells(x: &BinaryTensor, f: impl Fn(usize, usize) -> (usize, usize), shift: usize) -> BinaryTensor {
    let [rows, spines, channels] = x.shape();
    let mut cells = vec![Vec::new(); rows * spines];
    for t in 0..rows {
        for p in 0..spines {
            let (t2, p2) = f(t, p);
            cells[t2 * spines + p2] = x
                .cell(t, p)
                .iter()
                .map(|&c| if (c as usize) < N { c as usize + shift } else { c as usize })
                .collect();
        }
    }
    BinaryTensor::from_cells(rows, spines, channels, cells)
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn zero_input_gives_zero_logits() {
    for arch in Architecture::ALL {
        let cfg = tiny(arch);
        let params = ModelParams::init(&cfg, 1).unwrap();
        let x = BinaryTensor::zeros(12, P, N + D + 1);
        let z = logits(&cfg, &params, &x).unwrap();
        assert_eq!(z, vec![0.0; 3], "{arch}");
    }
}

#[test]
fn histogram_single_bit_is_scaled_row() {
    let cfg = tiny(Architecture::Histogram);
    let params = ModelParams::init(&cfg, 2).unwrap();
    let rows = 3 * cfg.sample;
    let c = N + 1;
    let mut cells = vec![vec![]; rows * P];
    cells[5 * P + 1] = vec![c];
    let x = BinaryTensor::from_cells(rows, P, N + D + 1, cells);
    let z = logits(&cfg, &params, &x).unwrap();
    let w = params.get("head").unwrap();
    for (i, zi) in z.iter().enumerate() {
        let want = w.data()[c * 3 + i] / (rows * P) as f64;
        assert!((zi - want).abs() < 1e-15);
    }
}

#[test]
fn reference_scale_output_shape() {
    // T = 3·500 rows, P = 6, N + D + 1 = 78 + 55 + 1 = 134 channels.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cells: Vec<Vec<usize>> = (0..1500 * 6)
        .map(|i| if i % 97 == 0 { vec![rng.gen_range(0..78), 78 + rng.gen_range(0..55)] } else { vec![] })
        .collect();
    let x = BinaryTensor::from_cells(1500, 6, 134, cells);
    for arch in Architecture::ALL {
        let cfg = ModelConfig::new(arch, 78, 55, 6);
        assert_eq!(cfg.channels(), 134);
        let params = ModelParams::init(&cfg, 0).unwrap();
        let z = logits(&cfg, &params, &x).unwrap();
        assert_eq!(z.len(), 19, "{arch}");
        assert!(z.iter().all(|v| v.is_finite()));
    }
}

#[test]
fn voice_permutation() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x = random_input(12, 0..N, &mut rng);
    let swapped = map_cells(&x, |t, p| (t, P - 1 - p), 0);
    for arch in Architecture::ALL {
        let cfg = tiny(arch);
        let params = ModelParams::init(&cfg, 5).unwrap();
        let a = logits(&cfg, &params, &x).unwrap();
        let b = logits(&cfg, &params, &swapped).unwrap();
        match arch {
            Architecture::Histogram | Architecture::Voice | Architecture::VoiceDeep => {
                assert!(max_diff(&a, &b) < 1e-12, "{arch}")
            }
            Architecture::Full => assert!(max_diff(&a, &b) > 1e-9, "full-score model ignored voice order"),
            _ => {}
        }
    }
}

#[test]
fn histogram_ignores_time_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let x = random_input(12, 0..N, &mut rng);
    let reversed = map_cells(&x, |t, p| (11 - t, p), 0);
    for arch in [Architecture::Histogram, Architecture::Voice] {
        let cfg = tiny(arch);
        let params = ModelParams::init(&cfg, 7).unwrap();
        let d = max_diff(
            &logits(&cfg, &params, &x).unwrap(),
            &logits(&cfg, &params, &reversed).unwrap(),
        );
        if arch == Architecture::Histogram {
            assert!(d < 1e-12);
        } else {
            assert!(d > 1e-9);
        }
    }
}

#[test]
fn harmonic_pitch_translation_invariance() {
    // Content spans pitches 2..=5 with j = 3, so every window touching it
    // starts at or above 0 both before and after shifting by 2.
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let x = random_input(12, 2..6, &mut rng);
    let shifted = map_cells(&x, |t, p| (t, p), 2);
    let cfg = tiny(Architecture::Harmonic);
    for seed in 0..5 {
        let params = ModelParams::init(&cfg, seed).unwrap();
        let a = logits(&cfg, &params, &x).unwrap();
        let b = logits(&cfg, &params, &shifted).unwrap();
        assert!(max_diff(&a, &b) < 1e-9);
    }
}

#[test]
fn hybrid_is_sum_of_branch_heads() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let x = random_input(12, 0..N, &mut rng);
    let cfg = tiny(Architecture::Hybrid);
    let params = ModelParams::init(&cfg, 10).unwrap();
    let named = |pairs: &[(&str, &str)]| -> Vec<_> {
        pairs
            .iter()
            .map(|(to, from)| (to.to_string(), params.get(from).unwrap().clone()))
            .collect()
    };

    let deep_cfg = tiny(Architecture::VoiceDeep);
    let deep = ModelParams::from_named(
        &deep_cfg,
        named(&[("conv.w1", "conv.w1"), ("conv.w2", "conv.w2"), ("head", "head.conv")]),
    )
    .unwrap();
    let harm_cfg = tiny(Architecture::Harmonic);
    let harm = ModelParams::from_named(
        &harm_cfg,
        named(&[
            ("harmonic.w1", "harmonic.w1"),
            ("harmonic.w2", "harmonic.w2"),
            ("harmonic.w3", "harmonic.w3"),
            ("head", "head.harmonic"),
        ]),
    )
    .unwrap();

    let zc = logits(&deep_cfg, &deep, &x).unwrap();
    let zh = logits(&harm_cfg, &harm, &x).unwrap();
    let z = logits(&cfg, &params, &x).unwrap();
    for i in 0..3 {
        assert!((z[i] - (zc[i] + zh[i])).abs() < 1e-12);
    }

    let mut muted = params.clone();
    for v in muted.get_mut("head.harmonic").unwrap().data_mut() {
        *v = 0.0;
    }
    assert_eq!(logits(&cfg, &muted, &x).unwrap(), zc);
}

#[test]
fn exposes_pooled_representations() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let x = random_input(12, 0..N, &mut rng);
    let cfg = tiny(Architecture::Hybrid);
    let params = ModelParams::init(&cfg, 1).unwrap();
    let mut tape = Tape::new();
    let bound = params.record(&mut tape, false).unwrap();
    let out = forward(&mut tape, &cfg, &bound, &x).unwrap();
    assert_eq!(tape.value(out.h_conv.unwrap()).shape(), &[5]);
    assert_eq!(tape.value(out.h_harmonic.unwrap()).shape(), &[4]);
}

#[test]
fn gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let x = random_input(12, 0..N, &mut rng);
    for arch in Architecture::ALL {
        let cfg = tiny(arch);
        let params = ModelParams::init(&cfg, 13).unwrap();
        let r = check_gradients(
            params.tensors(),
            |tape, ids| {
                let bound = params.bind(ids.to_vec());
                let out = forward(tape, &cfg, &bound, &x).map_err(|e| match e {
                    ModelError::Autodiff(e) => e,
                    other => panic!("{other}"),
                })?;
                tape.softmax_cross_entropy(out.logits, 1)
            },
            1e-5,
            0.01,
            3,
            14,
        )
        .unwrap();
        assert!(r.max_rel_error < 1e-4, "{arch}: {r:?}");
    }
}

#[test]
fn init_is_seeded() {
    let cfg = tiny(Architecture::Hybrid);
    let a = ModelParams::init(&cfg, 42).unwrap();
    assert_eq!(a, ModelParams::init(&cfg, 42).unwrap());
    assert_ne!(a, ModelParams::init(&cfg, 43).unwrap());
    for (name, t) in a.names().iter().zip(a.tensors()) {
        let bound = 1.0 / (t.shape()[0] as f64).sqrt();
        assert!(t.data().iter().all(|v| v.abs() <= bound), "{name}");
    }
}

#[test]
fn checkpoint_round_trip() {
    let cfg = tiny(Architecture::Full);
    let params = ModelParams::init(&cfg, 3).unwrap();
    let back = ModelParams::from_checkpoint(&cfg, &params.to_checkpoint()).unwrap();
    assert_eq!(back, params);
    assert!(ModelParams::from_checkpoint(&tiny(Architecture::Voice), &params.to_checkpoint()).is_err());
}

#[test]
fn predict_breaks_ties_low() {
    assert_eq!(predict(&[0.1, 3.0, -1.0]), 1);
    assert_eq!(predict(&[2.0, 2.0]), 0);
    assert_eq!(predict(&[-1.0, 5.0, 5.0]), 1);
}

#[test]
fn parameter_counts() {
    let count = |arch| ModelConfig::new(arch, 78, 55, 6).parameter_count();
    assert_eq!(count(Architecture::Histogram), 134 * 19);
    assert_eq!(count(Architecture::Voice), 3 * 134 * 500 + 500 * 19);
    assert_eq!(count(Architecture::VoiceDeep), 120_600 + 270_000 + 5_700);
    assert_eq!(count(Architecture::Full), 723_600 + 270_000 + 5_700);
    // j = 39: 39·6·64 + 64·500 + 56·500 + 500·19
    assert_eq!(count(Architecture::Harmonic), 14_976 + 32_000 + 28_000 + 9_500);
    assert_eq!(
        count(Architecture::Hybrid),
        120_600 + 270_000 + 14_976 + 32_000 + 28_000 + 5_700 + 9_500
    );
}

#[test]
fn rejects_bad_configs_and_inputs() {
    let mut cfg = tiny(Architecture::Harmonic);
    cfg.harmonic.j = N + 1;
    assert!(matches!(ModelParams::init(&cfg, 0), Err(ModelError::InvalidConfig(_))));
    assert_eq!(ModelConfig::new(Architecture::Harmonic, 9, 1, 1).harmonic.j, 4);
    assert!("voice-deep".parse::<Architecture>().is_ok());
    assert!("lstm".parse::<Architecture>().is_err());

    let cfg = tiny(Architecture::Voice);
    let params = ModelParams::init(&cfg, 0).unwrap();
    let wrong = BinaryTensor::zeros(4, P + 1, N + D + 1);
    assert!(matches!(
        logits(&cfg, &params, &wrong),
        Err(ModelError::InputShape { .. })
    ));
}
