//! The six classifiers: a histogram baseline, per-voice time convolutions
//! (one and two layers), a full-score convolution, a pitch-convolution
//! "harmonic" model, and a hybrid of the deep voice and harmonic branches.
//!
//! None of the layers has a bias, so all-zero input rows contribute nothing
//! and every pooled mean divides by the full (padded) extent.

mod config;

pub use config::{Architecture, ConvDims, HarmonicDims, ModelConfig, DEFAULT_CLASSES, DEFAULT_SAMPLE};

use crate::autodiff::{read_checkpoint, write_checkpoint, AutodiffError, DiffTensor, SparseRows, Tape, Tensor};
use crate::encode::BinaryTensor;
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
    #[error("input shape {got:?} does not match the model's [T, {spines}, {channels}]")]
    InputShape {
        got: [usize; 3],
        spines: usize,
        channels: usize,
    },
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
}

/// Weight matrices of one model, in [`ModelConfig::param_shapes`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

impl ModelParams {
    /// Every weight drawn uniformly from ±1/√fan_in, fan_in being the row count.
    pub fn init(config: &ModelConfig, seed: u64) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut names = Vec::new();
        let mut tensors = Vec::new();
        for (name, shape) in config.param_shapes() {
            let bound = 1.0 / (shape[0] as f64).sqrt();
            let dist = Uniform::new_inclusive(-bound, bound);
            let len = shape.iter().product();
            let data = (0..len).map(|_| dist.sample(&mut rng)).collect();
            names.push(name.to_string());
            tensors.push(Tensor::from_vec(&shape, data)?);
        }
        Ok(Self { names, tensors })
    }

    /// Assembles parameters from named tensors, checking names and shapes
    /// against `config`. Order in `named` does not matter.
    pub fn from_named(config: &ModelConfig, mut named: Vec<(String, Tensor)>) -> Result<Self, ModelError> {
        config.validate()?;
        let shapes = config.param_shapes();
        if named.len() != shapes.len() {
            return Err(ModelError::InvalidConfig(format!(
                "expected {} weight matrices, found {}",
                shapes.len(),
                named.len()
            )));
        }
        let mut names = Vec::new();
        let mut tensors = Vec::new();
        for (name, shape) in shapes {
            let pos = named
                .iter()
                .position(|(n, _)| n == name)
                .ok_or_else(|| ModelError::InvalidConfig(format!("missing weights {name:?}")))?;
            let (_, t) = named.swap_remove(pos);
            if t.shape() != shape.as_slice() {
                return Err(ModelError::InvalidConfig(format!(
                    "weights {name:?} have shape {:?}, expected {shape:?}",
                    t.shape()
                )));
            }
            names.push(name.to_string());
            tensors.push(t);
        }
        Ok(Self { names, tensors })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.names.iter().position(|n| n == name).map(|i| &self.tensors[i])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.names.iter().position(|n| n == name).map(|i| &mut self.tensors[i])
    }

    pub fn into_named(self) -> Vec<(String, Tensor)> {
        self.names.into_iter().zip(self.tensors).collect()
    }

    /// Records every weight on `tape`; `trainable` controls whether gradients
    /// are tracked.
    pub fn record(&self, tape: &mut Tape, trainable: bool) -> Result<BoundParams, ModelError> {
        let ids = self
            .tensors
            .iter()
            .map(|t| tape.leaf(t.clone(), trainable))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.bind(ids))
    }

    /// Pairs tape handles recorded elsewhere (in this parameter order) with
    /// the weight names.
    pub fn bind(&self, ids: Vec<DiffTensor>) -> BoundParams {
        assert_eq!(ids.len(), self.names.len(), "one handle per weight matrix");
        BoundParams {
            names: self.names.clone(),
            ids,
        }
    }

    pub fn to_checkpoint(&self) -> Vec<u8> {
        write_checkpoint(self.names.iter().map(String::as_str).zip(&self.tensors))
    }

    pub fn from_checkpoint(config: &ModelConfig, bytes: &[u8]) -> Result<Self, ModelError> {
        Self::from_named(config, read_checkpoint(bytes)?)
    }
}

/// Tape handles for a recorded [`ModelParams`].
#[derive(Debug, Clone)]
pub struct BoundParams {
    names: Vec<String>,
    ids: Vec<DiffTensor>,
}

impl BoundParams {
    pub fn ids(&self) -> &[DiffTensor] {
        &self.ids
    }

    fn get(&self, name: &str) -> DiffTensor {
        let i = self.names.iter().position(|n| n == name);
        self.ids[i.unwrap_or_else(|| panic!("weights {name:?} not bound"))]
    }
}

/// Logits plus the pooled representations the hybrid head combines.
#[derive(Debug, Clone, Copy)]
pub struct Outputs {
    pub logits: DiffTensor,
    pub h_conv: Option<DiffTensor>,
    pub h_harmonic: Option<DiffTensor>,
}

/// Runs `config`'s architecture on the binary input `x` of shape `[T, P, N+D+1]`.
pub fn forward(
    tape: &mut Tape,
    config: &ModelConfig,
    params: &BoundParams,
    x: &BinaryTensor,
) -> Result<Outputs, ModelError> {
    let [_, spines, channels] = x.shape();
    if spines != config.spines || channels != config.channels() {
        return Err(ModelError::InputShape {
            got: x.shape(),
            spines: config.spines,
            channels: config.channels(),
        });
    }
    let only = |logits| Outputs {
        logits,
        h_conv: None,
        h_harmonic: None,
    };
    match config.architecture {
        Architecture::Histogram => {
            let h = tape.constant(histogram(x))?;
            Ok(only(tape.linear(h, params.get("head"))?))
        }
        Architecture::Voice => {
            let v = tape.sparse(SparseRows::voices(x));
            let h = tape.conv_time(v, params.get("conv.w1"), config.conv.n)?;
            let h = tape.relu(h)?;
            let h = tape.mean_pool(h, &[0, 1])?;
            Ok(only(tape.linear(h, params.get("head"))?))
        }
        Architecture::VoiceDeep => {
            let h = voice_deep_features(tape, config, params, x)?;
            let logits = tape.linear(h, params.get("head"))?;
            Ok(Outputs {
                logits,
                h_conv: Some(h),
                h_harmonic: None,
            })
        }
        Architecture::Full => {
            let n = config.conv.n;
            let v = tape.sparse(SparseRows::time_slices(x));
            let h = tape.conv_time(v, params.get("conv.w1"), n)?;
            let h = tape.relu(h)?;
            let h = tape.conv_time(h, params.get("conv.w2"), n)?;
            let h = tape.relu(h)?;
            let h = tape.mean_pool(h, &[0, 1])?;
            Ok(only(tape.linear(h, params.get("head"))?))
        }
        Architecture::Harmonic => {
            let h = harmonic_features(tape, config, params, x)?;
            let logits = tape.linear(h, params.get("head"))?;
            Ok(Outputs {
                logits,
                h_conv: None,
                h_harmonic: Some(h),
            })
        }
        Architecture::Hybrid => {
            let hc = voice_deep_features(tape, config, params, x)?;
            let hh = harmonic_features(tape, config, params, x)?;
            let zc = tape.linear(hc, params.get("head.conv"))?;
            let zh = tape.linear(hh, params.get("head.harmonic"))?;
            let logits = tape.add(zc, zh)?;
            Ok(Outputs {
                logits,
                h_conv: Some(hc),
                h_harmonic: Some(hh),
            })
        }
    }
}

/// Mean of every (time, voice) cell: channel counts divided by T·P.
fn histogram(x: &BinaryTensor) -> Tensor {
    let [rows, spines, channels] = x.shape();
    let denom = (rows * spines) as f64;
    let data = x
        .channel_counts()
        .into_iter()
        .map(|c| if denom > 0.0 { c as f64 / denom } else { 0.0 })
        .collect();
    Tensor::from_vec(&[channels], data).expect("one count per channel")
}

/// Two per-voice time convolutions, pooled over voices and time.
fn voice_deep_features(
    tape: &mut Tape,
    config: &ModelConfig,
    params: &BoundParams,
    x: &BinaryTensor,
) -> Result<DiffTensor, ModelError> {
    let n = config.conv.n;
    let v = tape.sparse(SparseRows::voices(x));
    let h = tape.conv_time(v, params.get("conv.w1"), n)?;
    let h = tape.relu(h)?;
    let h = tape.conv_time(h, params.get("conv.w2"), n)?;
    let h = tape.relu(h)?;
    Ok(tape.mean_pool(h, &[0, 1])?)
}

/// Pitch convolution pooled over pitch offsets, joined with the note-value
/// and continuation channels summed over voices, pooled over time.
fn harmonic_features(
    tape: &mut Tape,
    config: &ModelConfig,
    params: &BoundParams,
    x: &BinaryTensor,
) -> Result<DiffTensor, ModelError> {
    let n_pitches = config.n_pitches;
    let f = tape.sparse(SparseRows::pitch_planes(x, n_pitches));
    let h = tape.conv_pitch(f, params.get("harmonic.w1"), config.harmonic.j)?;
    let h = tape.relu(h)?;
    let h = tape.mean_pool(h, &[1])?;
    let h = tape.linear(h, params.get("harmonic.w2"))?;

    let [rows, spines, channels] = x.shape();
    let width = channels - n_pitches;
    let mut d = vec![0.0; rows * width];
    for t in 0..rows {
        for p in 0..spines {
            for &ch in x.cell(t, p) {
                if let Some(c) = (ch as usize).checked_sub(n_pitches) {
                    d[t * width + c] += 1.0;
                }
            }
        }
    }
    let d = tape.constant(Tensor::from_vec(&[rows, width], d)?)?;
    let dv = tape.linear(d, params.get("harmonic.w3"))?;
    let h = tape.add(h, dv)?;
    let h = tape.relu(h)?;
    Ok(tape.mean_pool(h, &[0])?)
}

/// Logits without gradient tracking.
pub fn logits(config: &ModelConfig, params: &ModelParams, x: &BinaryTensor) -> Result<Vec<f64>, ModelError> {
    let mut tape = Tape::new();
    let bound = params.record(&mut tape, false)?;
    let out = forward(&mut tape, config, &bound, x)?;
    Ok(tape.value(out.logits).data().to_vec())
}

/// Index of the largest logit; the lowest index wins ties.
pub fn predict(logits: &[f64]) -> usize {
    let mut best = 0;
    for (i, &z) in logits.iter().enumerate() {
        if z > logits[best] {
            best = i;
        }
    }
    best
}
