use super::ModelError;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Architecture {
    Histogram,
    Voice,
    VoiceDeep,
    Full,
    Harmonic,
    Hybrid,
}

impl Architecture {
    pub const ALL: [Architecture; 6] = [
        Architecture::Histogram,
        Architecture::Voice,
        Architecture::VoiceDeep,
        Architecture::Full,
        Architecture::Harmonic,
        Architecture::Hybrid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Architecture::Histogram => "histogram",
            Architecture::Voice => "voice",
            Architecture::VoiceDeep => "voice-deep",
            Architecture::Full => "full",
            Architecture::Harmonic => "harmonic",
            Architecture::Hybrid => "hybrid",
        }
    }

    fn uses_conv(self) -> bool {
        matches!(
            self,
            Architecture::Voice | Architecture::VoiceDeep | Architecture::Full | Architecture::Hybrid
        )
    }

    fn uses_second_conv(self) -> bool {
        matches!(self, Architecture::VoiceDeep | Architecture::Full | Architecture::Hybrid)
    }

    fn uses_harmonic(self) -> bool {
        matches!(self, Architecture::Harmonic | Architecture::Hybrid)
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Architecture {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Architecture::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| ModelError::InvalidConfig(format!("unknown architecture {s:?}")))
    }
}

/// Time-convolution sizes: window `n`, first-layer width `k`, second-layer width `k2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvDims {
    pub n: usize,
    pub k: usize,
    pub k2: usize,
}

/// Pitch-convolution sizes: pitch window `j`, widths `k` and `k2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HarmonicDims {
    pub j: usize,
    pub k: usize,
    pub k2: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub architecture: Architecture,
    pub classes: usize,
    /// Sample window s; models see 3s time rows.
    pub sample: usize,
    pub n_pitches: usize,
    pub n_values: usize,
    pub spines: usize,
    pub conv: ConvDims,
    pub harmonic: HarmonicDims,
}

pub const DEFAULT_CLASSES: usize = 19;
pub const DEFAULT_SAMPLE: usize = 500;

impl ModelConfig {
    /// Default sizes for `architecture` given the vocabulary dimensions.
    pub fn new(architecture: Architecture, n_pitches: usize, n_values: usize, spines: usize) -> Self {
        let conv = match architecture {
            Architecture::Voice => ConvDims { n: 3, k: 500, k2: 0 },
            _ => ConvDims {
                n: 3,
                k: 300,
                k2: 300,
            },
        };
        Self {
            architecture,
            classes: DEFAULT_CLASSES,
            sample: DEFAULT_SAMPLE,
            n_pitches,
            n_values,
            spines,
            conv,
            harmonic: HarmonicDims {
                j: (n_pitches / 2).max(1),
                k: 64,
                k2: 500,
            },
        }
    }

    /// Channels per (time, spine) cell: pitches, note-values and continuation.
    pub fn channels(&self) -> usize {
        self.n_pitches + self.n_values + 1
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |what: &str| Err(ModelError::InvalidConfig(what.to_string()));
        if self.classes < 2 {
            return bad("at least two classes are required");
        }
        if self.sample == 0 || self.n_pitches == 0 || self.n_values == 0 || self.spines == 0 {
            return bad("sample window, N, D and P must be positive");
        }
        let arch = self.architecture;
        if arch.uses_conv() && (self.conv.n == 0 || self.conv.k == 0) {
            return bad("time window n and width k must be positive");
        }
        if arch.uses_second_conv() && self.conv.k2 == 0 {
            return bad("second-layer width k2 must be positive");
        }
        if arch.uses_harmonic() {
            let h = self.harmonic;
            if h.k == 0 || h.k2 == 0 {
                return bad("harmonic widths must be positive");
            }
            if h.j == 0 || h.j > self.n_pitches {
                return bad("pitch window j must lie in 1..=N");
            }
        }
        Ok(())
    }

    /// Name and shape of every weight matrix, in a fixed order.
    pub fn param_shapes(&self) -> Vec<(&'static str, Vec<usize>)> {
        let (c, p, classes) = (self.channels(), self.spines, self.classes);
        let ConvDims { n, k, k2 } = self.conv;
        let h = self.harmonic;
        let harmonic = [
            ("harmonic.w1", vec![h.j * p, h.k]),
            ("harmonic.w2", vec![h.k, h.k2]),
            ("harmonic.w3", vec![self.n_values + 1, h.k2]),
        ];
        match self.architecture {
            Architecture::Histogram => vec![("head", vec![c, classes])],
            Architecture::Voice => vec![("conv.w1", vec![n * c, k]), ("head", vec![k, classes])],
            Architecture::VoiceDeep => vec![
                ("conv.w1", vec![n * c, k]),
                ("conv.w2", vec![n * k, k2]),
                ("head", vec![k2, classes]),
            ],
            Architecture::Full => vec![
                ("conv.w1", vec![n * p * c, k]),
                ("conv.w2", vec![n * k, k2]),
                ("head", vec![k2, classes]),
            ],
            Architecture::Harmonic => {
                let mut v = harmonic.to_vec();
                v.push(("head", vec![h.k2, classes]));
                v
            }
            Architecture::Hybrid => {
                let mut v = vec![("conv.w1", vec![n * c, k]), ("conv.w2", vec![n * k, k2])];
                v.extend(harmonic);
                v.push(("head.conv", vec![k2, classes]));
                v.push(("head.harmonic", vec![h.k2, classes]));
                v
            }
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.param_shapes()
            .iter()
            .map(|(_, s)| s.iter().product::<usize>())
            .sum()
    }
}
