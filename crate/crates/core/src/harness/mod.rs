//! Cross-validated training and evaluation.

mod eval;
mod experiments;
mod folds;
mod results;
mod train;

pub use eval::{majority_baseline, spearman, ConfusionMatrix};
pub use experiments::{
    cross_validate, sample_size_sweep, select_composers, subset_experiment, CvConfig, CvResult, SweepResult,
};
pub use folds::{kfold_split, FoldPlan, FoldRoles};
pub use results::{
    read_cv_results, render_summary, write_checkpoint_files, write_cv_results, write_sweep_results,
    CheckpointMeta, Invocation, LoadedResults,
};
pub use train::{accuracy, predictions, train, EpochRecord, RunRecord, TrainConfig, Trained};

use crate::encode::{subsample, BinaryTensor, EncodedCorpus};
use crate::models::ModelError;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{scores} scores cannot fill {folds} folds")]
    TooFewScores { scores: usize, folds: usize },
    #[error("{0}")]
    InvalidConfig(String),
    #[error("training diverged in epoch {epoch}: {reason}")]
    Divergence { epoch: usize, reason: String },
    #[error("composer {0:?} is not in the corpus")]
    UnknownComposer(String),
    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<HarnessError>,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Format(String),
}

impl HarnessError {
    /// The error with any fold wrapper removed.
    pub fn root(&self) -> &HarnessError {
        match self {
            HarnessError::Fold { source, .. } => source.root(),
            other => other,
        }
    }
}

/// One sub-sampled score and its class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    pub path: String,
    pub x: BinaryTensor,
    pub label: usize,
}

/// Sub-sampled, labeled scores ready for training.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub composers: Vec<String>,
    pub sample: usize,
    pub examples: Vec<Example>,
}

impl Dataset {
    /// Sub-samples every score of `corpus` to 3·`sample` rows.
    pub fn from_corpus(corpus: &EncodedCorpus, sample: usize) -> Self {
        let examples = corpus
            .scores
            .iter()
            .map(|s| Example {
                path: s.path.clone(),
                x: subsample(&s.tensor, sample).data,
                label: s.label(),
            })
            .collect();
        Self {
            composers: corpus.composers.clone(),
            sample,
            examples,
        }
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.examples.iter().map(|e| e.label).collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.composers.len()];
        for e in &self.examples {
            counts[e.label] += 1;
        }
        counts
    }

    pub fn select(&self, indices: &[usize]) -> Vec<&Example> {
        indices.iter().map(|&i| &self.examples[i]).collect()
    }
}
