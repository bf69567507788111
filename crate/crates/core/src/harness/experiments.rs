use super::{
    kfold_split, predictions, spearman, train, ConfusionMatrix, Dataset, FoldPlan, HarnessError, RunRecord,
    TrainConfig,
};
use crate::encode::{composer_slug, EncodedCorpus};
use crate::models::{Architecture, ModelConfig, ModelParams};
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CvConfig {
    pub folds: usize,
    /// Seeds the fold assignment.
    pub seed: u64,
    /// Folds trained concurrently.
    pub jobs: usize,
    /// Keep each fold's selected parameters in the result.
    pub keep_params: bool,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            folds: 10,
            seed: 0,
            jobs: 1,
            keep_params: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CvResult {
    pub composers: Vec<String>,
    pub class_counts: Vec<usize>,
    pub plan: FoldPlan,
    /// One record per fold, in fold order.
    pub runs: Vec<RunRecord>,
    /// Test predictions pooled over all folds.
    pub confusion: ConfusionMatrix,
    /// Selected parameters per fold when requested.
    pub params: Vec<ModelParams>,
}

impl CvResult {
    pub fn fold_accuracies(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.test_accuracy.unwrap_or(0.0)).collect()
    }

    pub fn mean_fold_accuracy(&self) -> f64 {
        let a = self.fold_accuracies();
        a.iter().sum::<f64>() / a.len().max(1) as f64
    }

    /// Pooled test accuracy: confusion-matrix diagonal over total.
    pub fn overall_accuracy(&self) -> f64 {
        self.confusion.accuracy()
    }
}

/// k-fold cross-validation. Fold f tests on fold f, validates on fold
/// (f + 1) mod k and trains on the rest, with training seed `train.seed + f`.
/// The class count and sample window of `model` are taken from `data`.
pub fn cross_validate(
    data: &Dataset,
    model: &ModelConfig,
    train_config: &TrainConfig,
    cv: &CvConfig,
) -> Result<CvResult, HarnessError> {
    let mut model = *model;
    model.classes = data.composers.len();
    model.sample = data.sample;
    let labels = data.labels();
    let plan = kfold_split(&labels, cv.folds, cv.seed)?;
    let mut confusion = ConfusionMatrix::new(data.composers.clone());

    if model.classes < 2 {
        // Nothing to learn: every score belongs to the only class.
        let runs = (0..cv.folds)
            .map(|f| {
                for &i in &plan.roles(f).test {
                    confusion.record(labels[i], 0);
                }
                RunRecord {
                    architecture: model.architecture,
                    fold: Some(f),
                    seed: train_config.seed.wrapping_add(f as u64),
                    epochs: Vec::new(),
                    chosen_epoch: 0,
                    validation_accuracy: 1.0,
                    test_accuracy: Some(1.0),
                    wall_time_secs: 0.0,
                }
            })
            .collect();
        return Ok(CvResult {
            composers: data.composers.clone(),
            class_counts: data.class_counts(),
            plan,
            runs,
            confusion,
            params: Vec::new(),
        });
    }
    model.validate()?;

    let run_fold = |fold: usize| -> Result<(RunRecord, ConfusionMatrix, ModelParams), HarnessError> {
        let wrap = |e: HarnessError| HarnessError::Fold {
            fold,
            source: Box::new(e),
        };
        let roles = plan.roles(fold);
        let config = TrainConfig {
            seed: train_config.seed.wrapping_add(fold as u64),
            ..*train_config
        };
        let trained = train(&model, &data.select(&roles.train), &data.select(&roles.validation), &config)
            .map_err(wrap)?;
        let test = data.select(&roles.test);
        let preds = predictions(&model, &trained.params, &test).map_err(|e| wrap(e.into()))?;
        let mut cm = ConfusionMatrix::new(data.composers.clone());
        for (ex, p) in test.iter().zip(preds) {
            cm.record(ex.label, p);
        }
        let mut record = trained.record;
        record.fold = Some(fold);
        record.test_accuracy = Some(cm.accuracy());
        Ok((record, cm, trained.params))
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cv.jobs.max(1))
        .build()
        .map_err(|e| HarnessError::InvalidConfig(format!("thread pool: {e}")))?;
    let outcomes: Vec<_> = pool.install(|| (0..cv.folds).into_par_iter().map(run_fold).collect());

    let mut runs = Vec::with_capacity(cv.folds);
    let mut params = Vec::new();
    for outcome in outcomes {
        let (record, cm, p) = outcome?;
        confusion.merge(&cm);
        runs.push(record);
        if cv.keep_params {
            params.push(p);
        }
    }
    Ok(CvResult {
        composers: data.composers.clone(),
        class_counts: data.class_counts(),
        plan,
        runs,
        confusion,
        params,
    })
}

/// Keeps only the named composers (matched as slugs), relabeled 0.. in the
/// order given.
pub fn select_composers(corpus: &EncodedCorpus, names: &[String]) -> Result<EncodedCorpus, HarnessError> {
    let slugs: Vec<String> = names.iter().map(|n| composer_slug(n)).collect();
    let mut old_to_new = vec![None; corpus.composers.len()];
    for (new, slug) in slugs.iter().enumerate() {
        if slugs[..new].contains(slug) {
            return Err(HarnessError::InvalidConfig(format!("composer {slug:?} listed twice")));
        }
        let old = corpus
            .composers
            .iter()
            .position(|c| c == slug)
            .ok_or_else(|| HarnessError::UnknownComposer(slug.clone()))?;
        old_to_new[old] = Some(new);
    }
    let scores = corpus
        .scores
        .iter()
        .filter_map(|s| {
            old_to_new[s.label()].map(|label| {
                let mut s = s.clone();
                s.tensor.label = Some(label);
                s
            })
        })
        .collect();
    Ok(EncodedCorpus {
        composers: slugs,
        spines: corpus.spines,
        channels: corpus.channels,
        vocab_sha256: corpus.vocab_sha256.clone(),
        scores,
    })
}

/// Cross-validation restricted to `composers`, with the class count
/// shrunk to match.
pub fn subset_experiment(
    corpus: &EncodedCorpus,
    composers: &[String],
    model: &ModelConfig,
    train_config: &TrainConfig,
    cv: &CvConfig,
) -> Result<CvResult, HarnessError> {
    let subset = select_composers(corpus, composers)?;
    cross_validate(&Dataset::from_corpus(&subset, model.sample), model, train_config, cv)
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub models: Vec<ModelConfig>,
    pub sizes: Vec<usize>,
    /// `runs[a][s]` for architecture a at sample size s.
    pub runs: Vec<Vec<CvResult>>,
}

impl SweepResult {
    pub fn architectures(&self) -> Vec<Architecture> {
        self.models.iter().map(|m| m.architecture).collect()
    }

    /// Overall accuracy per architecture and sample size.
    pub fn accuracy(&self) -> Vec<Vec<f64>> {
        self.runs
            .iter()
            .map(|row| row.iter().map(CvResult::overall_accuracy).collect())
            .collect()
    }

    /// Spearman correlation between sample size and accuracy, per architecture.
    pub fn trend(&self) -> Vec<f64> {
        let sizes: Vec<f64> = self.sizes.iter().map(|&s| s as f64).collect();
        self.accuracy().iter().map(|acc| spearman(&sizes, acc)).collect()
    }
}

/// Cross-validates every model at every sample window, re-sub-sampling the
/// encoded corpus for each window.
pub fn sample_size_sweep(
    corpus: &EncodedCorpus,
    models: &[ModelConfig],
    sizes: &[usize],
    train_config: &TrainConfig,
    cv: &CvConfig,
) -> Result<SweepResult, HarnessError> {
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(HarnessError::InvalidConfig("sample sizes must be positive".into()));
    }
    let datasets: Vec<Dataset> = sizes.iter().map(|&s| Dataset::from_corpus(corpus, s)).collect();
    let mut runs = Vec::new();
    for model in models {
        let row = datasets
            .iter()
            .map(|d| cross_validate(d, model, train_config, cv))
            .collect::<Result<Vec<_>, _>>()?;
        runs.push(row);
    }
    Ok(SweepResult {
        models: models.to_vec(),
        sizes: sizes.to_vec(),
        runs,
    })
}
