//! Results directory layout:
//!
//! ```text
//! invocation.json        configuration, seeds and corpus identity
//! runs/fold-00.json      one RunRecord per fold (includes wall time)
//! confusion.tsv          pooled test confusion counts
//! summary.tsv            per-composer accuracy, largest class first, then overall
//! checkpoints/           optional: fold-00.kpar + fold-00.json metadata
//! ```
//!
//! A sweep writes one such directory per (architecture, sample size) plus
//! `sweep.tsv`.

use super::{ConfusionMatrix, CvResult, HarnessError, RunRecord, SweepResult, TrainConfig};
use crate::encode::write_atomic;
use crate::models::{Architecture, ModelConfig};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

/// Everything needed to re-run an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Invocation {
    pub command: String,
    /// Command-line arguments as given.
    pub args: Vec<String>,
    pub seed: u64,
    pub folds: usize,
    pub jobs: usize,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub vocab_sha256: String,
    pub composers: Vec<String>,
    pub class_counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub architecture: Architecture,
    pub model: ModelConfig,
    pub vocab_sha256: String,
    pub fold: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedResults {
    pub invocation: Invocation,
    pub runs: Vec<RunRecord>,
    pub confusion: ConfusionMatrix,
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    write_atomic(path, bytes).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read(path: &Path) -> Result<String, HarnessError> {
    std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("records serialize");
    v.push(b'\n');
    v
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, HarnessError> {
    serde_json::from_str(&read(path)?)
        .map_err(|e| HarnessError::Format(format!("{}: {e}", path.display())))
}

/// Per-composer accuracy table sorted by score count (descending, ties in
/// label order) with an overall row. Contains no timing, so equal seeds give
/// byte-identical tables.
pub fn render_summary(invocation: &Invocation, confusion: &ConfusionMatrix) -> String {
    let mut out = format!(
        "# architecture={} seed={} sample={} folds={}\ncomposer\tscores\taccuracy\n",
        invocation.model.architecture, invocation.seed, invocation.model.sample, invocation.folds
    );
    let per_class = confusion.per_class_accuracy();
    let mut order: Vec<usize> = (0..confusion.classes.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(invocation.class_counts.get(i).copied().unwrap_or(0)));
    for i in order {
        let _ = writeln!(
            out,
            "{}\t{}\t{:.1}",
            confusion.classes[i],
            invocation.class_counts.get(i).copied().unwrap_or(0),
            per_class[i]
        );
    }
    let _ = writeln!(
        out,
        "overall\t{}\t{:.1}",
        confusion.total(),
        100.0 * confusion.accuracy()
    );
    out
}

pub fn write_cv_results(dir: &Path, invocation: &Invocation, result: &CvResult) -> Result<(), HarnessError> {
    write(&dir.join("invocation.json"), &json(invocation))?;
    for run in &result.runs {
        let fold = run.fold.unwrap_or(0);
        write(&dir.join("runs").join(format!("fold-{fold:02}.json")), &json(run))?;
    }
    write(&dir.join("confusion.tsv"), result.confusion.to_tsv().as_bytes())?;
    write(
        &dir.join("summary.tsv"),
        render_summary(invocation, &result.confusion).as_bytes(),
    )
}

/// Writes each fold's selected parameters with a metadata sidecar.
pub fn write_checkpoint_files(dir: &Path, invocation: &Invocation, result: &CvResult) -> Result<(), HarnessError> {
    let ckpt = dir.join("checkpoints");
    for (fold, (params, run)) in result.params.iter().zip(&result.runs).enumerate() {
        write(&ckpt.join(format!("fold-{fold:02}.kpar")), &params.to_checkpoint())?;
        let meta = CheckpointMeta {
            architecture: invocation.model.architecture,
            model: invocation.model,
            vocab_sha256: invocation.vocab_sha256.clone(),
            fold,
            seed: run.seed,
        };
        write(&ckpt.join(format!("fold-{fold:02}.json")), &json(&meta))?;
    }
    Ok(())
}

/// Loads a directory written by [`write_cv_results`], checking that the
/// records agree with each other.
pub fn read_cv_results(dir: &Path) -> Result<LoadedResults, HarnessError> {
    let invocation: Invocation = parse_json(&dir.join("invocation.json"))?;
    let mut runs = Vec::with_capacity(invocation.folds);
    for fold in 0..invocation.folds {
        let run: RunRecord = parse_json(&dir.join("runs").join(format!("fold-{fold:02}.json")))?;
        if run.fold != Some(fold) {
            return Err(HarnessError::Format(format!("run record for fold {fold} names {:?}", run.fold)));
        }
        runs.push(run);
    }
    let confusion = ConfusionMatrix::from_tsv(&read(&dir.join("confusion.tsv"))?)?;
    if confusion.classes != invocation.composers {
        return Err(HarnessError::Format("confusion matrix classes differ from the invocation".into()));
    }
    let totals: Vec<usize> = confusion.row_totals().iter().map(|&t| t as usize).collect();
    if totals != invocation.class_counts {
        return Err(HarnessError::Format("confusion matrix row totals differ from class counts".into()));
    }
    Ok(LoadedResults {
        invocation,
        runs,
        confusion,
    })
}

/// Writes every sweep cell as a results directory named `<arch>-s<size>`,
/// plus `sweep.tsv` with accuracies (percent) and the size/accuracy Spearman
/// correlation per architecture.
pub fn write_sweep_results(dir: &Path, base: &Invocation, sweep: &SweepResult) -> Result<String, HarnessError> {
    for (model, row) in sweep.models.iter().zip(&sweep.runs) {
        for (&size, result) in sweep.sizes.iter().zip(row) {
            let mut inv = base.clone();
            inv.model = ModelConfig {
                sample: size,
                classes: result.composers.len(),
                ..*model
            };
            let name = format!("{}-s{size}", model.architecture);
            write_cv_results(&dir.join(name), &inv, result)?;
        }
    }
    let mut table = String::from("architecture");
    for s in &sweep.sizes {
        let _ = write!(table, "\ts={s}");
    }
    table.push_str("\tspearman\n");
    for ((arch, acc), rho) in sweep.architectures().iter().zip(sweep.accuracy()).zip(sweep.trend()) {
        table.push_str(arch.name());
        for a in acc {
            let _ = write!(table, "\t{:.1}", 100.0 * a);
        }
        let _ = writeln!(table, "\t{rho:.3}");
    }
    write(&dir.join("sweep.tsv"), table.as_bytes())?;
    Ok(table)
}
