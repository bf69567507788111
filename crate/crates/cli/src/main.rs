//! `kernattr` — build vocabularies, encode corpora, and run composer
//! classification experiments.
//!
//! Exit codes: 0 success, 2 input error (bad flags, missing or corrupt
//! artifacts), 3 runtime error (training divergence, write failures).

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use kernattr::autodiff::AdamConfig;
use kernattr::corpus::{manifest_template, scan_directory, write_synthetic_corpus, SynthOptions};
use kernattr::encode::{
    build_vocab, encode_corpus, sha256_hex, write_atomic, EncodeError, EncodedCorpus, Manifest, NoteValueVocab,
    UnknownValuePolicy,
};
use kernattr::harness::{
    cross_validate, majority_baseline, read_cv_results, render_summary, sample_size_sweep, select_composers,
    write_checkpoint_files, write_cv_results, write_sweep_results, CvConfig, CvResult, Dataset, HarnessError,
    Invocation, LoadedResults, TrainConfig,
};
use kernattr::kern::ParseOptions;
use kernattr::models::{Architecture, ModelConfig};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "kernattr", version, about = "Composer attribution from **kern scores")]
struct Cli {
    #[command(flatten)]
    paths: Paths,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Paths {
    /// Corpus manifest (path<TAB>composer<TAB>scale per line).
    #[arg(long, env = "KERNATTR_MANIFEST", global = true)]
    manifest: Option<PathBuf>,
    /// Note-value vocabulary file.
    #[arg(long, env = "KERNATTR_VOCAB", global = true)]
    vocab: Option<PathBuf>,
    /// Encoded corpus cache.
    #[arg(long, env = "KERNATTR_CACHE", global = true)]
    cache: Option<PathBuf>,
    /// Output file or results directory.
    #[arg(long, env = "KERNATTR_OUT", global = true)]
    out: Option<PathBuf>,
    #[arg(long, env = "KERNATTR_SEED", global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug, Clone)]
struct Experiment {
    /// Model architecture; `sweep` accepts a comma-separated list.
    #[arg(long, env = "KERNATTR_ARCH", value_delimiter = ',')]
    arch: Vec<Architecture>,
    /// Time indices taken from the start, middle and end of each score.
    #[arg(long, env = "KERNATTR_SAMPLE_SIZE", default_value_t = 500)]
    sample_size: usize,
    #[arg(long, env = "KERNATTR_EPOCHS", default_value_t = 100)]
    epochs: usize,
    #[arg(long, env = "KERNATTR_LR", default_value_t = 1e-3)]
    lr: f64,
    /// Folds trained in parallel.
    #[arg(long, env = "KERNATTR_JOBS", default_value_t = 1)]
    jobs: usize,
    #[arg(long, env = "KERNATTR_FOLDS", default_value_t = 10)]
    folds: usize,
    #[arg(long, env = "KERNATTR_BATCH_SIZE", default_value_t = 32)]
    batch_size: usize,
    /// Voice-convolution window n.
    #[arg(long, env = "KERNATTR_CONV_WINDOW")]
    conv_window: Option<usize>,
    /// First voice-convolution width k.
    #[arg(long, env = "KERNATTR_CONV_WIDTH")]
    conv_width: Option<usize>,
    /// Second voice-convolution width k2.
    #[arg(long, env = "KERNATTR_CONV_WIDTH2")]
    conv_width2: Option<usize>,
    /// Pitch-convolution window j.
    #[arg(long, env = "KERNATTR_HARMONIC_WINDOW")]
    harmonic_window: Option<usize>,
    #[arg(long, env = "KERNATTR_HARMONIC_WIDTH")]
    harmonic_width: Option<usize>,
    #[arg(long, env = "KERNATTR_HARMONIC_WIDTH2")]
    harmonic_width2: Option<usize>,
    /// Also write each fold's selected parameters under checkpoints/.
    #[arg(long, env = "KERNATTR_SAVE_PARAMS")]
    save_params: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List .krn files below ROOT (first directory level = composer) as a manifest.
    Manifest {
        root: Option<PathBuf>,
        /// Print the commented template of the reference collection instead.
        #[arg(long, conflicts_with = "root")]
        template: bool,
    },
    /// Write a small synthetic corpus with a manifest (for trials and tests).
    Synth {
        #[arg(long, default_value_t = 2)]
        styles: usize,
        #[arg(long, default_value_t = 10)]
        per_style: usize,
        /// Score length in sixteenth notes.
        #[arg(long, default_value_t = 96)]
        length: u32,
    },
    /// Collect the note-value vocabulary, pitch range and spine count of a corpus.
    BuildVocab,
    /// Encode every manifest score into the binary cache.
    Encode {
        /// Map note-values missing from the vocabulary to the nearest one.
        #[arg(long)]
        nearest: bool,
    },
    /// 10-fold cross-validation of one architecture.
    Xval(Experiment),
    /// Cross-validation on a subset of composers.
    Subset {
        /// Comma-separated composer names, e.g. bach,haydn,beethoven.
        #[arg(long, value_delimiter = ',', required = true)]
        composers: Vec<String>,
        #[command(flatten)]
        experiment: Experiment,
    },
    /// Cross-validation over a grid of architectures and sample sizes.
    Sweep {
        #[arg(long, value_delimiter = ',', default_value = "10,20,50,100,250,500")]
        sizes: Vec<usize>,
        #[command(flatten)]
        experiment: Experiment,
    },
    /// Print the tables of a results directory (or a sweep directory).
    Report { dir: Option<PathBuf> },
    /// Accuracy of always predicting the most common composer.
    Baseline {
        #[arg(long, value_delimiter = ',')]
        composers: Vec<String>,
    },
}

enum Failure {
    Input(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<EncodeError> for Failure {
    fn from(e: EncodeError) -> Self {
        Failure::Input(e.into())
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        let input = matches!(
            e.root(),
            HarnessError::InvalidConfig(_)
                | HarnessError::TooFewScores { .. }
                | HarnessError::UnknownComposer(_)
                | HarnessError::Format(_)
        );
        if input {
            Failure::Input(e.into())
        } else {
            Failure::Runtime(e.into())
        }
    }
}

fn input(e: anyhow::Error) -> Failure {
    Failure::Input(e)
}

type Result<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}

fn require<'a>(path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| input(anyhow!("--{flag} is required for this command")))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    write_atomic(path, bytes)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(Failure::Runtime)
}

fn run(cli: Cli) -> Result<()> {
    let paths = &cli.paths;
    match &cli.command {
        Command::Manifest { root, template } => {
            let text = if *template {
                manifest_template()
            } else {
                let root = root
                    .as_deref()
                    .ok_or_else(|| input(anyhow!("give a corpus ROOT or --template")))?;
                // Absolute paths keep the manifest valid wherever it is written.
                let root = std::fs::canonicalize(root)
                    .with_context(|| format!("reading {}", root.display()))
                    .map_err(input)?;
                let manifest = scan_directory(&root)?;
                if manifest.is_empty() {
                    return Err(EncodeError::EmptyManifest.into());
                }
                manifest.to_text()
            };
            emit(paths.out.as_deref(), &text)
        }
        Command::Synth {
            styles,
            per_style,
            length,
        } => {
            let dir = require(&paths.out, "out")?;
            let opts = SynthOptions {
                length: *length,
                ..SynthOptions::default()
            };
            let manifest = write_synthetic_corpus(dir, *styles, *per_style, paths.seed, opts)
                .with_context(|| format!("writing {}", dir.display()))
                .map_err(Failure::Runtime)?;
            println!("{} scores, manifest {}", manifest.len(), dir.join("manifest.tsv").display());
            Ok(())
        }
        Command::BuildVocab => {
            let manifest = Manifest::load(require(&paths.manifest, "manifest")?)?;
            let vocab = build_vocab(&manifest, ParseOptions::default())?;
            let out = require(&paths.vocab, "vocab")?;
            write_file(out, vocab.to_toml().as_bytes())?;
            println!(
                "{} scores: {} note-values, {} pitches, {} spines -> {}",
                manifest.len(),
                vocab.n_values(),
                vocab.n_pitches,
                vocab.max_spines,
                out.display()
            );
            Ok(())
        }
        Command::Encode { nearest } => {
            let manifest = Manifest::load(require(&paths.manifest, "manifest")?)?;
            let (vocab, sha) = load_vocab(require(&paths.vocab, "vocab")?)?;
            let policy = if *nearest {
                UnknownValuePolicy::Nearest
            } else {
                UnknownValuePolicy::Reject
            };
            let corpus = encode_corpus(&manifest, &vocab, &sha, policy)?;
            let out = require(&paths.cache, "cache")?;
            write_file(out, &corpus.to_bytes())?;
            println!(
                "{} scores, {} composers -> {}",
                corpus.scores.len(),
                corpus.composers.len(),
                out.display()
            );
            Ok(())
        }
        Command::Xval(exp) => {
            let (vocab, corpus) = load_inputs(paths)?;
            experiment(paths, exp, &vocab, &corpus, "xval")
        }
        Command::Subset {
            composers,
            experiment: exp,
        } => {
            let (vocab, corpus) = load_inputs(paths)?;
            let subset = select_composers(&corpus, composers)?;
            experiment(paths, exp, &vocab, &subset, "subset")
        }
        Command::Sweep {
            sizes,
            experiment: exp,
        } => {
            let (vocab, corpus) = load_inputs(paths)?;
            let archs = if exp.arch.is_empty() {
                vec![Architecture::Histogram, Architecture::VoiceDeep, Architecture::Hybrid]
            } else {
                exp.arch.clone()
            };
            let models = archs
                .iter()
                .map(|&a| model_config(exp, a, &vocab))
                .collect::<Vec<_>>();
            let out = require(&paths.out, "out")?;
            let sweep = sample_size_sweep(&corpus, &models, sizes, &train_config(paths, exp), &cv_config(paths, exp))?;
            let base = invocation(paths, exp, models[0], &corpus, "sweep");
            let table = write_sweep_results(out, &base, &sweep)?;
            print!("{table}");
            Ok(())
        }
        Command::Report { dir } => {
            let dir = dir
                .as_deref()
                .or(paths.out.as_deref())
                .ok_or_else(|| input(anyhow!("give a results directory")))?;
            report(dir)
        }
        Command::Baseline { composers } => {
            let corpus = EncodedCorpus::load(require(&paths.cache, "cache")?)?;
            let corpus = if composers.is_empty() {
                corpus
            } else {
                select_composers(&corpus, composers)?
            };
            let counts = corpus.class_counts();
            let labels: Vec<usize> = corpus.scores.iter().map(|s| s.label()).collect();
            let best = counts.iter().enumerate().max_by_key(|(i, &c)| (c, std::cmp::Reverse(*i)));
            for (name, count) in corpus.composers.iter().zip(&counts) {
                println!("{name}\t{count}");
            }
            if let Some((i, _)) = best {
                println!(
                    "majority\t{}\t{:.1}",
                    corpus.composers[i],
                    100.0 * majority_baseline(&labels)
                );
            }
            Ok(())
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_file(path, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_vocab(path: &Path) -> Result<(NoteValueVocab, String)> {
    let text = std::fs::read(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(input)?;
    let vocab = NoteValueVocab::load(path)?;
    Ok((vocab, sha256_hex(&text)))
}

fn load_inputs(paths: &Paths) -> Result<(NoteValueVocab, EncodedCorpus)> {
    let (vocab, sha) = load_vocab(require(&paths.vocab, "vocab")?)?;
    let corpus = EncodedCorpus::load(require(&paths.cache, "cache")?)?;
    if corpus.vocab_sha256 != sha {
        return Err(input(anyhow!(
            "cache was encoded with a different vocabulary (sha256 {} vs {sha}); re-run encode",
            corpus.vocab_sha256
        )));
    }
    if corpus.channels != vocab.channels() || corpus.spines != vocab.max_spines {
        return Err(input(anyhow!("cache shape does not match the vocabulary")));
    }
    Ok((vocab, corpus))
}

fn single_arch(exp: &Experiment) -> Result<Architecture> {
    match exp.arch.as_slice() {
        [] => Ok(Architecture::Hybrid),
        [a] => Ok(*a),
        _ => Err(input(anyhow!("this command takes a single --arch"))),
    }
}

fn model_config(exp: &Experiment, arch: Architecture, vocab: &NoteValueVocab) -> ModelConfig {
    let mut m = ModelConfig::new(arch, vocab.n_pitches, vocab.n_values(), vocab.max_spines);
    m.sample = exp.sample_size;
    m.conv.n = exp.conv_window.unwrap_or(m.conv.n);
    m.conv.k = exp.conv_width.unwrap_or(m.conv.k);
    m.conv.k2 = exp.conv_width2.unwrap_or(m.conv.k2);
    m.harmonic.j = exp.harmonic_window.unwrap_or(m.harmonic.j);
    m.harmonic.k = exp.harmonic_width.unwrap_or(m.harmonic.k);
    m.harmonic.k2 = exp.harmonic_width2.unwrap_or(m.harmonic.k2);
    m
}

fn train_config(paths: &Paths, exp: &Experiment) -> TrainConfig {
    TrainConfig {
        max_epochs: exp.epochs,
        batch_size: exp.batch_size,
        adam: AdamConfig {
            lr: exp.lr,
            ..AdamConfig::default()
        },
        seed: paths.seed,
        stop_at_perfect_train: false,
    }
}

fn cv_config(paths: &Paths, exp: &Experiment) -> CvConfig {
    CvConfig {
        folds: exp.folds,
        seed: paths.seed,
        jobs: exp.jobs,
        keep_params: exp.save_params,
    }
}

fn invocation(paths: &Paths, exp: &Experiment, model: ModelConfig, corpus: &EncodedCorpus, command: &str) -> Invocation {
    Invocation {
        command: command.into(),
        args: std::env::args().skip(1).collect(),
        seed: paths.seed,
        folds: exp.folds,
        jobs: exp.jobs,
        model,
        train: train_config(paths, exp),
        vocab_sha256: corpus.vocab_sha256.clone(),
        composers: corpus.composers.clone(),
        class_counts: corpus.class_counts(),
    }
}

fn experiment(paths: &Paths, exp: &Experiment, vocab: &NoteValueVocab, corpus: &EncodedCorpus, command: &str) -> Result<()> {
    let arch = single_arch(exp)?;
    let out = require(&paths.out, "out")?;
    let model = model_config(exp, arch, vocab);
    model.validate().map_err(|e| input(e.into()))?;
    let data = Dataset::from_corpus(corpus, exp.sample_size);
    let result = cross_validate(&data, &model, &train_config(paths, exp), &cv_config(paths, exp))?;
    let model = ModelConfig {
        classes: data.composers.len(),
        ..model
    };
    let inv = invocation(paths, exp, model, corpus, command);
    write_cv_results(out, &inv, &result)?;
    if exp.save_params {
        write_checkpoint_files(out, &inv, &result)?;
    }
    eprint!("{}", fold_table(&result));
    print!("{}", render_summary(&inv, &result.confusion));
    Ok(())
}

fn fold_table(result: &CvResult) -> String {
    let mut out = String::new();
    for run in &result.runs {
        out += &format!(
            "fold {}\tepoch {}\tvalidation {:.1}\ttest {:.1}\t{:.1}s\n",
            run.fold.unwrap_or(0),
            run.chosen_epoch,
            100.0 * run.validation_accuracy,
            100.0 * run.test_accuracy.unwrap_or(f64::NAN),
            run.wall_time_secs
        );
    }
    out
}

fn render_loaded(loaded: &LoadedResults) -> String {
    let mut out = render_summary(&loaded.invocation, &loaded.confusion);
    out.push('\n');
    out += &loaded.confusion.render_percentages();
    out.push('\n');
    for run in &loaded.runs {
        out += &format!(
            "fold {}\tepoch {}\tvalidation {:.1}\ttest {:.1}\n",
            run.fold.unwrap_or(0),
            run.chosen_epoch,
            100.0 * run.validation_accuracy,
            100.0 * run.test_accuracy.unwrap_or(f64::NAN)
        );
    }
    out += &format!("command: kernattr {}\n", loaded.invocation.args.join(" "));
    out
}

fn report(dir: &Path) -> Result<()> {
    if !dir.is_dir() {
        return Err(input(anyhow!("{} is not a directory", dir.display())));
    }
    if dir.join("invocation.json").exists() {
        print!("{}", render_loaded(&read_cv_results(dir)?));
        return Ok(());
    }
    let mut subdirs: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))
        .map_err(input)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("invocation.json").exists())
        .collect();
    subdirs.sort();
    if subdirs.is_empty() {
        println!("no runs in {}", dir.display());
        return Ok(());
    }
    for sub in &subdirs {
        let loaded = read_cv_results(sub)?;
        println!("== {}", sub.file_name().unwrap_or_default().to_string_lossy());
        print!("{}", render_summary(&loaded.invocation, &loaded.confusion));
        println!();
    }
    if let Ok(table) = std::fs::read_to_string(dir.join("sweep.tsv")) {
        print!("{table}");
    }
    Ok(())
}
