use std::fmt;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use probtag::config::{load_config, HoldoutMode, RunConfig};
use probtag::corpus::{dataset_stats, generate_synthetic, load_dataset, load_raw_dataset};
use probtag::pipeline::{fit, run_benchmark, Bundle};
use probtag::preprocess::{preprocess_dataset, CleaningConfig};
use probtag::taxonomy::{apply_taxonomy, tag_frequencies};
use probtag::training::stratified_split;
use probtag::{Dataset, TaxonomyMap};

/// Strategy-tag prediction for programming-challenge statements.
#[derive(Parser)]
#[command(name = "probtag", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Clean raw scraped problems and drop duplicates and rare words.
    Preprocess {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Replacement stopword list, one word per line.
        #[arg(long)]
        stopwords: Option<PathBuf>,
        /// Words seen fewer times than this across the corpus are removed.
        #[arg(long)]
        min_count: Option<usize>,
    },
    /// Print problem count, words per problem and tags per problem as JSON.
    Stats {
        #[arg(long)]
        input: PathBuf,
    },
    /// Map original tags onto the final tag set.
    Taxonomy {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        taxonomy: Option<PathBuf>,
    },
    /// Stratified train/test split; writes train.json and test.json into --output.
    Split {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 0.9)]
        ratio: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Fit a representation and classifier and save the model file.
    Train {
        #[command(flatten)]
        run: RunArgs,
        /// Test set, used for early stopping with `--holdout test`.
        #[arg(long)]
        test: Option<PathBuf>,
        #[arg(long)]
        holdout: Option<HoldoutMode>,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Per-epoch loss curves (CSV) for gradient-trained models.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Score a saved model on a labelled dataset.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Also write the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Predict tags for one raw problem statement.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        text: String,
    },
    /// Generate a synthetic labelled corpus.
    Synth {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, visible_alias = "output")]
        out: PathBuf,
        #[arg(long)]
        taxonomy: Option<PathBuf>,
    },
    /// Split a dataset, fit every standard pairing and compare them.
    Benchmark {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        ratio: Option<f64>,
        /// Write the reports as a JSON array.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    taxonomy: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

/// A problem with how the tool was invoked, as opposed to with the data.
#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

impl RunArgs {
    fn resolve(&self) -> Result<(RunConfig, Dataset, TaxonomyMap)> {
        let mut cfg = match &self.config {
            Some(p) => load_config(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(p) = &self.input {
            cfg.dataset = Some(p.clone());
        }
        if let Some(p) = &self.taxonomy {
            cfg.taxonomy = Some(p.clone());
        }
        let path = cfg
            .dataset
            .clone()
            .ok_or_else(|| usage("no dataset: pass --input or set `dataset` in the config"))?;
        let data = load_dataset(&path)?;
        let taxonomy = load_taxonomy(cfg.taxonomy.as_deref())?;
        Ok((cfg, data, taxonomy))
    }
}

fn load_taxonomy(path: Option<&Path>) -> Result<TaxonomyMap> {
    Ok(match path {
        Some(p) => TaxonomyMap::load(p)?,
        None => TaxonomyMap::default_map(),
    })
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn out(s: &str) -> Result<()> {
    match std::io::stdout().lock().write_all(s.as_bytes()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Preprocess {
            input,
            output,
            stopwords,
            min_count,
        } => {
            let raw = load_raw_dataset(&input)?;
            let mut cfg = match stopwords {
                Some(p) => CleaningConfig::with_stopwords(CleaningConfig::load_stopwords(p)?),
                None => CleaningConfig::default(),
            };
            if let Some(m) = min_count {
                cfg.min_word_occurrences = m;
            }
            let clean = preprocess_dataset(&raw, &cfg)?;
            eprintln!("kept {} of {} problems", clean.len(), raw.len());
            clean.save(&output)?;
        }
        Command::Stats { input } => {
            let stats = dataset_stats(&load_dataset(&input)?);
            out(&(serde_json::to_string_pretty(&stats)? + "\n"))?;
        }
        Command::Taxonomy {
            input,
            output,
            taxonomy,
        } => {
            let mapped = apply_taxonomy(&load_dataset(&input)?, &load_taxonomy(taxonomy.as_deref())?)?;
            for (tag, n) in tag_frequencies(&mapped) {
                eprintln!("{tag}\t{n}");
            }
            mapped.save(&output)?;
        }
        Command::Split {
            input,
            output,
            ratio,
            seed,
        } => {
            let s = stratified_split(&load_dataset(&input)?, ratio, seed)?;
            std::fs::create_dir_all(&output).with_context(|| format!("creating {}", output.display()))?;
            s.train.save(output.join("train.json"))?;
            s.test.save(output.join("test.json"))?;
            eprintln!("train {} / test {}", s.train.len(), s.test.len());
        }
        Command::Train {
            run,
            test,
            holdout,
            model,
            report,
        } => {
            let (mut cfg, train, taxonomy) = run.resolve()?;
            if let Some(h) = holdout {
                cfg.holdout = h;
            }
            if let Some(p) = test {
                cfg.test_dataset = Some(p);
            }
            if let Some(p) = model {
                cfg.model_path = Some(p);
            }
            if let Some(p) = report {
                cfg.report = Some(p);
            }
            let model_path = cfg
                .model_path
                .clone()
                .ok_or_else(|| usage("no model path: pass --model or set `model_path` in the config"))?;
            let test = match &cfg.test_dataset {
                Some(p) => Some(load_dataset(p)?),
                None if cfg.holdout == HoldoutMode::Test => {
                    return Err(usage("--holdout test needs --test or `test_dataset` in the config"))
                }
                None => None,
            };
            let fitted = fit(&train, test.as_ref(), &taxonomy, &cfg)?;
            fitted.bundle.save(&model_path)?;
            if let (Some(p), Some(h)) = (&cfg.report, &fitted.history) {
                h.save_csv(p)?;
            }
            if let Some(h) = &fitted.history {
                eprintln!("{} epochs, best epoch {}", h.len(), h.best_epoch);
            }
            if let Some(t) = &test {
                out(&fitted.bundle.evaluate(t)?.to_json())?;
            }
        }
        Command::Evaluate { model, input, report } => {
            let r = Bundle::load(&model)?.evaluate(&load_dataset(&input)?)?;
            let json = r.to_json();
            out(&json)?;
            if let Some(p) = report {
                write(&p, &json)?;
            }
        }
        Command::Predict { model, text } => {
            let tags = Bundle::load(&model)?.predict_raw(&text, &CleaningConfig::default())?;
            out(&(serde_json::to_string(&tags)? + "\n"))?;
        }
        Command::Synth {
            n,
            seed,
            out,
            taxonomy,
        } => {
            generate_synthetic(n, &load_taxonomy(taxonomy.as_deref())?, seed).save(&out)?;
        }
        Command::Benchmark { run, ratio, report } => {
            let (mut cfg, data, taxonomy) = run.resolve()?;
            if let Some(r) = ratio {
                cfg.ratio = r;
            }
            if let Some(p) = report {
                cfg.report = Some(p);
            }
            let b = run_benchmark(&data, &taxonomy, &cfg)?;
            eprintln!("train {} / test {}", b.n_train, b.n_test);
            out(&b.to_table())?;
            if let Some(p) = &cfg.report {
                write(p, &b.to_json())?;
            }
        }
    }
    Ok(())
}

fn is_usage(e: &anyhow::Error) -> bool {
    e.downcast_ref::<Usage>().is_some()
        || e.downcast_ref::<probtag::Error>().is_some_and(probtag::Error::is_usage)
}

/// The error chain, skipping causes already spelled out by their parent.
fn describe(e: &anyhow::Error) -> String {
    let mut msg = e.to_string();
    for cause in e.chain().skip(1) {
        let c = cause.to_string();
        if !msg.contains(&c) {
            msg = format!("{msg}: {c}");
        }
    }
    msg
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(if is_usage(&e) { 1 } else { 2 })
        }
    }
}
