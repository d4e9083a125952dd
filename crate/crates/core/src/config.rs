//! Run configuration: a flat `key=value` text file.
//!
//! Blank lines and lines starting with `#` are ignored. Every key is optional;
//! see [`KEYS`] for the accepted set.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::training::{LossWeights, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Representation {
    Tfidf,
    Onehot,
    Word2vec,
    Doc2vec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    Random,
    Tree,
    Forest,
    Ffnn,
    Lstm,
}

/// Where early stopping gets its held-out data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HoldoutMode {
    /// Monitor the test set itself.
    Test,
    /// Carve a validation fold out of the training set.
    #[default]
    Carved,
}

impl Representation {
    pub const ALL: [Representation; 4] = [
        Representation::Tfidf,
        Representation::Onehot,
        Representation::Word2vec,
        Representation::Doc2vec,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Representation::Tfidf => "tfidf",
            Representation::Onehot => "onehot",
            Representation::Word2vec => "word2vec",
            Representation::Doc2vec => "doc2vec",
        }
    }

    pub(crate) fn code(rep: Option<Representation>) -> u8 {
        match rep {
            None => 0,
            Some(Representation::Tfidf) => 1,
            Some(Representation::Onehot) => 2,
            Some(Representation::Word2vec) => 3,
            Some(Representation::Doc2vec) => 4,
        }
    }

    pub(crate) fn from_code(c: u8) -> Result<Option<Representation>> {
        Ok(match c {
            0 => None,
            1 => Some(Representation::Tfidf),
            2 => Some(Representation::Onehot),
            3 => Some(Representation::Word2vec),
            4 => Some(Representation::Doc2vec),
            _ => return Err(Error::Format(format!("unknown representation code {c}"))),
        })
    }
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Random,
        ModelKind::Tree,
        ModelKind::Forest,
        ModelKind::Ffnn,
        ModelKind::Lstm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Random => "random",
            ModelKind::Tree => "tree",
            ModelKind::Forest => "forest",
            ModelKind::Ffnn => "ffnn",
            ModelKind::Lstm => "lstm",
        }
    }

    pub(crate) fn code(self) -> u8 {
        self as u8
    }

    pub(crate) fn from_code(c: u8) -> Result<Self> {
        Self::ALL
            .get(c as usize)
            .copied()
            .ok_or_else(|| Error::Format(format!("unknown model code {c}")))
    }
}

impl HoldoutMode {
    pub fn name(self) -> &'static str {
        match self {
            HoldoutMode::Test => "test",
            HoldoutMode::Carved => "carved",
        }
    }
}

macro_rules! name_impls {
    ($t:ty, $all:expr, $what:literal) => {
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $t {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                $all.into_iter().find(|v| v.name() == s).ok_or_else(|| {
                    let names: Vec<&str> = $all.iter().map(|v| v.name()).collect();
                    Error::Argument(format!("unknown {} {s:?}; expected one of {}", $what, names.join(", ")))
                })
            }
        }
    };
}

name_impls!(Representation, Representation::ALL, "representation");
name_impls!(ModelKind, ModelKind::ALL, "model");
name_impls!(HoldoutMode, [HoldoutMode::Test, HoldoutMode::Carved], "holdout mode");

/// The representation/model pairs that can be trained together.
pub const VALID_PAIRS: [(Option<Representation>, ModelKind); 6] = [
    (None, ModelKind::Random),
    (Some(Representation::Tfidf), ModelKind::Tree),
    (Some(Representation::Tfidf), ModelKind::Forest),
    (Some(Representation::Onehot), ModelKind::Lstm),
    (Some(Representation::Word2vec), ModelKind::Lstm),
    (Some(Representation::Doc2vec), ModelKind::Ffnn),
];

pub fn pairing_label(rep: Option<Representation>, model: ModelKind) -> String {
    match rep {
        Some(r) => format!("{r}+{model}"),
        None => model.to_string(),
    }
}

/// The random baseline ignores any representation; every other model needs
/// the one it was designed for.
pub fn validate_pairing(rep: Option<Representation>, model: ModelKind) -> Result<()> {
    if model == ModelKind::Random || VALID_PAIRS.contains(&(rep, model)) {
        return Ok(());
    }
    let valid: Vec<String> = VALID_PAIRS.iter().map(|&(r, m)| pairing_label(r, m)).collect();
    Err(Error::Pairing {
        representation: rep.map_or("none".into(), |r| r.to_string()),
        model: model.to_string(),
        valid: valid.join(", "),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub representation: Option<Representation>,
    pub model: ModelKind,
    pub train: TrainConfig,
    pub holdout: HoldoutMode,
    pub ratio: f64,
    /// Master seed; every component derives its own stream from it.
    pub seed: u64,
    pub n_trees: usize,
    pub word2vec_dim: usize,
    pub word2vec_epochs: usize,
    pub doc2vec_dim: usize,
    pub doc2vec_epochs: usize,
    pub infer_steps: usize,
    pub dataset: Option<PathBuf>,
    pub test_dataset: Option<PathBuf>,
    pub taxonomy: Option<PathBuf>,
    pub model_path: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::with_pairing(Some(Representation::Word2vec), ModelKind::Lstm)
    }
}

pub const KEYS: [&str; 22] = [
    "representation",
    "model",
    "learning_rate",
    "batch_size",
    "max_epochs",
    "patience",
    "loss_w1",
    "loss_w0",
    "seed",
    "holdout",
    "ratio",
    "n_trees",
    "word2vec_dim",
    "word2vec_epochs",
    "doc2vec_dim",
    "doc2vec_epochs",
    "infer_steps",
    "dataset",
    "test_dataset",
    "taxonomy",
    "model_path",
    "report",
];

impl RunConfig {
    /// Defaults for a pairing, including its learning rate.
    pub fn with_pairing(representation: Option<Representation>, model: ModelKind) -> Self {
        let train = match representation {
            Some(r) => TrainConfig::for_representation(r),
            None => TrainConfig::default(),
        };
        Self {
            representation,
            model,
            train,
            holdout: HoldoutMode::default(),
            ratio: 0.9,
            seed: 0,
            n_trees: 500,
            word2vec_dim: 300,
            word2vec_epochs: 15,
            doc2vec_dim: 30,
            doc2vec_epochs: 20,
            infer_steps: 50,
            dataset: None,
            test_dataset: None,
            taxonomy: None,
            model_path: None,
            report: None,
        }
    }

    pub fn label(&self) -> String {
        pairing_label(self.representation, self.model)
    }

    pub fn validate(&self) -> Result<()> {
        validate_pairing(self.representation, self.model)?;
        let bad = |key: &str, message: &str| {
            Err(Error::Config {
                key: key.into(),
                message: message.into(),
            })
        };
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return bad("ratio", "must lie strictly between 0 and 1");
        }
        if self.n_trees == 0 {
            return bad("n_trees", "must be positive");
        }
        if self.word2vec_dim == 0 || self.doc2vec_dim == 0 {
            return bad("word2vec_dim/doc2vec_dim", "must be positive");
        }
        if self.word2vec_epochs == 0 || self.doc2vec_epochs == 0 {
            return bad("word2vec_epochs/doc2vec_epochs", "must be positive");
        }
        self.train.validate().map_err(|e| Error::Config {
            key: "training".into(),
            message: e.to_string(),
        })
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str, what: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config {
        key: key.into(),
        message: format!("expected {what}, got {value:?}"),
    })
}

fn parse_enum<T: FromStr<Err = Error>>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|e: Error| Error::Config {
        key: key.into(),
        message: match e {
            Error::Argument(m) => m,
            other => other.to_string(),
        },
    })
}

/// Parses config text; omitted keys take their defaults, and the learning
/// rate defaults according to the chosen representation.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut pairs: Vec<(&str, &str)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Config {
                key: line.into(),
                message: format!("line {} is not key=value", lineno + 1),
            });
        };
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(Error::Config {
                key: k.into(),
                message: format!("unknown key; accepted keys: {}", KEYS.join(", ")),
            });
        }
        if pairs.iter().any(|(seen, _)| *seen == k) {
            return Err(Error::Config {
                key: k.into(),
                message: "given more than once".into(),
            });
        }
        pairs.push((k, v));
    }
    let get = |k: &str| pairs.iter().find(|(key, _)| *key == k).map(|(_, v)| *v);

    let representation = match get("representation") {
        None => Some(Representation::Word2vec),
        Some("none") => None,
        Some(v) => Some(parse_enum("representation", v)?),
    };
    let model = match get("model") {
        None => ModelKind::Lstm,
        Some(v) => parse_enum("model", v)?,
    };
    let mut c = RunConfig::with_pairing(representation, model);
    let mut w = LossWeights::default();
    for &(k, v) in &pairs {
        match k {
            "representation" | "model" => {}
            "learning_rate" => c.train.learning_rate = parse_num(k, v, "a non-negative number")?,
            "batch_size" => c.train.batch_size = parse_num(k, v, "a positive integer")?,
            "max_epochs" => c.train.max_epochs = parse_num(k, v, "a positive integer")?,
            "patience" => c.train.patience = parse_num(k, v, "a positive integer")?,
            "loss_w1" => w.w1 = parse_num(k, v, "a weight in [0, 1]")?,
            "loss_w0" => w.w0 = parse_num(k, v, "a weight in [0, 1]")?,
            "seed" => c.seed = parse_num(k, v, "an unsigned integer")?,
            "holdout" => c.holdout = parse_enum(k, v)?,
            "ratio" => c.ratio = parse_num(k, v, "a number in (0, 1)")?,
            "n_trees" => c.n_trees = parse_num(k, v, "a positive integer")?,
            "word2vec_dim" => c.word2vec_dim = parse_num(k, v, "a positive integer")?,
            "word2vec_epochs" => c.word2vec_epochs = parse_num(k, v, "a positive integer")?,
            "doc2vec_dim" => c.doc2vec_dim = parse_num(k, v, "a positive integer")?,
            "doc2vec_epochs" => c.doc2vec_epochs = parse_num(k, v, "a positive integer")?,
            "infer_steps" => c.infer_steps = parse_num(k, v, "a non-negative integer")?,
            "dataset" => c.dataset = Some(v.into()),
            "test_dataset" => c.test_dataset = Some(v.into()),
            "taxonomy" => c.taxonomy = Some(v.into()),
            "model_path" => c.model_path = Some(v.into()),
            "report" => c.report = Some(v.into()),
            _ => unreachable!("key list checked above"),
        }
    }
    if get("loss_w1").is_some() != get("loss_w0").is_some() {
        // A single weight implies its complement.
        if get("loss_w1").is_some() {
            w.w0 = 1.0 - w.w1;
        } else {
            w.w1 = 1.0 - w.w0;
        }
    }
    c.train.loss_weights = w;
    c.validate()?;
    Ok(c)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}
