//! End-to-end fitting, prediction, persistence and the six-pairing benchmark.
//!
//! Representations are fitted on the training texts only. Texts handed to
//! [`Bundle`] methods are assumed to be cleaned already, except for
//! [`Bundle::predict_raw`].

use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use crate::config::{HoldoutMode, ModelKind, Representation, RunConfig};
use crate::corpus::Dataset;
use crate::error::{Error, Result};
use crate::io::{BinReader, BinWriter};
use crate::metrics::{render_table, reports_to_json, MetricsReport};
use crate::models::{
    random_predict, threshold, train_forest, train_tree, Classifier, FfnnModel, ForestConfig, LstmModel,
    MaxFeatures, Network, RandomBaseline, TreeConfig, FFNN_HIDDEN, LSTM_HIDDEN,
};
use crate::preprocess::{clean_text, CleaningConfig};
use crate::represent::{
    build_vocabulary, embed_sequence_with, infer_doc, onehot_sequence, tfidf_vector, train_doc2vec,
    train_word2vec, Doc2VecConfig, Doc2VecModel, EmbeddingMatrix, Frame, Sequence, TfidfModel, Vocabulary,
    Word2VecConfig,
};
use crate::rng::derive_seed;
use crate::taxonomy::{LabelVector, TaxonomyMap, N_LABELS};
use crate::training::{
    evaluate_network, stratified_split, train_model, LossWeights, Samples, TrainHistory,
};

const MAGIC: &[u8; 4] = b"TGMD";
const VERSION: u32 = 1;

// Seed streams derived from the master seed.
const STREAM_CARVE: u64 = 1;
const STREAM_REPRESENT: u64 = 2;
const STREAM_INIT: u64 = 3;
const STREAM_TRAIN: u64 = 4;
const STREAM_CLASSIFIER: u64 = 5;
const STREAM_INFER: u64 = 6;
const STREAM_BENCH_SPLIT: u64 = 7;
const STREAM_BENCH_PAIR: u64 = 100;

/// Fraction of the training set kept for fitting when a validation fold is carved out.
pub const CARVE_RATIO: f64 = 0.9;

/// The benchmark pairings, in report order.
pub const BENCHMARK_PAIRS: [(Option<Representation>, ModelKind); 6] = [
    (Some(Representation::Tfidf), ModelKind::Forest),
    (Some(Representation::Tfidf), ModelKind::Tree),
    (None, ModelKind::Random),
    (Some(Representation::Onehot), ModelKind::Lstm),
    (Some(Representation::Doc2vec), ModelKind::Ffnn),
    (Some(Representation::Word2vec), ModelKind::Lstm),
];

#[derive(Debug, Clone, PartialEq)]
enum RepState {
    None,
    Tfidf(TfidfModel),
    Onehot,
    Word2vec {
        embeddings: EmbeddingMatrix,
        rows: Vec<Arc<[f64]>>,
    },
    Doc2vec {
        model: Doc2VecModel,
        infer_steps: usize,
        infer_seed: u64,
    },
}

impl RepState {
    fn word2vec(embeddings: EmbeddingMatrix) -> Self {
        let rows = embeddings.shared_rows();
        RepState::Word2vec { embeddings, rows }
    }
}

/// Model inputs for a batch of documents.
enum Inputs {
    Dense(Vec<Vec<f64>>),
    Seqs(Vec<Sequence>),
    Count,
}

impl Inputs {
    fn subset(&self, idx: &[usize]) -> Inputs {
        match self {
            Inputs::Dense(v) => Inputs::Dense(idx.iter().map(|&i| v[i].clone()).collect()),
            Inputs::Seqs(v) => Inputs::Seqs(idx.iter().map(|&i| v[i].clone()).collect()),
            Inputs::Count => Inputs::Count,
        }
    }

    fn dense(&self) -> &[Vec<f64>] {
        match self {
            Inputs::Dense(v) => v,
            _ => unreachable!("pairing guarantees dense inputs"),
        }
    }

    fn seqs(&self) -> &[Sequence] {
        match self {
            Inputs::Seqs(v) => v,
            _ => unreachable!("pairing guarantees sequence inputs"),
        }
    }
}

/// A fitted representation plus classifier, ready for prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    final_tags: Vec<String>,
    representation: Option<Representation>,
    vocab: Vocabulary,
    state: RepState,
    classifier: Classifier,
    loss_weights: LossWeights,
}

/// Output of [`fit`].
#[derive(Debug, Clone)]
pub struct Fitted {
    pub bundle: Bundle,
    /// Per-epoch curves for gradient-trained models.
    pub history: Option<TrainHistory>,
}

fn labels_for(d: &Dataset, tags: &[String]) -> Result<Vec<LabelVector>> {
    d.problems
        .iter()
        .map(|p| {
            let mut v = LabelVector::zeros();
            for t in &p.tags {
                let i = tags
                    .iter()
                    .position(|f| f == t)
                    .ok_or_else(|| Error::UnknownLabel(t.clone()))?;
                v.set(i, true);
            }
            Ok(v)
        })
        .collect()
}

fn sequence_or_zero(mut s: Sequence) -> Sequence {
    if s.is_empty() {
        s.push(Frame::Zero).expect("zero frame fits any dimension");
    }
    s
}

fn dense_refs(v: &[Vec<f64>]) -> Vec<&[f64]> {
    v.iter().map(Vec::as_slice).collect()
}

fn proba_dense<N: Network<Input = [f64]>>(m: &N, xs: &[Vec<f64>]) -> Result<Vec<[f64; N_LABELS]>> {
    xs.par_iter().map(|x| m.predict_proba(x)).collect()
}

fn proba_seqs<N: Network<Input = Sequence>>(m: &N, xs: &[Sequence]) -> Result<Vec<[f64; N_LABELS]>> {
    xs.par_iter().map(|x| m.predict_proba(x)).collect()
}

/// Fits a representation and classifier on `train`.
///
/// Gradient-trained models stop early on a validation fold carved from
/// `train` or, with [`HoldoutMode::Test`], on `holdout`. Tags of both datasets
/// must already be final tags of `taxonomy`.
pub fn fit(train: &Dataset, holdout: Option<&Dataset>, taxonomy: &TaxonomyMap, cfg: &RunConfig) -> Result<Fitted> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyCorpus("training set is empty"));
    }
    let tags = taxonomy.final_tags().to_vec();
    let y = labels_for(train, &tags)?;
    let rep = if cfg.model == ModelKind::Random {
        None
    } else {
        cfg.representation
    };
    let rep_seed = derive_seed(cfg.seed, STREAM_REPRESENT);
    let vocab = match rep {
        Some(_) => build_vocabulary(train)?,
        None => Vocabulary::default(),
    };

    let (state, train_x) = match rep {
        None => (RepState::None, Inputs::Count),
        Some(Representation::Tfidf) => {
            let m = TfidfModel::fit(train, &vocab)?;
            let x = train.texts().map(|t| tfidf_vector(t, &m, &vocab)).collect();
            (RepState::Tfidf(m), Inputs::Dense(x))
        }
        Some(Representation::Onehot) => {
            let x = train.texts().map(|t| sequence_or_zero(onehot_sequence(t, &vocab))).collect();
            (RepState::Onehot, Inputs::Seqs(x))
        }
        Some(Representation::Word2vec) => {
            let w2v = train_word2vec(
                train,
                &vocab,
                &Word2VecConfig {
                    dim: cfg.word2vec_dim,
                    epochs: cfg.word2vec_epochs,
                    seed: rep_seed,
                    ..Default::default()
                },
            )?;
            let state = RepState::word2vec(w2v.embeddings);
            let RepState::Word2vec { rows, embeddings } = &state else { unreachable!() };
            let x = train
                .texts()
                .map(|t| sequence_or_zero(embed_sequence_with(t, rows, embeddings.dim(), &vocab)))
                .collect();
            (state, Inputs::Seqs(x))
        }
        Some(Representation::Doc2vec) => {
            let d2v = train_doc2vec(
                train,
                &vocab,
                &Doc2VecConfig {
                    dim: cfg.doc2vec_dim,
                    epochs: cfg.doc2vec_epochs,
                    seed: rep_seed,
                    ..Default::default()
                },
            )?;
            let x = (0..train.len()).map(|i| d2v.embeddings.get(i).to_vec()).collect();
            let state = RepState::Doc2vec {
                model: d2v.model,
                infer_steps: cfg.infer_steps,
                infer_seed: derive_seed(cfg.seed, STREAM_INFER),
            };
            (state, Inputs::Dense(x))
        }
    };

    let mut bundle = Bundle {
        final_tags: tags,
        representation: rep,
        vocab,
        state,
        classifier: Classifier::Random(RandomBaseline::new(derive_seed(cfg.seed, STREAM_CLASSIFIER))),
        loss_weights: cfg.train.loss_weights,
    };
    let class_seed = derive_seed(cfg.seed, STREAM_CLASSIFIER);
    let mut history = None;

    match cfg.model {
        ModelKind::Random => {}
        ModelKind::Tree => {
            let tree = train_tree(
                train_x.dense(),
                &y,
                TreeConfig {
                    seed: class_seed,
                    ..Default::default()
                },
            )?;
            bundle.classifier = Classifier::Tree(tree);
        }
        ModelKind::Forest => {
            let forest = train_forest(
                train_x.dense(),
                &y,
                ForestConfig {
                    n_trees: cfg.n_trees,
                    max_features: MaxFeatures::Sqrt,
                    seed: class_seed,
                    ..Default::default()
                },
            )?;
            bundle.classifier = Classifier::Forest(forest);
        }
        ModelKind::Ffnn | ModelKind::Lstm => {
            let (fit_x, fit_y, val_x, val_y) = match cfg.holdout {
                HoldoutMode::Carved => {
                    let s = stratified_split(train, CARVE_RATIO, derive_seed(cfg.seed, STREAM_CARVE))?;
                    let pick = |idx: &[usize]| idx.iter().map(|&i| y[i]).collect::<Vec<_>>();
                    (
                        train_x.subset(&s.train_indices),
                        pick(&s.train_indices),
                        train_x.subset(&s.test_indices),
                        pick(&s.test_indices),
                    )
                }
                HoldoutMode::Test => {
                    let h = holdout.ok_or_else(|| {
                        Error::Argument("holdout mode 'test' needs a test dataset".into())
                    })?;
                    let hy = labels_for(h, &bundle.final_tags)?;
                    let hx = bundle.inputs(h.texts())?;
                    let all: Vec<usize> = (0..train.len()).collect();
                    (train_x.subset(&all), y.clone(), hx, hy)
                }
            };
            let mut tc = cfg.train.clone();
            tc.seed = derive_seed(cfg.seed, STREAM_TRAIN);
            let init = derive_seed(cfg.seed, STREAM_INIT);
            if cfg.model == ModelKind::Ffnn {
                let n_in = fit_x.dense().first().map_or(cfg.doc2vec_dim, Vec::len);
                let tr = Samples::new(dense_refs(fit_x.dense()), &fit_y)?;
                let va = Samples::new(dense_refs(val_x.dense()), &val_y)?;
                let (m, h) = train_model(FfnnModel::new(n_in, FFNN_HIDDEN, init), &tr, &va, &tc)?;
                bundle.classifier = Classifier::Ffnn(m);
                history = Some(h);
            } else {
                let n_in = fit_x.seqs().first().map_or(1, Sequence::dim);
                let tr = Samples::new(fit_x.seqs().iter().collect(), &fit_y)?;
                let va = Samples::new(val_x.seqs().iter().collect(), &val_y)?;
                let (m, h) = train_model(LstmModel::new(n_in, LSTM_HIDDEN, init), &tr, &va, &tc)?;
                bundle.classifier = Classifier::Lstm(m);
                history = Some(h);
            }
        }
    }
    Ok(Fitted { bundle, history })
}

impl Bundle {
    pub fn final_tags(&self) -> &[String] {
        &self.final_tags
    }

    pub fn representation(&self) -> Option<Representation> {
        self.representation
    }

    pub fn classifier(&self) -> &Classifier {
        &self.classifier
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn label(&self) -> String {
        crate::config::pairing_label(self.representation, self.classifier.kind())
    }

    fn inputs<'a>(&self, texts: impl Iterator<Item = &'a str>) -> Result<Inputs> {
        let v = &self.vocab;
        Ok(match &self.state {
            RepState::None => Inputs::Count,
            RepState::Tfidf(m) => Inputs::Dense(texts.map(|t| tfidf_vector(t, m, v)).collect()),
            RepState::Onehot => Inputs::Seqs(texts.map(|t| sequence_or_zero(onehot_sequence(t, v))).collect()),
            RepState::Word2vec { embeddings, rows } => Inputs::Seqs(
                texts
                    .map(|t| sequence_or_zero(embed_sequence_with(t, rows, embeddings.dim(), v)))
                    .collect(),
            ),
            RepState::Doc2vec {
                model,
                infer_steps,
                infer_seed,
            } => {
                let texts: Vec<&str> = texts.collect();
                Inputs::Dense(
                    texts
                        .par_iter()
                        .map(|t| infer_doc(t, model, v, *infer_steps, *infer_seed))
                        .collect(),
                )
            }
        })
    }

    /// Per-label probabilities; `None` for the random baseline, which has none.
    fn probabilities(&self, x: &Inputs) -> Result<Option<Vec<[f64; N_LABELS]>>> {
        Ok(Some(match &self.classifier {
            Classifier::Random(_) => return Ok(None),
            Classifier::Tree(t) => x.dense().par_iter().map(|r| t.predict_fractions(r)).collect::<Result<_>>()?,
            Classifier::Forest(f) => x.dense().par_iter().map(|r| f.predict_fractions(r)).collect::<Result<_>>()?,
            Classifier::Ffnn(m) => proba_dense(m, x.dense())?,
            Classifier::Lstm(m) => proba_seqs(m, x.seqs())?,
        }))
    }

    fn predict_inputs(&self, x: &Inputs, n: usize) -> Result<Vec<LabelVector>> {
        match (&self.classifier, self.probabilities(x)?) {
            (Classifier::Random(m), _) => Ok(random_predict(m, n)),
            (_, Some(p)) => Ok(p.iter().map(threshold).collect()),
            (_, None) => unreachable!(),
        }
    }

    /// Label vectors for already-cleaned texts.
    pub fn predict<S: AsRef<str>>(&self, texts: &[S]) -> Result<Vec<LabelVector>> {
        let x = self.inputs(texts.iter().map(AsRef::as_ref))?;
        self.predict_inputs(&x, texts.len())
    }

    /// Cleans raw problem text, then returns the predicted final tags.
    pub fn predict_raw(&self, raw: &str, cleaning: &CleaningConfig) -> Result<Vec<String>> {
        let cleaned = clean_text(raw, cleaning);
        let v = self.predict(&[cleaned])?[0];
        Ok((0..N_LABELS).filter(|&i| v.get(i)).map(|i| self.final_tags[i].clone()).collect())
    }

    /// Scores the bundle on a labelled dataset. Loss and parameter counts are
    /// reported for gradient-trained models only.
    pub fn evaluate(&self, test: &Dataset) -> Result<MetricsReport> {
        if test.is_empty() {
            return Err(Error::EmptyCorpus("evaluation set is empty"));
        }
        let truth = labels_for(test, &self.final_tags)?;
        let x = self.inputs(test.texts())?;
        let pred = self.predict_inputs(&x, test.len())?;
        let loss = match (&self.classifier, &x) {
            (Classifier::Ffnn(m), Inputs::Dense(v)) => {
                Some(evaluate_network(m, &Samples::new(dense_refs(v), &truth)?, &self.loss_weights)?.0)
            }
            (Classifier::Lstm(m), Inputs::Seqs(v)) => {
                Some(evaluate_network(m, &Samples::new(v.iter().collect(), &truth)?, &self.loss_weights)?.0)
            }
            _ => None,
        };
        MetricsReport::from_predictions(self.label(), &pred, &truth, loss, self.classifier.trainable_params())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = BinWriter::new();
        w.bytes(MAGIC);
        w.u32(VERSION);
        w.u8(self.classifier.kind().code());
        w.u8(Representation::code(self.representation));
        for t in &self.final_tags {
            w.str(t);
        }
        w.f64(self.loss_weights.w1);
        w.f64(self.loss_weights.w0);
        w.len32(self.vocab.len());
        for t in self.vocab.terms() {
            w.str(t);
        }
        match &self.state {
            RepState::None | RepState::Onehot => {}
            RepState::Tfidf(m) => {
                w.u64(m.n_docs() as u64);
                for &df in m.doc_freq() {
                    w.u64(df as u64);
                }
            }
            RepState::Word2vec { embeddings, .. } => embeddings.write(&mut w),
            RepState::Doc2vec {
                model,
                infer_steps,
                infer_seed,
            } => {
                model.write(&mut w);
                w.len32(*infer_steps);
                w.u64(*infer_seed);
            }
        }
        self.classifier.write(&mut w);
        w.into_bytes()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = BinReader::new(bytes);
        r.expect_magic(MAGIC)?;
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported model version {version}")));
        }
        let kind = ModelKind::from_code(r.u8()?)?;
        let representation = Representation::from_code(r.u8()?)?;
        let final_tags = (0..N_LABELS).map(|_| r.str()).collect::<Result<Vec<_>>>()?;
        let loss_weights = LossWeights::new(r.f64()?, r.f64()?)?;
        let n_terms = r.len32()?;
        let terms = (0..n_terms).map(|_| r.str()).collect::<Result<Vec<_>>>()?;
        let vocab = if terms.is_empty() {
            Vocabulary::default()
        } else {
            Vocabulary::from_terms(terms)?
        };
        let state = match representation {
            None => RepState::None,
            Some(Representation::Onehot) => RepState::Onehot,
            Some(Representation::Tfidf) => {
                let n_docs = r.u64()? as usize;
                let df = (0..vocab.len()).map(|_| Ok(r.u64()? as usize)).collect::<Result<Vec<_>>>()?;
                RepState::Tfidf(TfidfModel::from_counts(n_docs, df))
            }
            Some(Representation::Word2vec) => {
                let e = EmbeddingMatrix::read(&mut r)?;
                if e.rows() != vocab.len() {
                    return Err(Error::Format("embedding rows do not match the vocabulary".into()));
                }
                RepState::word2vec(e)
            }
            Some(Representation::Doc2vec) => {
                let model = Doc2VecModel::read(&mut r)?;
                RepState::Doc2vec {
                    model,
                    infer_steps: r.len32()?,
                    infer_seed: r.u64()?,
                }
            }
        };
        let classifier = Classifier::read(kind, &mut r)?;
        r.finish()?;
        if kind != ModelKind::Random {
            crate::config::validate_pairing(representation, kind)
                .map_err(|e| Error::Format(format!("inconsistent model file: {e}")))?;
        }
        Ok(Self {
            final_tags,
            representation,
            vocab,
            state,
            classifier,
            loss_weights,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

/// Results of [`run_benchmark`], one report per pairing in [`BENCHMARK_PAIRS`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkReport {
    pub n_train: usize,
    pub n_test: usize,
    pub reports: Vec<MetricsReport>,
}

impl BenchmarkReport {
    pub fn to_json(&self) -> String {
        reports_to_json(&self.reports)
    }

    pub fn to_table(&self) -> String {
        render_table(&self.reports)
    }
}

/// Splits `d` stratified at `cfg.ratio`, then fits and scores every benchmark
/// pairing. Per-pairing hyperparameters (learning rate, dimensions) come from
/// `cfg`, except that each pairing uses its representation's default learning
/// rate. Pairings run in parallel with independent seeds; the result depends
/// only on the inputs.
pub fn run_benchmark(d: &Dataset, taxonomy: &TaxonomyMap, cfg: &RunConfig) -> Result<BenchmarkReport> {
    cfg.validate()?;
    let split = stratified_split(d, cfg.ratio, derive_seed(cfg.seed, STREAM_BENCH_SPLIT))?;
    let reports = BENCHMARK_PAIRS
        .par_iter()
        .enumerate()
        .map(|(i, &(rep, model))| {
            let mut c = cfg.clone();
            c.representation = rep;
            c.model = model;
            c.seed = derive_seed(cfg.seed, STREAM_BENCH_PAIR + i as u64);
            if let Some(r) = rep {
                c.train.learning_rate = crate::training::TrainConfig::default_learning_rate(r);
            }
            let fitted = fit(&split.train, Some(&split.test), taxonomy, &c)?;
            fitted.bundle.evaluate(&split.test)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BenchmarkReport {
        n_train: split.train.len(),
        n_test: split.test.len(),
        reports,
    })
}
