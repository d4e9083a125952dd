//! PV-DBOW: each document vector learns to predict the words of its document
//! through negative sampling. Word output weights are shared across documents
//! and frozen after training so unseen documents can be inferred.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::corpus::Dataset;
use crate::error::{Error, Result};
use crate::io::{BinReader, BinWriter};
use crate::rng;

use super::sampling::{dot, log_sigmoid, sigmoid, NegativeTable};
use super::Vocabulary;

#[derive(Debug, Clone, PartialEq)]
pub struct Doc2VecConfig {
    pub dim: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub lr0: f64,
    pub seed: u64,
}

impl Default for Doc2VecConfig {
    fn default() -> Self {
        Self {
            dim: 30,
            negatives: 5,
            epochs: 20,
            lr0: 0.025,
            seed: 1,
        }
    }
}

/// Per-document vectors, `n_docs x dim`, aligned with dataset order.
#[derive(Debug, Clone, PartialEq)]
pub struct DocEmbeddings {
    dim: usize,
    vectors: Vec<f64>,
}

impl DocEmbeddings {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }
}

/// Frozen state needed for inference.
#[derive(Debug, Clone, PartialEq)]
pub struct Doc2VecModel {
    dim: usize,
    negatives: usize,
    lr0: f64,
    output: Vec<f64>,
    table: NegativeTable,
}

impl Doc2VecModel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vocab_size(&self) -> usize {
        self.output.len() / self.dim
    }

    pub(crate) fn write(&self, w: &mut BinWriter) {
        w.len32(self.dim);
        w.len32(self.negatives);
        w.f64(self.lr0);
        w.len32(self.vocab_size());
        w.f64s(&self.output);
        w.f64s(self.table.cumulative());
    }

    pub(crate) fn read(r: &mut BinReader) -> Result<Self> {
        let dim = r.len32()?;
        let negatives = r.len32()?;
        let lr0 = r.f64()?;
        let v = r.len32()?;
        if dim == 0 || v == 0 {
            return Err(Error::Format("empty doc2vec state".into()));
        }
        let output = r.f64s(v * dim)?;
        let table = NegativeTable::from_cumulative(r.f64s(v)?);
        Ok(Self {
            dim,
            negatives,
            lr0,
            output,
            table,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Doc2Vec {
    pub embeddings: DocEmbeddings,
    pub model: Doc2VecModel,
    /// Mean negative-sampling loss per predicted word, one entry per epoch.
    pub epoch_losses: Vec<f64>,
}

fn init_vector<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    let half = 0.5 / dim as f64;
    (0..dim).map(|_| rng.gen_range(-half..half)).collect()
}

/// One negative-sampling step for document vector `doc` predicting `word`.
/// Returns the loss before the update. Output weights move only when `output_lr` is set.
#[allow(clippy::too_many_arguments)]
fn predict_word<R: Rng>(
    doc: &mut [f64],
    word: usize,
    output: &mut [f64],
    table: &NegativeTable,
    negatives: usize,
    lr: f64,
    update_output: bool,
    grad: &mut [f64],
    rng: &mut R,
) -> f64 {
    let dim = doc.len();
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut loss = 0.0;
    for k in 0..=negatives {
        let (target, label) = if k == 0 {
            (word, 1.0)
        } else {
            let t = table.sample(rng);
            if t == word {
                continue;
            }
            (t, 0.0)
        };
        let row = &mut output[target * dim..(target + 1) * dim];
        let score = dot(doc, row);
        loss -= if label == 1.0 {
            log_sigmoid(score)
        } else {
            log_sigmoid(-score)
        };
        let g = (label - sigmoid(score)) * lr;
        for j in 0..dim {
            grad[j] += g * row[j];
            if update_output {
                row[j] += g * doc[j];
            }
        }
    }
    for (x, g) in doc.iter_mut().zip(grad.iter()) {
        *x += g;
    }
    loss
}

pub fn train_doc2vec(d: &Dataset, vocab: &Vocabulary, cfg: &Doc2VecConfig) -> Result<Doc2Vec> {
    if d.is_empty() {
        return Err(Error::EmptyCorpus("doc2vec needs at least one document"));
    }
    if cfg.dim == 0 || cfg.epochs == 0 {
        return Err(Error::Argument("doc2vec dim and epochs must be positive".into()));
    }
    let docs: Vec<Vec<usize>> = d.texts().map(|t| vocab.encode(t)).collect();
    let total_tokens: usize = docs.iter().map(Vec::len).sum();
    if total_tokens == 0 {
        return Err(Error::EmptyCorpus("doc2vec needs at least one in-vocabulary token"));
    }
    let dim = cfg.dim;
    let v = vocab.len();
    let mut rng = rng::seeded(cfg.seed);
    let mut vectors: Vec<f64> = (0..docs.len()).flat_map(|_| init_vector(&mut rng, dim)).collect();
    let mut output = vec![0.0; v * dim];
    let table = NegativeTable::from_corpus(&docs, v);

    let schedule = (cfg.epochs * total_tokens) as f64;
    let min_lr = cfg.lr0 * 1e-4;
    let mut seen = 0usize;
    let mut grad = vec![0.0; dim];
    let mut order: Vec<usize> = (0..docs.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for &di in &order {
            let doc_vec = &mut vectors[di * dim..(di + 1) * dim];
            for &word in &docs[di] {
                let lr = (cfg.lr0 * (1.0 - seen as f64 / schedule)).max(min_lr);
                seen += 1;
                loss_sum += predict_word(
                    doc_vec,
                    word,
                    &mut output,
                    &table,
                    cfg.negatives,
                    lr,
                    true,
                    &mut grad,
                    &mut rng,
                );
            }
        }
        let mean = loss_sum / total_tokens as f64;
        if !mean.is_finite() {
            return Err(Error::Divergence {
                epoch: epoch_losses.len(),
                last_finite: epoch_losses.len().checked_sub(1),
            });
        }
        epoch_losses.push(mean);
    }

    Ok(Doc2Vec {
        embeddings: DocEmbeddings { dim, vectors },
        model: Doc2VecModel {
            dim,
            negatives: cfg.negatives,
            lr0: cfg.lr0,
            output,
            table,
        },
        epoch_losses,
    })
}

/// Fits a fresh document vector for `doc` with all word weights frozen.
///
/// The vector starts from a `seed`-determined initialization and runs `steps`
/// passes over the document's in-vocabulary tokens with the learning rate
/// decaying linearly from the training rate. A document with no known tokens
/// returns the initialization unchanged.
pub fn infer_doc(
    doc: &str,
    model: &Doc2VecModel,
    vocab: &Vocabulary,
    steps: usize,
    seed: u64,
) -> Vec<f64> {
    let mut rng = rng::seeded(seed);
    let mut vector = init_vector(&mut rng, model.dim);
    let tokens = vocab.encode(doc);
    if tokens.is_empty() || steps == 0 {
        return vector;
    }
    let mut output = model.output.clone();
    let mut grad = vec![0.0; model.dim];
    let min_lr = model.lr0 * 1e-4;
    for step in 0..steps {
        let lr = model.lr0 - (model.lr0 - min_lr) * step as f64 / steps as f64;
        for &word in &tokens {
            predict_word(
                &mut vector,
                word,
                &mut output,
                &model.table,
                model.negatives,
                lr,
                false,
                &mut grad,
                &mut rng,
            );
        }
    }
    vector
}
