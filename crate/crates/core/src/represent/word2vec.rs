//! Skip-gram with negative sampling.

use rand::Rng;

use crate::corpus::Dataset;
use crate::error::{Error, Result};
use crate::rng;

use super::sampling::{dot, log_sigmoid, sigmoid, NegativeTable};
use super::{EmbeddingMatrix, Vocabulary};

/// Defaults follow the reference word2vec tool: window 5, 5 negatives,
/// starting learning rate 0.025.
#[derive(Debug, Clone, PartialEq)]
pub struct Word2VecConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub lr0: f64,
    pub seed: u64,
}

impl Default for Word2VecConfig {
    fn default() -> Self {
        Self {
            dim: 300,
            window: 5,
            negatives: 5,
            epochs: 15,
            lr0: 0.025,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Word2Vec {
    pub embeddings: EmbeddingMatrix,
    /// Mean negative-sampling loss per (center, context) pair, one entry per epoch.
    pub epoch_losses: Vec<f64>,
}

pub fn train_word2vec(d: &Dataset, vocab: &Vocabulary, cfg: &Word2VecConfig) -> Result<Word2Vec> {
    if cfg.dim == 0 || cfg.window == 0 || cfg.epochs == 0 {
        return Err(Error::Argument("word2vec dim, window and epochs must be positive".into()));
    }
    let docs: Vec<Vec<usize>> = d.texts().map(|t| vocab.encode(t)).collect();
    let total_tokens: usize = docs.iter().map(Vec::len).sum();
    if total_tokens == 0 {
        return Err(Error::EmptyCorpus("word2vec needs at least one in-vocabulary token"));
    }
    let v = vocab.len();
    let dim = cfg.dim;
    let mut rng = rng::seeded(cfg.seed);
    let half = 0.5 / dim as f64;
    let mut input: Vec<f64> = (0..v * dim).map(|_| rng.gen_range(-half..half)).collect();
    let mut output = vec![0.0; v * dim];
    let table = NegativeTable::from_corpus(&docs, v);

    let schedule = (cfg.epochs * total_tokens) as f64;
    let min_lr = cfg.lr0 * 1e-4;
    let mut seen = 0usize;
    let mut grad = vec![0.0; dim];
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    for _ in 0..cfg.epochs {
        let (mut loss_sum, mut pairs) = (0.0, 0usize);
        for doc in &docs {
            for (pos, &center) in doc.iter().enumerate() {
                let lr = (cfg.lr0 * (1.0 - seen as f64 / schedule)).max(min_lr);
                seen += 1;
                // Shrunken window, sampled per center word.
                let reach = cfg.window - rng.gen_range(0..cfg.window);
                let lo = pos.saturating_sub(reach);
                let hi = (pos + reach).min(doc.len() - 1);
                for ctx_pos in lo..=hi {
                    if ctx_pos == pos {
                        continue;
                    }
                    let ctx = doc[ctx_pos];
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    let c_row = center * dim..(center + 1) * dim;
                    for k in 0..=cfg.negatives {
                        let (target, label) = if k == 0 {
                            (ctx, 1.0)
                        } else {
                            let t = table.sample(&mut rng);
                            if t == ctx {
                                continue;
                            }
                            (t, 0.0)
                        };
                        let o_row = target * dim..(target + 1) * dim;
                        let score = dot(&input[c_row.clone()], &output[o_row.clone()]);
                        loss_sum -= if label == 1.0 {
                            log_sigmoid(score)
                        } else {
                            log_sigmoid(-score)
                        };
                        let g = (label - sigmoid(score)) * lr;
                        let (inp, out) = (&input[c_row.clone()], &mut output[o_row]);
                        for j in 0..dim {
                            grad[j] += g * out[j];
                            out[j] += g * inp[j];
                        }
                    }
                    for (x, g) in input[c_row].iter_mut().zip(&grad) {
                        *x += g;
                    }
                    pairs += 1;
                }
            }
        }
        let mean = if pairs == 0 { 0.0 } else { loss_sum / pairs as f64 };
        if !mean.is_finite() {
            return Err(Error::Divergence {
                epoch: epoch_losses.len(),
                last_finite: epoch_losses.len().checked_sub(1),
            });
        }
        epoch_losses.push(mean);
    }

    Ok(Word2Vec {
        embeddings: EmbeddingMatrix::from_parts(v, dim, input, output)?,
        epoch_losses,
    })
}
