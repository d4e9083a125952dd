//! The five predictors and their shared plumbing.

mod ffnn;
mod forest;
mod lstm;
mod random;
mod tree;

use std::ops::Range;

use crate::config::ModelKind;
use crate::error::{Error, Result};
use crate::io::{BinReader, BinWriter};
use crate::taxonomy::{LabelVector, N_LABELS};
use crate::training::LossWeights;

pub use ffnn::{ffnn_forward, FfnnModel, FFNN_HIDDEN, FFNN_INPUT};
pub use forest::{forest_predict, train_forest, ForestConfig, ForestModel};
pub use lstm::{lstm_forward, LstmModel, LSTM_HIDDEN};
pub use random::{random_predict, RandomBaseline};
pub use tree::{train_tree, tree_predict, MaxFeatures, Node, TreeConfig, TreeModel};

/// Decision threshold on per-label probabilities.
pub const THRESHOLD: f64 = 0.5;

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// A gradient-trained model whose parameters live in one flat buffer.
pub trait Network: Clone + Send + Sync {
    type Input: ?Sized + Sync;

    fn params(&self) -> &[f64];
    fn params_mut(&mut self) -> &mut [f64];
    /// Named, contiguous, non-overlapping ranges covering `params()`.
    fn tensors(&self) -> Vec<(&'static str, Range<usize>)>;
    fn logits(&self, x: &Self::Input) -> Result<[f64; N_LABELS]>;

    /// Adds `scale * d(loss)/d(params)` for one sample to `grad`; returns the
    /// sample's summed per-entry loss.
    fn backprop(
        &self,
        x: &Self::Input,
        y: &LabelVector,
        w: &LossWeights,
        scale: f64,
        grad: &mut [f64],
    ) -> Result<f64>;

    /// Batched [`Network::backprop`]; returns one summed loss per sample.
    fn backprop_batch(
        &self,
        xs: &[&Self::Input],
        ys: &[&LabelVector],
        w: &LossWeights,
        scale: f64,
        grad: &mut [f64],
    ) -> Result<Vec<f64>> {
        xs.iter()
            .zip(ys)
            .map(|(x, y)| self.backprop(x, y, w, scale, grad))
            .collect()
    }

    fn predict_proba(&self, x: &Self::Input) -> Result<[f64; N_LABELS]> {
        Ok(self.logits(x)?.map(sigmoid))
    }

    fn n_params(&self) -> usize {
        self.params().len()
    }
}

pub fn threshold(p: &[f64; N_LABELS]) -> LabelVector {
    LabelVector::from_bools(p.iter().map(|&v| v >= THRESHOLD))
}

/// Any trained predictor.
#[derive(Debug, Clone, PartialEq)]
pub enum Classifier {
    Random(RandomBaseline),
    Tree(TreeModel),
    Forest(ForestModel),
    Ffnn(FfnnModel),
    Lstm(LstmModel),
}

impl Classifier {
    pub fn kind(&self) -> ModelKind {
        match self {
            Classifier::Random(_) => ModelKind::Random,
            Classifier::Tree(_) => ModelKind::Tree,
            Classifier::Forest(_) => ModelKind::Forest,
            Classifier::Ffnn(_) => ModelKind::Ffnn,
            Classifier::Lstm(_) => ModelKind::Lstm,
        }
    }

    /// Trainable parameter count; `None` for models without gradient-trained weights.
    pub fn trainable_params(&self) -> Option<usize> {
        match self {
            Classifier::Ffnn(m) => Some(m.n_params()),
            Classifier::Lstm(m) => Some(m.n_params()),
            _ => None,
        }
    }

    pub(crate) fn write(&self, w: &mut BinWriter) {
        match self {
            Classifier::Random(m) => {
                w.len32(m.n_labels);
                w.u64(m.seed);
            }
            Classifier::Tree(m) => m.write(w),
            Classifier::Forest(m) => m.write(w),
            Classifier::Ffnn(m) => m.write(w),
            Classifier::Lstm(m) => m.write(w),
        }
    }

    pub(crate) fn read(kind: ModelKind, r: &mut BinReader) -> Result<Self> {
        Ok(match kind {
            ModelKind::Random => {
                let n_labels = r.len32()?;
                if n_labels == 0 || n_labels > N_LABELS {
                    return Err(Error::Format(format!("bad label count {n_labels}")));
                }
                Classifier::Random(RandomBaseline {
                    n_labels,
                    seed: r.u64()?,
                })
            }
            ModelKind::Tree => Classifier::Tree(TreeModel::read(r)?),
            ModelKind::Forest => Classifier::Forest(ForestModel::read(r)?),
            ModelKind::Ffnn => Classifier::Ffnn(FfnnModel::read(r)?),
            ModelKind::Lstm => Classifier::Lstm(LstmModel::read(r)?),
        })
    }
}

/// Trainable parameters; zero for the random baseline and tree models.
pub fn count_params(m: &Classifier) -> usize {
    m.trainable_params().unwrap_or(0)
}
