use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;

use crate::config::Representation;
use crate::error::{Error, Result};
use crate::metrics::{weighted_hamming_score, MetricWeights};
use crate::models::{threshold, Network};
use crate::rng;
use crate::taxonomy::{LabelVector, N_LABELS};

use super::loss::{sample_loss_from_logits, LossWeights};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub loss_weights: LossWeights,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            batch_size: 32,
            max_epochs: 200,
            patience: 10,
            loss_weights: LossWeights::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// 0.005 for word2vec sequences, 0.01 otherwise.
    pub fn default_learning_rate(rep: Representation) -> f64 {
        match rep {
            Representation::Word2vec => 0.005,
            _ => 0.01,
        }
    }

    pub fn for_representation(rep: Representation) -> Self {
        Self {
            learning_rate: Self::default_learning_rate(rep),
            ..Default::default()
        }
    }

    /// A zero learning rate is accepted so a run can leave parameters untouched.
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Argument(format!("learning rate must be finite and non-negative, got {}", self.learning_rate)));
        }
        if self.batch_size == 0 || self.max_epochs == 0 || self.patience == 0 {
            return Err(Error::Argument("batch_size, max_epochs and patience must be positive".into()));
        }
        self.loss_weights.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    pub train_loss: Vec<f64>,
    pub holdout_loss: Vec<f64>,
    pub holdout_whs: Vec<f64>,
    /// Index of the epoch whose parameters were kept.
    pub best_epoch: usize,
}

impl TrainHistory {
    pub fn len(&self) -> usize {
        self.train_loss.len()
    }

    pub fn is_empty(&self) -> bool {
        self.train_loss.is_empty()
    }

    /// `epoch,train_loss,holdout_loss,holdout_whs`, epochs counted from 0.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,train_loss,holdout_loss,holdout_whs\n");
        for e in 0..self.len() {
            let _ = writeln!(
                s,
                "{e},{},{},{}",
                self.train_loss[e], self.holdout_loss[e], self.holdout_whs[e]
            );
        }
        s
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Inputs paired with their label vectors.
pub struct Samples<'a, I: ?Sized> {
    pub x: Vec<&'a I>,
    pub y: &'a [LabelVector],
}

impl<'a, I: ?Sized> Samples<'a, I> {
    pub fn new(x: Vec<&'a I>, y: &'a [LabelVector]) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: y.len(),
                got: x.len(),
            });
        }
        Ok(Self { x, y })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = Self::B1 * self.m[i] + (1.0 - Self::B1) * g;
            self.v[i] = Self::B2 * self.v[i] + (1.0 - Self::B2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + Self::EPS);
        }
    }
}

/// Mean per-entry weighted loss and weighted Hamming score of `net` on `data`.
pub fn evaluate_network<N: Network>(net: &N, data: &Samples<'_, N::Input>, w: &LossWeights) -> Result<(f64, f64)> {
    let mut loss = 0.0;
    let mut preds = Vec::with_capacity(data.len());
    for (x, y) in data.x.iter().zip(data.y) {
        let z = net.logits(x)?;
        loss += sample_loss_from_logits(&z, y, w);
        preds.push(threshold(&z.map(crate::models::sigmoid)));
    }
    let whs = weighted_hamming_score(&preds, data.y, MetricWeights::default())?;
    Ok((loss / (data.len() * N_LABELS) as f64, whs))
}

/// Mini-batch Adam on the weighted loss with early stopping on holdout loss.
///
/// Each epoch visits the training samples in an order drawn from `cfg.seed`.
/// Training stops once the holdout loss has gone `patience` epochs without a
/// new minimum, and the parameters from the best epoch are returned.
pub fn train_model<N: Network>(
    model: N,
    train: &Samples<'_, N::Input>,
    holdout: &Samples<'_, N::Input>,
    cfg: &TrainConfig,
) -> Result<(N, TrainHistory)> {
    cfg.validate()?;
    if train.is_empty() || holdout.is_empty() {
        return Err(Error::EmptyCorpus("training needs non-empty train and holdout sets"));
    }
    let mut model = model;
    let n = train.len();
    let mut rng = rng::seeded(cfg.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut adam = Adam::new(model.n_params());
    let mut grad = vec![0.0; model.n_params()];
    let mut sample_loss = vec![0.0; n];
    let mut history = TrainHistory::default();
    let mut best = (f64::INFINITY, model.params().to_vec());
    let mut since_best = 0;

    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let xs: Vec<&N::Input> = chunk.iter().map(|&i| train.x[i]).collect();
            let ys: Vec<&LabelVector> = chunk.iter().map(|&i| &train.y[i]).collect();
            grad.fill(0.0);
            let scale = 1.0 / (chunk.len() * N_LABELS) as f64;
            let losses = model.backprop_batch(&xs, &ys, &cfg.loss_weights, scale, &mut grad)?;
            for (&i, l) in chunk.iter().zip(losses) {
                sample_loss[i] = l;
            }
            if cfg.learning_rate > 0.0 {
                adam.step(model.params_mut(), &grad, cfg.learning_rate);
            }
        }
        let train_loss = sample_loss.iter().sum::<f64>() / (n * N_LABELS) as f64;
        let (holdout_loss, holdout_whs) = evaluate_network(&model, holdout, &cfg.loss_weights)?;
        if !train_loss.is_finite() || !holdout_loss.is_finite() {
            return Err(Error::Divergence {
                epoch,
                last_finite: epoch.checked_sub(1),
            });
        }
        history.train_loss.push(train_loss);
        history.holdout_loss.push(holdout_loss);
        history.holdout_whs.push(holdout_whs);
        if holdout_loss < best.0 {
            best = (holdout_loss, model.params().to_vec());
            history.best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }
    model.params_mut().copy_from_slice(&best.1);
    Ok((model, history))
}

/// Relative error between analytic and central-difference gradients for one tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorCheck {
    pub name: &'static str,
    pub rel_error: f64,
}

/// Compares analytic gradients of the mean weighted loss over `xs` with
/// central finite differences of step `h`, tensor by tensor. The error of a
/// tensor is `|a - n| / max(|a|, |n|)` over its whole gradient block (0 when
/// both are zero).
pub fn gradient_check<N: Network>(
    net: &N,
    xs: &[&N::Input],
    ys: &[LabelVector],
    w: &LossWeights,
    h: f64,
) -> Result<Vec<TensorCheck>> {
    let entries = (xs.len() * N_LABELS) as f64;
    let yrefs: Vec<&LabelVector> = ys.iter().collect();
    let mut analytic = vec![0.0; net.n_params()];
    net.backprop_batch(xs, &yrefs, w, 1.0 / entries, &mut analytic)?;

    let loss = |m: &N| -> Result<f64> {
        let mut s = 0.0;
        for (x, y) in xs.iter().zip(ys) {
            s += sample_loss_from_logits(&m.logits(x)?, y, w);
        }
        Ok(s / entries)
    };
    let mut probe = net.clone();
    let mut out = Vec::new();
    for (name, range) in net.tensors() {
        let (mut diff, mut na, mut nn) = (0.0, 0.0, 0.0);
        for i in range {
            let orig = probe.params()[i];
            probe.params_mut()[i] = orig + h;
            let up = loss(&probe)?;
            probe.params_mut()[i] = orig - h;
            let down = loss(&probe)?;
            probe.params_mut()[i] = orig;
            let numeric = (up - down) / (2.0 * h);
            diff += (analytic[i] - numeric).powi(2);
            na += analytic[i].powi(2);
            nn += numeric.powi(2);
        }
        let denom = na.sqrt().max(nn.sqrt());
        out.push(TensorCheck {
            name,
            rel_error: if denom == 0.0 { 0.0 } else { diff.sqrt() / denom },
        });
    }
    Ok(out)
}
