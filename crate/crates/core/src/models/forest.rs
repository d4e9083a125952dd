use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::{BinReader, BinWriter};
use crate::rng;
use crate::taxonomy::{LabelVector, N_LABELS};

use super::tree::{grow, Columns, MaxFeatures, TreeConfig, TreeModel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub bootstrap: bool,
    pub max_features: MaxFeatures,
    pub max_depth: Option<usize>,
    pub min_split: usize,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 500,
            bootstrap: true,
            max_features: MaxFeatures::Sqrt,
            max_depth: None,
            min_split: 2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    trees: Vec<TreeModel>,
    seeds: Vec<u64>,
}

impl ForestModel {
    pub fn trees(&self) -> &[TreeModel] {
        &self.trees
    }

    pub fn seeds(&self) -> &[u64] {
        &self.seeds
    }

    pub fn n_features(&self) -> usize {
        self.trees[0].n_features()
    }

    /// Mean of the per-tree leaf fractions.
    pub fn predict_fractions(&self, x: &[f64]) -> Result<[f64; N_LABELS]> {
        let mut acc = [0.0; N_LABELS];
        for t in &self.trees {
            for (a, f) in acc.iter_mut().zip(t.predict_fractions(x)?) {
                *a += f;
            }
        }
        let n = self.trees.len() as f64;
        Ok(acc.map(|a| a / n))
    }

    pub(crate) fn write(&self, w: &mut BinWriter) {
        w.len32(self.trees.len());
        for (t, &s) in self.trees.iter().zip(&self.seeds) {
            w.u64(s);
            t.write(w);
        }
    }

    pub(crate) fn read(r: &mut BinReader) -> Result<Self> {
        let n = r.len32()?;
        if n == 0 {
            return Err(Error::Format("forest has no trees".into()));
        }
        let mut trees = Vec::with_capacity(n);
        let mut seeds = Vec::with_capacity(n);
        for _ in 0..n {
            seeds.push(r.u64()?);
            trees.push(TreeModel::read(r)?);
        }
        if trees.iter().any(|t| t.n_features() != trees[0].n_features()) {
            return Err(Error::Format("forest trees disagree on feature count".into()));
        }
        Ok(Self { trees, seeds })
    }
}

pub fn forest_predict(f: &ForestModel, x: &[f64], threshold: f64) -> Result<LabelVector> {
    let p = f.predict_fractions(x)?;
    Ok(LabelVector::from_bools(p.iter().map(|&v| v >= threshold)))
}

/// Trees are grown in parallel; tree `t` draws everything from
/// `derive_seed(seed, t)`, so the result does not depend on the thread count.
pub fn train_forest(x: &[Vec<f64>], y: &[LabelVector], cfg: ForestConfig) -> Result<ForestModel> {
    if cfg.n_trees == 0 {
        return Err(Error::Argument("a forest needs at least one tree".into()));
    }
    if cfg.min_split < 2 {
        return Err(Error::Argument("min_split must be at least 2".into()));
    }
    let cols = Columns::from_rows(x, y)?;
    let n = cols.n_rows();
    let seeds: Vec<u64> = (0..cfg.n_trees as u64).map(|t| rng::derive_seed(cfg.seed, t)).collect();
    let tree_cfg = TreeConfig {
        max_depth: cfg.max_depth,
        min_split: cfg.min_split,
        max_features: cfg.max_features,
        seed: 0,
    };
    let trees = seeds
        .par_iter()
        .map(|&s| {
            let mut r = rng::seeded(s);
            let mut sample: Vec<usize> = if cfg.bootstrap {
                (0..n).map(|_| r.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            grow(&cols, y, &mut sample, TreeConfig { seed: s, ..tree_cfg }, r)
        })
        .collect();
    Ok(ForestModel { trees, seeds })
}
