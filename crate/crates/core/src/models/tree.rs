//! Multi-output CART with mean binary Gini impurity over the labels.

use rand::Rng;

use crate::error::{Error, Result};
use crate::io::{BinReader, BinWriter};
use crate::rng::{self, Rng as SeededRng};
use crate::taxonomy::{LabelVector, N_LABELS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaxFeatures {
    All,
    /// `floor(sqrt(F))`, at least one.
    Sqrt,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, n_features: usize) -> usize {
        let k = match self {
            MaxFeatures::All => n_features,
            MaxFeatures::Sqrt => (n_features as f64).sqrt().floor() as usize,
            MaxFeatures::Count(k) => k,
        };
        k.clamp(1, n_features.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeConfig {
    /// `None` grows until leaves are pure.
    pub max_depth: Option<usize>,
    pub min_split: usize,
    pub max_features: MaxFeatures,
    pub seed: u64,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_split: 2,
            max_features: MaxFeatures::All,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        fractions: [f64; N_LABELS],
    },
}

/// Nodes are stored in preorder; the root is node 0.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeModel {
    n_features: usize,
    nodes: Vec<Node>,
}

impl TreeModel {
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }

    pub fn leaf(fractions: [f64; N_LABELS], n_features: usize) -> Self {
        Self {
            n_features,
            nodes: vec![Node::Leaf { fractions }],
        }
    }

    pub fn predict_fractions(&self, x: &[f64]) -> Result<[f64; N_LABELS]> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: x.len(),
            });
        }
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { fractions } => return Ok(*fractions),
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub(crate) fn write(&self, w: &mut BinWriter) {
        w.len32(self.n_features);
        w.len32(self.nodes.len());
        for n in &self.nodes {
            match n {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    w.u8(0);
                    w.len32(*feature);
                    w.f64(*threshold);
                    w.len32(*left);
                    w.len32(*right);
                }
                Node::Leaf { fractions } => {
                    w.u8(1);
                    w.f64s(fractions);
                }
            }
        }
    }

    pub(crate) fn read(r: &mut BinReader) -> Result<Self> {
        let n_features = r.len32()?;
        let n = r.len32()?;
        let mut nodes = Vec::with_capacity(n);
        for i in 0..n {
            let node = match r.u8()? {
                0 => {
                    let feature = r.len32()?;
                    let threshold = r.f64()?;
                    let left = r.len32()?;
                    let right = r.len32()?;
                    if feature >= n_features || left <= i || right <= i || left >= n || right >= n {
                        return Err(Error::Format(format!("invalid split node {i}")));
                    }
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    }
                }
                1 => Node::Leaf {
                    fractions: r.f64s(N_LABELS)?.try_into().unwrap(),
                },
                t => return Err(Error::Format(format!("unknown node tag {t}"))),
            };
            nodes.push(node);
        }
        if nodes.is_empty() {
            return Err(Error::Format("tree has no nodes".into()));
        }
        Ok(Self { n_features, nodes })
    }
}

/// Bit `i` is set iff the leaf's positive fraction for label `i` reaches `threshold`.
pub fn tree_predict(t: &TreeModel, x: &[f64], threshold: f64) -> Result<LabelVector> {
    let f = t.predict_fractions(x)?;
    Ok(LabelVector::from_bools(f.iter().map(|&p| p >= threshold)))
}

/// Column-major copy of the training features.
#[derive(Debug, Clone)]
pub(crate) struct Columns {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl Columns {
    pub fn from_rows(x: &[Vec<f64>], y: &[LabelVector]) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        if x.is_empty() {
            return Err(Error::Argument("tree training needs at least one sample".into()));
        }
        let n_cols = x[0].len();
        let mut data = vec![0.0; x.len() * n_cols];
        for (r, row) in x.iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::DimensionMismatch {
                    expected: n_cols,
                    got: row.len(),
                });
            }
            for (c, &v) in row.iter().enumerate() {
                data[c * x.len() + r] = v;
            }
        }
        Ok(Self {
            n_rows: x.len(),
            n_cols,
            data,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    fn col(&self, c: usize) -> &[f64] {
        &self.data[c * self.n_rows..(c + 1) * self.n_rows]
    }
}

struct Builder<'a> {
    x: &'a Columns,
    y: &'a [LabelVector],
    cfg: TreeConfig,
    k_features: usize,
    rng: SeededRng,
    nodes: Vec<Node>,
    feature_pool: Vec<usize>,
    scratch: Vec<(f64, usize)>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    score: f64,
}

fn positives(y: &[LabelVector], idx: &[usize]) -> [usize; N_LABELS] {
    let mut pos = [0usize; N_LABELS];
    for &s in idx {
        for (p, &b) in pos.iter_mut().zip(y[s].bits()) {
            *p += b as usize;
        }
    }
    pos
}

/// `n * mean_l gini_l`, times the label count (a constant that preserves ordering).
fn weighted_gini(pos: &[usize; N_LABELS], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    pos.iter()
        .map(|&p| {
            let p = p as f64;
            2.0 * p * (nf - p) / nf
        })
        .sum()
}

impl Builder<'_> {
    fn build(&mut self, idx: &mut [usize], depth: usize) -> usize {
        let me = self.nodes.len();
        let pos = positives(self.y, idx);
        let n = idx.len();
        let pure = pos.iter().all(|&p| p == 0 || p == n);
        let depth_done = self.cfg.max_depth.is_some_and(|d| depth >= d);

        let split = if pure || n < self.cfg.min_split || depth_done {
            None
        } else {
            self.best_split(idx, &pos)
        };
        let Some(split) = split else {
            let mut fractions = [0.0; N_LABELS];
            for (f, &p) in fractions.iter_mut().zip(&pos) {
                *f = p as f64 / n as f64;
            }
            self.nodes.push(Node::Leaf { fractions });
            return me;
        };

        self.nodes.push(Node::Leaf {
            fractions: [0.0; N_LABELS],
        });
        let col = self.x.col(split.feature);
        let mut mid = 0;
        for i in 0..idx.len() {
            if col[idx[i]] <= split.threshold {
                idx.swap(i, mid);
                mid += 1;
            }
        }
        let (l, r) = idx.split_at_mut(mid);
        // Keep sample order stable inside children so builds are reproducible.
        l.sort_unstable();
        r.sort_unstable();
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        self.nodes[me] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        me
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let f = self.x.n_cols;
        if self.k_features >= f {
            return (0..f).collect();
        }
        // Partial Fisher-Yates over the pool; the whole permutation is kept so
        // the search can fall back to further features when all drawn ones are constant.
        for i in 0..f - 1 {
            let j = self.rng.gen_range(i..f);
            self.feature_pool.swap(i, j);
        }
        self.feature_pool.clone()
    }

    fn best_split(&mut self, idx: &[usize], pos: &[usize; N_LABELS]) -> Option<BestSplit> {
        let order = self.candidate_features();
        let k = self.k_features.min(order.len());
        let mut first: Vec<usize> = order[..k].to_vec();
        first.sort_unstable();
        let mut best = self.search(&first, idx, pos);
        let mut next = k;
        while best.is_none() && next < order.len() {
            best = self.search(&order[next..next + 1], idx, pos);
            next += 1;
        }
        best
    }

    fn search(&mut self, features: &[usize], idx: &[usize], pos: &[usize; N_LABELS]) -> Option<BestSplit> {
        let n = idx.len();
        let mut best: Option<BestSplit> = None;
        for &f in features {
            let col = self.x.col(f);
            self.scratch.clear();
            self.scratch.extend(idx.iter().map(|&s| (col[s], s)));
            self.scratch
                .sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            if self.scratch[0].0 == self.scratch[n - 1].0 {
                continue;
            }
            let mut left = [0usize; N_LABELS];
            for i in 0..n - 1 {
                let (v, s) = self.scratch[i];
                for (l, &b) in left.iter_mut().zip(self.y[s].bits()) {
                    *l += b as usize;
                }
                let v_next = self.scratch[i + 1].0;
                if v == v_next {
                    continue;
                }
                let n_left = i + 1;
                let mut right = [0usize; N_LABELS];
                for l in 0..N_LABELS {
                    right[l] = pos[l] - left[l];
                }
                let score = weighted_gini(&left, n_left) + weighted_gini(&right, n - n_left);
                if best.as_ref().is_none_or(|b| score < b.score) {
                    let mut threshold = v + (v_next - v) / 2.0;
                    if threshold >= v_next {
                        threshold = v;
                    }
                    best = Some(BestSplit {
                        feature: f,
                        threshold,
                        score,
                    });
                }
            }
        }
        best
    }
}

pub(crate) fn grow(x: &Columns, y: &[LabelVector], sample: &mut [usize], cfg: TreeConfig, rng: SeededRng) -> TreeModel {
    let mut b = Builder {
        x,
        y,
        cfg,
        k_features: cfg.max_features.resolve(x.n_cols),
        rng,
        nodes: Vec::new(),
        feature_pool: (0..x.n_cols).collect(),
        scratch: Vec::with_capacity(sample.len()),
    };
    sample.sort_unstable();
    b.build(sample, 0);
    TreeModel {
        n_features: x.n_cols,
        nodes: b.nodes,
    }
}

pub fn train_tree(x: &[Vec<f64>], y: &[LabelVector], cfg: TreeConfig) -> Result<TreeModel> {
    let cols = Columns::from_rows(x, y)?;
    if cfg.min_split < 2 {
        return Err(Error::Argument("min_split must be at least 2".into()));
    }
    let mut sample: Vec<usize> = (0..cols.n_rows()).collect();
    Ok(grow(&cols, y, &mut sample, cfg, rng::seeded(cfg.seed)))
}
