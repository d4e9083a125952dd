use rand::Rng;

use crate::rng;
use crate::taxonomy::{LabelVector, N_LABELS};

/// Predicts every label independently with probability one half.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomBaseline {
    pub n_labels: usize,
    pub seed: u64,
}

impl RandomBaseline {
    pub fn new(seed: u64) -> Self {
        Self {
            n_labels: N_LABELS,
            seed,
        }
    }
}

pub fn random_predict(m: &RandomBaseline, n_samples: usize) -> Vec<LabelVector> {
    let mut rng = rng::seeded(m.seed);
    (0..n_samples)
        .map(|_| LabelVector::from_bools((0..m.n_labels.min(N_LABELS)).map(|_| rng.gen_bool(0.5))))
        .collect()
}
