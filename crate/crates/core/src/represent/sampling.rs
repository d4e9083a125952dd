use rand::Rng;

/// Draws negative samples from the unigram distribution raised to 0.75.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct NegativeTable {
    cumulative: Vec<f64>,
}

impl NegativeTable {
    pub fn from_counts(counts: &[u64]) -> Self {
        let mut acc = 0.0;
        let cumulative = counts
            .iter()
            .map(|&c| {
                acc += (c as f64).powf(0.75);
                acc
            })
            .collect();
        Self { cumulative }
    }

    pub fn from_corpus(docs: &[Vec<usize>], vocab_size: usize) -> Self {
        let mut counts = vec![0u64; vocab_size];
        for &t in docs.iter().flatten() {
            counts[t] += 1;
        }
        Self::from_counts(&counts)
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn from_cumulative(cumulative: Vec<f64>) -> Self {
        Self { cumulative }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("non-empty table");
        let u = rng.gen::<f64>() * total;
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(self.cumulative.len() - 1)
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `ln(sigmoid(x))`, stable for large |x|.
pub(crate) fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
