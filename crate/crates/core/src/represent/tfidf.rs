use crate::corpus::Dataset;
use crate::error::{Error, Result};

use super::Vocabulary;

/// Document-frequency statistics with smoothed idf:
/// `idf(t) = ln((1 + n) / (1 + df(t))) + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TfidfModel {
    n_docs: usize,
    doc_freq: Vec<usize>,
    idf: Vec<f64>,
}

impl TfidfModel {
    /// Fits on `docs`; terms are indexed by `vocab`, and tokens outside it are ignored.
    pub fn fit(docs: &Dataset, vocab: &Vocabulary) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::EmptyCorpus("tf-idf needs at least one document"));
        }
        let mut doc_freq = vec![0usize; vocab.len()];
        let mut last_doc = vec![usize::MAX; vocab.len()];
        for (d, text) in docs.texts().enumerate() {
            for t in vocab.encode(text) {
                if last_doc[t] != d {
                    last_doc[t] = d;
                    doc_freq[t] += 1;
                }
            }
        }
        Ok(Self::from_counts(docs.len(), doc_freq))
    }

    pub fn from_counts(n_docs: usize, doc_freq: Vec<usize>) -> Self {
        let idf = doc_freq
            .iter()
            .map(|&df| ((1.0 + n_docs as f64) / (1.0 + df as f64)).ln() + 1.0)
            .collect();
        Self {
            n_docs,
            doc_freq,
            idf,
        }
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn doc_freq(&self) -> &[usize] {
        &self.doc_freq
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }
}

/// Raw-count tf times idf, L2-normalized; a document with no in-vocabulary
/// tokens maps to the zero vector.
pub fn tfidf_vector(doc: &str, m: &TfidfModel, v: &Vocabulary) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for t in v.encode(doc) {
        out[t] += 1.0;
    }
    for (x, idf) in out.iter_mut().zip(&m.idf) {
        *x *= idf;
    }
    let norm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in &mut out {
            *x /= norm;
        }
    }
    out
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::corpus::{Problem, Source};
    use crate::represent::build_vocabulary;
    use proptest::prelude::*;

    pub(crate) fn ds(texts: &[&str]) -> Dataset {
        Dataset::new(
            texts
                .iter()
                .map(|t| Problem::new(t.to_string(), vec![]))
                .collect(),
            Source::Combined,
        )
    }

    /// Naive two-pass oracle: count documents per term by scanning every
    /// document for every term, then weight and normalize term by term.
    pub(crate) fn naive_tfidf(corpus: &[&str], doc: &str) -> Vec<(String, f64)> {
        let mut terms: Vec<&str> = Vec::new();
        for d in corpus {
            for t in d.split_whitespace() {
                if !terms.contains(&t) {
                    terms.push(t);
                }
            }
        }
        let n = corpus.len() as f64;
        let weights: Vec<f64> = terms
            .iter()
            .map(|term| {
                let df = corpus
                    .iter()
                    .filter(|d| d.split_whitespace().any(|t| t == *term))
                    .count() as f64;
                let tf = doc.split_whitespace().filter(|t| t == term).count() as f64;
                tf * (((1.0 + n) / (1.0 + df)).ln() + 1.0)
            })
            .collect();
        let norm = weights.iter().map(|w| w * w).sum::<f64>().sqrt();
        terms
            .iter()
            .zip(weights)
            .map(|(t, w)| (t.to_string(), if norm > 0.0 { w / norm } else { 0.0 }))
            .collect()
    }

    const TOY: [&str; 5] = [
        "graph edge node graph",
        "string prefix suffix",
        "graph shortest path edge",
        "sum modulo prime prime prime",
        "node tree path",
    ];

    #[test]
    fn matches_naive_oracle() {
        let d = ds(&TOY);
        let v = build_vocabulary(&d).unwrap();
        let m = TfidfModel::fit(&d, &v).unwrap();
        for doc in TOY.iter().chain(&["graph unknown path path", "nothing known"]) {
            let got = tfidf_vector(doc, &m, &v);
            for (term, want) in naive_tfidf(&TOY, doc) {
                let i = v.index(&term).unwrap();
                assert!((got[i] - want).abs() < 1e-12, "{term}: {} vs {want}", got[i]);
            }
        }
    }

    #[test]
    fn term_in_every_doc_has_unit_idf() {
        let d = ds(&["a b", "a c", "a"]);
        let v = build_vocabulary(&d).unwrap();
        let m = TfidfModel::fit(&d, &v).unwrap();
        assert_eq!(m.idf()[v.index("a").unwrap()], 1.0);
    }

    #[test]
    fn smoothed_idf_value() {
        // n = 3, df = 1, tf = 2
        let m = TfidfModel::from_counts(3, vec![1]);
        let raw = 2.0 * m.idf()[0];
        assert!((raw - 2.0 * ((4.0f64 / 2.0).ln() + 1.0)).abs() < 1e-15);
        assert!((raw - 3.386294361).abs() < 1e-9);
    }

    #[test]
    fn single_term_doc_is_unit_ray() {
        let d = ds(&["a b", "b c"]);
        let v = build_vocabulary(&d).unwrap();
        let m = TfidfModel::fit(&d, &v).unwrap();
        let x = tfidf_vector("c c zz", &m, &v);
        assert_eq!(x.iter().filter(|&&e| e != 0.0).count(), 1);
        assert!((x[v.index("c").unwrap()] - 1.0).abs() < 1e-15);
        assert!(tfidf_vector("zz", &m, &v).iter().all(|&e| e == 0.0));
    }

    proptest! {
        #[test]
        fn idf_decreases_with_df(n in 1usize..500, a in 0usize..500, b in 0usize..500) {
            let (a, b) = (a.min(n), b.min(n));
            prop_assume!(a < b);
            let m = TfidfModel::from_counts(n, vec![a, b]);
            prop_assert!(m.idf()[0] > m.idf()[1]);
            prop_assert!(m.idf()[1] >= 1.0);
        }

        #[test]
        fn vectors_are_unit_or_zero(
            docs in proptest::collection::vec("[a-e]( [a-e]){0,5}", 1..6),
            probe in "[a-g]( [a-g]){0,5}",
        ) {
            let refs: Vec<&str> = docs.iter().map(String::as_str).collect();
            let d = ds(&refs);
            let v = build_vocabulary(&d).unwrap();
            let m = TfidfModel::fit(&d, &v).unwrap();
            let x = tfidf_vector(&probe, &m, &v);
            let norm = x.iter().map(|e| e * e).sum::<f64>().sqrt();
            prop_assert!(norm == 0.0 || (norm - 1.0).abs() < 1e-9);
            prop_assert!(x.iter().all(|&e| e >= 0.0));
        }
    }
}
