//! Input representations: vocabulary, tf-idf vectors, one-hot and embedded
//! token sequences, skip-gram word vectors and PV-DBOW document vectors.
//!
//! Out-of-vocabulary tokens are skipped everywhere, so the one-hot and
//! embedding paths always see the same token positions.

mod doc2vec;
mod embedding;
pub(crate) mod sampling;
mod tfidf;
mod word2vec;

use std::collections::HashMap;
use std::sync::Arc;

use crate::corpus::Dataset;
use crate::error::{Error, Result};

pub use doc2vec::{infer_doc, train_doc2vec, Doc2Vec, Doc2VecConfig, Doc2VecModel, DocEmbeddings};
pub use embedding::EmbeddingMatrix;
pub use tfidf::{tfidf_vector, TfidfModel};
pub use word2vec::{train_word2vec, Word2Vec, Word2VecConfig};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Vocabulary {
    term_to_index: HashMap<String, usize>,
    index_to_term: Vec<String>,
}

impl Vocabulary {
    /// Builds a vocabulary from terms in index order; duplicates are rejected.
    pub fn from_terms(terms: Vec<String>) -> Result<Self> {
        let mut term_to_index = HashMap::with_capacity(terms.len());
        for (i, t) in terms.iter().enumerate() {
            if term_to_index.insert(t.clone(), i).is_some() {
                return Err(Error::Argument(format!("duplicate vocabulary term {t:?}")));
            }
        }
        Ok(Self {
            term_to_index,
            index_to_term: terms,
        })
    }

    pub fn len(&self) -> usize {
        self.index_to_term.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index_to_term.is_empty()
    }

    pub fn index(&self, term: &str) -> Option<usize> {
        self.term_to_index.get(term).copied()
    }

    pub fn term(&self, index: usize) -> Option<&str> {
        self.index_to_term.get(index).map(String::as_str)
    }

    pub fn terms(&self) -> &[String] {
        &self.index_to_term
    }

    /// In-vocabulary token indices of a whitespace-tokenized document.
    pub fn encode(&self, doc: &str) -> Vec<usize> {
        doc.split_whitespace().filter_map(|t| self.index(t)).collect()
    }
}

/// One index per distinct token, numbered by first occurrence.
pub fn build_vocabulary(d: &Dataset) -> Result<Vocabulary> {
    let mut term_to_index = HashMap::new();
    let mut index_to_term = Vec::new();
    for tok in d.texts().flat_map(str::split_whitespace) {
        if !term_to_index.contains_key(tok) {
            term_to_index.insert(tok.to_string(), index_to_term.len());
            index_to_term.push(tok.to_string());
        }
    }
    if index_to_term.is_empty() {
        return Err(Error::EmptyCorpus("no tokens to build a vocabulary from"));
    }
    Ok(Vocabulary {
        term_to_index,
        index_to_term,
    })
}

/// One position of a model input sequence.
#[derive(Debug, Clone, PartialEq)]
pub enum Frame {
    /// A one-hot vector with its single 1 at this index.
    OneHot(usize),
    Dense(Arc<[f64]>),
    /// Zero padding.
    Zero,
}

/// A sequence of `dim`-dimensional input vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    dim: usize,
    frames: Vec<Frame>,
}

impl Sequence {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            frames: Vec::new(),
        }
    }

    pub fn from_dense(dim: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let mut s = Self::new(dim);
        for r in rows {
            s.push(Frame::Dense(r.clone().into()))?;
        }
        Ok(s)
    }

    pub fn push(&mut self, frame: Frame) -> Result<()> {
        match &frame {
            Frame::OneHot(i) if *i >= self.dim => {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    got: *i + 1,
                })
            }
            Frame::Dense(v) if v.len() != self.dim => {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    got: v.len(),
                })
            }
            _ => {}
        }
        self.frames.push(frame);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn truncated(&self, len: usize) -> Sequence {
        Sequence {
            dim: self.dim,
            frames: self.frames[..len.min(self.frames.len())].to_vec(),
        }
    }

    pub(crate) fn pad_to(&mut self, len: usize) {
        self.frames.resize(len.max(self.frames.len()), Frame::Zero);
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        self.frames
            .iter()
            .map(|f| match f {
                Frame::OneHot(i) => {
                    let mut v = vec![0.0; self.dim];
                    v[*i] = 1.0;
                    v
                }
                Frame::Dense(v) => v.to_vec(),
                Frame::Zero => vec![0.0; self.dim],
            })
            .collect()
    }
}

pub fn onehot_sequence(doc: &str, v: &Vocabulary) -> Sequence {
    Sequence {
        dim: v.len(),
        frames: v.encode(doc).into_iter().map(Frame::OneHot).collect(),
    }
}

/// Per-token rows of the embedding input matrix, sharing row storage.
pub fn embed_sequence(doc: &str, e: &EmbeddingMatrix, v: &Vocabulary) -> Sequence {
    embed_sequence_with(doc, &e.shared_rows(), e.dim(), v)
}

pub(crate) fn embed_sequence_with(
    doc: &str,
    rows: &[Arc<[f64]>],
    dim: usize,
    v: &Vocabulary,
) -> Sequence {
    Sequence {
        dim,
        frames: v
            .encode(doc)
            .into_iter()
            .map(|i| Frame::Dense(rows[i].clone()))
            .collect(),
    }
}

#[cfg(test)]
pub(crate) fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Problem, Source};

    fn ds(texts: &[&str]) -> Dataset {
        Dataset::new(
            texts
                .iter()
                .map(|t| Problem::new(t.to_string(), vec![]))
                .collect(),
            Source::Combined,
        )
    }

    #[test]
    fn vocabulary_examples() {
        let v = build_vocabulary(&ds(&["a b", "b c"])).unwrap();
        assert_eq!(v.len(), 3);
        assert_eq!(v.index("a"), Some(0));
        assert_eq!(v.index("c"), Some(2));
        let w = build_vocabulary(&ds(&["b c", "a b"])).unwrap();
        assert_eq!(w.len(), v.len());
        assert_ne!(w.index("a"), v.index("a"));
        assert!(build_vocabulary(&ds(&[])).is_err());
        assert!(build_vocabulary(&ds(&["", " "])).is_err());
    }

    #[test]
    fn vocabulary_is_bijective() {
        let v = build_vocabulary(&ds(&["x y z x", "w y"])).unwrap();
        for i in 0..v.len() {
            assert_eq!(v.index(v.term(i).unwrap()), Some(i));
        }
        assert!(Vocabulary::from_terms(vec!["a".into(), "a".into()]).is_err());
    }

    #[test]
    fn onehot_examples() {
        let v = Vocabulary::from_terms(vec!["a".into(), "b".into()]).unwrap();
        assert_eq!(
            onehot_sequence("a b", &v).to_dense(),
            vec![vec![1.0, 0.0], vec![0.0, 1.0]]
        );
        assert!(onehot_sequence("zz qq", &v).is_empty());
        assert_eq!(
            onehot_sequence("b a b", &v).frames(),
            &[Frame::OneHot(1), Frame::OneHot(0), Frame::OneHot(1)]
        );
        for row in onehot_sequence("a zz b a", &v).to_dense() {
            assert_eq!(row.iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn embed_examples() {
        let v = Vocabulary::from_terms(vec!["a".into(), "b".into()]).unwrap();
        let e = EmbeddingMatrix::from_parts(2, 3, vec![1., 2., 3., 4., 5., 6.], vec![0.0; 6]).unwrap();
        assert!(embed_sequence("", &e, &v).is_empty());
        assert_eq!(embed_sequence("a", &e, &v).to_dense(), vec![vec![1., 2., 3.]]);
        assert_eq!(
            embed_sequence("a b a", &e, &v).to_dense(),
            vec![vec![1., 2., 3.], vec![4., 5., 6.], vec![1., 2., 3.]]
        );
    }

    #[test]
    fn sequence_rejects_wrong_dims() {
        let mut s = Sequence::new(2);
        assert!(s.push(Frame::OneHot(2)).is_err());
        assert!(s.push(Frame::Dense(vec![1.0].into())).is_err());
        assert!(s.push(Frame::Zero).is_ok());
    }
}
