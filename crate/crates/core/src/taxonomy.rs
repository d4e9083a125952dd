//! Tag aggregation from platform tags to the nine final labels, target
//! encoding, and tag co-occurrence statistics.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, Problem};
use crate::error::{Error, Result};

/// Number of final labels every target vector carries.
pub const N_LABELS: usize = 9;

const DEFAULT_TAXONOMY: &str = include_str!("../data/taxonomy.json");

#[derive(Debug, Deserialize, Serialize)]
struct TaxonomyFile {
    final_tags: Vec<String>,
    rules: BTreeMap<String, Option<String>>,
}

/// Rules mapping original (platform) tags to a final label or to DROP.
///
/// Rule keys are matched case-insensitively after trimming.
#[derive(Debug, Clone, PartialEq)]
pub struct TaxonomyMap {
    final_tags: Vec<String>,
    rules: BTreeMap<String, Option<usize>>,
}

impl TaxonomyMap {
    /// The shipped reconstruction of the 17-tag and 9-tag aggregation.
    pub fn default_map() -> Self {
        Self::from_json(DEFAULT_TAXONOMY).expect("bundled taxonomy is valid")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: TaxonomyFile = serde_json::from_str(s).map_err(|e| Error::Parse {
            index: 0,
            message: format!("taxonomy file: {e}"),
        })?;
        Self::new(file.final_tags, file.rules)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }

    pub fn to_json(&self) -> String {
        let file = TaxonomyFile {
            final_tags: self.final_tags.clone(),
            rules: self
                .rules
                .iter()
                .map(|(k, v)| (k.clone(), v.map(|i| self.final_tags[i].clone())))
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("taxonomy serializes")
    }

    pub fn new(
        final_tags: Vec<String>,
        rules: impl IntoIterator<Item = (String, Option<String>)>,
    ) -> Result<Self> {
        if final_tags.len() != N_LABELS {
            return Err(Error::Argument(format!(
                "taxonomy must define exactly {N_LABELS} final tags, found {}",
                final_tags.len()
            )));
        }
        let distinct: BTreeSet<&String> = final_tags.iter().collect();
        if distinct.len() != final_tags.len() {
            return Err(Error::Argument("final tags must be distinct".into()));
        }
        let mut mapped = BTreeMap::new();
        for (orig, target) in rules {
            let target = match target {
                None => None,
                Some(t) => Some(
                    final_tags
                        .iter()
                        .position(|f| *f == t)
                        .ok_or_else(|| Error::UnknownLabel(t.clone()))?,
                ),
            };
            mapped.insert(normalize(&orig), target);
        }
        Ok(Self {
            final_tags,
            rules: mapped,
        })
    }

    pub fn final_tags(&self) -> &[String] {
        &self.final_tags
    }

    pub fn index_of(&self, final_tag: &str) -> Option<usize> {
        self.final_tags.iter().position(|t| t == final_tag)
    }

    /// `Some(Some(i))` for a mapped tag, `Some(None)` for DROP, `None` when no rule exists.
    pub fn lookup(&self, original: &str) -> Option<Option<usize>> {
        self.rules.get(&normalize(original)).copied()
    }

    /// The same final tags with an identity rule per final tag.
    pub fn identity(&self) -> Self {
        Self {
            final_tags: self.final_tags.clone(),
            rules: self
                .final_tags
                .iter()
                .enumerate()
                .map(|(i, t)| (normalize(t), Some(i)))
                .collect(),
        }
    }
}

fn normalize(tag: &str) -> String {
    tag.trim().to_lowercase()
}

/// Binary target vector in the fixed final-tag order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct LabelVector([u8; N_LABELS]);

impl LabelVector {
    pub fn zeros() -> Self {
        Self([0; N_LABELS])
    }

    pub fn from_bits(bits: [u8; N_LABELS]) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::Argument("label bits must be 0 or 1".into()));
        }
        Ok(Self(bits))
    }

    pub fn from_bools(bits: impl IntoIterator<Item = bool>) -> Self {
        let mut out = [0u8; N_LABELS];
        for (slot, b) in out.iter_mut().zip(bits) {
            *slot = b as u8;
        }
        Self(out)
    }

    pub fn bits(&self) -> &[u8; N_LABELS] {
        &self.0
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i] == 1
    }

    pub fn set(&mut self, i: usize, on: bool) {
        self.0[i] = on as u8;
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().map(|&b| b as usize).sum()
    }

    pub fn as_f64(&self) -> [f64; N_LABELS] {
        self.0.map(f64::from)
    }
}

impl AsRef<[u8]> for LabelVector {
    fn as_ref(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Display for LabelVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, b) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{b}")?;
        }
        write!(f, "]")
    }
}

/// Replaces every problem's tags with its mapped final tags.
///
/// DROP targets vanish and duplicates collapse; the result lists tags in
/// final-tag order. Problems left without tags are kept.
pub fn apply_taxonomy(d: &Dataset, t: &TaxonomyMap) -> Result<Dataset> {
    let mut unmapped = BTreeSet::new();
    let mut problems = Vec::with_capacity(d.problems.len());
    for p in &d.problems {
        let mut hit = [false; N_LABELS];
        for tag in &p.tags {
            match t.lookup(tag) {
                Some(Some(i)) => hit[i] = true,
                Some(None) => {}
                None => {
                    unmapped.insert(tag.clone());
                }
            }
        }
        let tags = hit
            .iter()
            .enumerate()
            .filter(|(_, &h)| h)
            .map(|(i, _)| t.final_tags[i].clone())
            .collect();
        problems.push(Problem::new(p.text.clone(), tags));
    }
    if !unmapped.is_empty() {
        return Err(Error::UnmappedTags(unmapped.into_iter().collect()));
    }
    Ok(Dataset::new(problems, d.source))
}

pub fn encode_labels<S: AsRef<str>>(tags: &[S], t: &TaxonomyMap) -> Result<LabelVector> {
    let mut v = LabelVector::zeros();
    for tag in tags {
        let tag = tag.as_ref();
        let i = t
            .index_of(tag)
            .ok_or_else(|| Error::UnknownLabel(tag.to_string()))?;
        v.set(i, true);
    }
    Ok(v)
}

pub fn decode_labels(v: &LabelVector, t: &TaxonomyMap) -> Vec<String> {
    (0..N_LABELS)
        .filter(|&i| v.get(i))
        .map(|i| t.final_tags[i].clone())
        .collect()
}

/// Encodes the targets of a whole dataset whose tags are already final tags.
pub fn encode_dataset(d: &Dataset, t: &TaxonomyMap) -> Result<Vec<LabelVector>> {
    d.problems
        .iter()
        .map(|p| encode_labels(&p.tags, t))
        .collect()
}

/// Pearson correlations between per-problem binary tag indicators.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub tags: Vec<String>,
    /// Row-major, `tags.len()` squared entries.
    pub values: Vec<f64>,
}

impl CorrelationMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.tags.len() + j]
    }

    pub fn by_name(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.tags.iter().position(|t| t == a)?;
        let j = self.tags.iter().position(|t| t == b)?;
        Some(self.get(i, j))
    }
}

pub fn tag_correlation(d: &Dataset) -> Result<CorrelationMatrix> {
    let n = d.problems.len();
    if n < 2 {
        return Err(Error::Argument(format!(
            "tag correlation needs at least 2 problems, got {n}"
        )));
    }
    let tags: Vec<String> = d
        .problems
        .iter()
        .flat_map(|p| p.tags.iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let k = tags.len();
    let columns: Vec<Vec<f64>> = tags
        .iter()
        .map(|t| {
            d.problems
                .iter()
                .map(|p| if p.tags.contains(t) { 1.0 } else { 0.0 })
                .collect()
        })
        .collect();
    let nf = n as f64;
    let means: Vec<f64> = columns.iter().map(|c| c.iter().sum::<f64>() / nf).collect();
    let centered: Vec<Vec<f64>> = columns
        .iter()
        .zip(&means)
        .map(|(c, m)| c.iter().map(|x| x - m).collect())
        .collect();
    let norms: Vec<f64> = centered
        .iter()
        .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();

    let mut values = vec![0.0; k * k];
    for i in 0..k {
        values[i * k + i] = 1.0;
        for j in (i + 1)..k {
            let r = if norms[i] == 0.0 || norms[j] == 0.0 {
                0.0
            } else {
                let dot: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
                (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0)
            };
            values[i * k + j] = r;
            values[j * k + i] = r;
        }
    }
    Ok(CorrelationMatrix { tags, values })
}

pub fn tag_frequencies(d: &Dataset) -> BTreeMap<String, usize> {
    let mut freq = BTreeMap::new();
    for p in &d.problems {
        for t in &p.tags {
            *freq.entry(t.clone()).or_insert(0) += 1;
        }
    }
    freq
}
