//! Problems, datasets, JSON ingestion, descriptive statistics and the seeded
//! synthetic corpus generator.

use std::cell::Cell;
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rand::Rng;
use serde::de::{SeqAccess, Visitor};
use serde::{Deserializer, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::preprocess::merge_fields;
use crate::rng;
use crate::taxonomy::TaxonomyMap;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Problem {
    pub text: String,
    pub tags: Vec<String>,
}

impl Problem {
    /// Builds a problem, collapsing duplicate tags (first occurrence wins).
    pub fn new(text: String, tags: Vec<String>) -> Self {
        let mut uniq: Vec<String> = Vec::with_capacity(tags.len());
        for t in tags {
            if !uniq.contains(&t) {
                uniq.push(t);
            }
        }
        Self { text, tags: uniq }
    }

    pub fn word_count(&self) -> usize {
        self.text.split_whitespace().count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Source {
    Codeforces,
    Topcoder,
    #[default]
    Combined,
    Synthetic,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Codeforces => "codeforces",
            Source::Topcoder => "topcoder",
            Source::Combined => "combined",
            Source::Synthetic => "synthetic",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub problems: Vec<Problem>,
    pub source: Source,
}

impl Dataset {
    pub fn new(problems: Vec<Problem>, source: Source) -> Self {
        Self { problems, source }
    }

    pub fn len(&self) -> usize {
        self.problems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.problems.is_empty()
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.problems.iter().map(|p| p.text.as_str())
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset::new(
            indices.iter().map(|&i| self.problems[i].clone()).collect(),
            self.source,
        )
    }

    /// The on-disk form: a JSON array of `{"text", "tags"}` objects, 2-space indented.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.problems).expect("dataset serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}

/// Which object schema entries must follow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Schema {
    /// `text` and `tags` required.
    Strict,
    /// Either `text`, or `title` and/or `description` (merged), plus `tags`.
    Raw,
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&s)
}

pub fn parse_dataset(json: &str) -> Result<Dataset> {
    parse_entries(json, Schema::Strict)
}

/// Loads raw scraped records, which may carry separate `title` and
/// `description` fields instead of a merged `text`.
pub fn load_raw_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_entries(&s, Schema::Raw)
}

struct EntryCounter<'a> {
    seen: &'a Cell<usize>,
}

impl<'de> Visitor<'de> for EntryCounter<'_> {
    type Value = Vec<Value>;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a JSON array of problem objects")
    }

    fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Self::Value, A::Error> {
        let mut out = Vec::new();
        while let Some(v) = seq.next_element::<Value>()? {
            out.push(v);
            self.seen.set(out.len());
        }
        Ok(out)
    }
}

fn parse_entries(json: &str, schema: Schema) -> Result<Dataset> {
    let seen = Cell::new(0);
    let mut de = serde_json::Deserializer::from_str(json);
    let entries = de
        .deserialize_seq(EntryCounter { seen: &seen })
        .and_then(|v| de.end().map(|_| v))
        .map_err(|e: serde_json::Error| Error::Parse {
            index: seen.get(),
            message: e.to_string(),
        })?;

    let problems = entries
        .iter()
        .enumerate()
        .map(|(index, v)| entry_to_problem(index, v, schema))
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset::new(problems, Source::Combined))
}

fn entry_to_problem(index: usize, v: &Value, schema: Schema) -> Result<Problem> {
    let schema_err = |message: String| Error::Schema { index, message };
    let obj = v
        .as_object()
        .ok_or_else(|| schema_err("entry is not an object".into()))?;
    let string_field = |name: &str| -> Result<Option<String>> {
        match obj.get(name) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(schema_err(format!("\"{name}\" must be a string"))),
        }
    };

    let text = match (string_field("text")?, schema) {
        (Some(t), _) => t,
        (None, Schema::Strict) => return Err(schema_err("missing \"text\"".into())),
        (None, Schema::Raw) => {
            let title = string_field("title")?;
            let desc = string_field("description")?;
            if title.is_none() && desc.is_none() {
                return Err(schema_err(
                    "missing \"text\" (or \"title\"/\"description\")".into(),
                ));
            }
            merge_fields(
                title.as_deref().unwrap_or(""),
                desc.as_deref().unwrap_or(""),
            )
        }
    };

    let tags = match obj.get("tags") {
        None => return Err(schema_err("missing \"tags\"".into())),
        Some(Value::Array(items)) => items
            .iter()
            .map(|t| {
                t.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| schema_err("\"tags\" must contain only strings".into()))
            })
            .collect::<Result<Vec<_>>>()?,
        Some(_) => return Err(schema_err("\"tags\" must be an array".into())),
    };
    Ok(Problem::new(text, tags))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub problem_count: usize,
    pub avg_words_per_problem: f64,
    pub avg_tags_per_problem: f64,
    pub per_tag_avg_words: BTreeMap<String, f64>,
}

pub fn dataset_stats(d: &Dataset) -> StatsReport {
    let n = d.problems.len();
    let (avg_words, avg_tags) = if n == 0 {
        (0.0, 0.0)
    } else {
        let words: usize = d.problems.iter().map(Problem::word_count).sum();
        let tags: usize = d.problems.iter().map(|p| p.tags.len()).sum();
        (words as f64 / n as f64, tags as f64 / n as f64)
    };
    StatsReport {
        problem_count: n,
        avg_words_per_problem: avg_words,
        avg_tags_per_problem: avg_tags,
        per_tag_avg_words: per_tag_word_stats(d),
    }
}

pub fn per_tag_word_stats(d: &Dataset) -> BTreeMap<String, f64> {
    let mut acc: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for p in &d.problems {
        let wc = p.word_count();
        for t in &p.tags {
            let e = acc.entry(t.clone()).or_insert((0, 0));
            e.0 += wc;
            e.1 += 1;
        }
    }
    acc.into_iter()
        .map(|(t, (w, c))| (t, w as f64 / c as f64))
        .collect()
}

/// Probability that a signature keyword appears in a problem carrying its tag.
pub const KEYWORD_RATE_ON_TAG: f64 = 0.9;
/// Probability that a signature keyword leaks into a problem without its tag.
pub const KEYWORD_RATE_OFF_TAG: f64 = 0.02;
/// Target mean number of tags per synthetic problem.
pub const SYNTHETIC_TAGS_PER_PROBLEM: f64 = 1.6;
/// Ratio between the most and least frequent tag probabilities.
pub const SYNTHETIC_SKEW: f64 = 3.0;

const FILLER_VOCAB: usize = 300;
const FILLER_MIN: usize = 15;
const FILLER_MAX: usize = 35;
const KEYWORD_SUFFIXES: [&str; 3] = ["a", "b", "c"];

fn keyword_prefix(tag: &str, index: usize) -> String {
    match tag {
        "Dynamic Programming" => "dp".into(),
        "Greedy and Sorting" => "greedy".into(),
        "Data Structures and Graphs" => "graph".into(),
        "String Operations" => "string".into(),
        "Geometry" => "geo".into(),
        "Brute Force" => "brute".into(),
        "Search and Binary Search" => "search".into(),
        "Constructive Algorithms" => "constr".into(),
        "Math and Probabilities" => "math".into(),
        other => {
            let initials: String = other
                .split_whitespace()
                .filter_map(|w| w.chars().find(char::is_ascii_alphabetic))
                .map(|c| c.to_ascii_lowercase())
                .collect();
            format!("{initials}{}", (b'a' + (index % 26) as u8) as char)
        }
    }
}

/// The three signature keywords planted for the tag at `index`.
///
/// Keywords are letters-only so that synthetic text is already a fixed point
/// of the cleaning pipeline (digits would be stripped).
pub fn signature_keywords(taxonomy: &TaxonomyMap, index: usize) -> [String; 3] {
    let prefix = keyword_prefix(&taxonomy.final_tags()[index], index);
    KEYWORD_SUFFIXES.map(|s| format!("{prefix}key{s}"))
}

/// Per-tag inclusion probabilities: linear from `SKEW * a` for the first tag
/// down to `a` for the last, scaled so they sum to the target tags/problem.
pub fn synthetic_tag_probabilities(k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![SYNTHETIC_TAGS_PER_PROBLEM.min(1.0)];
    }
    let a = 2.0 * SYNTHETIC_TAGS_PER_PROBLEM / ((SYNTHETIC_SKEW + 1.0) * k as f64);
    (0..k)
        .map(|i| a * (SYNTHETIC_SKEW - (SYNTHETIC_SKEW - 1.0) * i as f64 / (k - 1) as f64))
        .collect()
}

fn filler_vocabulary() -> Vec<String> {
    const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
    const VOWELS: &[u8] = b"aeiou";
    let syllables: Vec<String> = CONSONANTS
        .iter()
        .flat_map(|&c| VOWELS.iter().map(move |&v| format!("{}{}", c as char, v as char)))
        .collect();
    let stop = crate::preprocess::CleaningConfig::default();
    let s = syllables.len();
    (0..)
        .map(|j: usize| {
            // Stride through syllable pairs so neighbouring words differ in both halves.
            let a = (j * 7) % s;
            let b = (j / s + j * 3) % s;
            let c = (j / (s * s) + j * 11) % s;
            format!("{}{}{}", syllables[a], syllables[b], syllables[c])
        })
        .filter(|w| !stop.is_stopword(w))
        .scan(std::collections::HashSet::new(), |seen, w| {
            Some(if seen.insert(w.clone()) { Some(w) } else { None })
        })
        .flatten()
        .take(FILLER_VOCAB)
        .collect()
}

/// Seeded synthetic corpus with planted per-tag keywords.
///
/// Tags are drawn independently with the probabilities from
/// [`synthetic_tag_probabilities`] (first final tag most common, last least
/// common, ratio 3). Each problem has 15 to 35 filler words drawn from a fixed
/// Zipf-like vocabulary, plus every signature keyword of each carried tag with
/// probability 0.9 and every other signature keyword with probability 0.02,
/// inserted at random positions.
pub fn generate_synthetic(n: usize, taxonomy: &TaxonomyMap, seed: u64) -> Dataset {
    let mut rng = rng::seeded(seed);
    let k = taxonomy.final_tags().len();
    let probs = synthetic_tag_probabilities(k);
    let keywords: Vec<[String; 3]> = (0..k).map(|i| signature_keywords(taxonomy, i)).collect();
    let filler = filler_vocabulary();
    let cumulative: Vec<f64> = filler
        .iter()
        .enumerate()
        .scan(0.0, |acc, (r, _)| {
            *acc += 1.0 / (r as f64 + 5.0);
            Some(*acc)
        })
        .collect();
    let total = *cumulative.last().unwrap();

    let problems = (0..n)
        .map(|_| {
            let carried: Vec<bool> = probs.iter().map(|&p| rng.gen_bool(p)).collect();
            let len = rng.gen_range(FILLER_MIN..=FILLER_MAX);
            let mut words: Vec<&str> = (0..len)
                .map(|_| {
                    let u = rng.gen::<f64>() * total;
                    let i = cumulative.partition_point(|&c| c <= u).min(filler.len() - 1);
                    filler[i].as_str()
                })
                .collect();
            for (tag, kws) in keywords.iter().enumerate() {
                let rate = if carried[tag] {
                    KEYWORD_RATE_ON_TAG
                } else {
                    KEYWORD_RATE_OFF_TAG
                };
                for kw in kws {
                    if rng.gen_bool(rate) {
                        let at = rng.gen_range(0..=words.len());
                        words.insert(at, kw);
                    }
                }
            }
            let tags = carried
                .iter()
                .enumerate()
                .filter(|(_, &c)| c)
                .map(|(i, _)| taxonomy.final_tags()[i].clone())
                .collect();
            Problem::new(words.join(" "), tags)
        })
        .collect();
    Dataset::new(problems, Source::Synthetic)
}
