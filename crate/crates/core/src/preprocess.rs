//! Text cleaning for raw problem statements.
//!
//! The default step order is HTML, math, non-ASCII, digits, lowercase,
//! punctuation, stopwords, single-character tokens. Removing digits after the
//! LaTeX spans (rather than before) is a fixed choice; it keeps `$x_1$` inside
//! one math span instead of splitting it.

use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::sync::LazyLock;

use rayon::prelude::*;
use regex::Regex;

use crate::corpus::{Dataset, Problem};
use crate::error::{Error, Result};

const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords.txt");

static HTML_TAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"<.*?>").unwrap());
static MATH: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?s)\$\$.*?\$\$|\$.*?\$|\\[A-Za-z]+").unwrap());

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Step {
    Html,
    Math,
    NonAscii,
    Digits,
    Lowercase,
    Punctuation,
    Stopwords,
    ShortTokens,
}

impl Step {
    pub const ALL: [Step; 8] = [
        Step::Html,
        Step::Math,
        Step::NonAscii,
        Step::Digits,
        Step::Lowercase,
        Step::Punctuation,
        Step::Stopwords,
        Step::ShortTokens,
    ];
}

#[derive(Debug, Clone)]
pub struct CleaningConfig {
    pub min_word_occurrences: usize,
    stopword_list: Vec<String>,
    stopword_tokens: HashSet<String>,
    steps: Vec<Step>,
}

impl Default for CleaningConfig {
    fn default() -> Self {
        Self::with_stopwords(DEFAULT_STOPWORDS.lines().map(str::to_string).collect())
    }
}

impl CleaningConfig {
    pub fn with_stopwords(list: Vec<String>) -> Self {
        // Entries go through the same character filter as the text, so a
        // contraction like "don't" contributes the fragment "don".
        let stopword_tokens = list
            .iter()
            .flat_map(|w| {
                strip_non_letters(&w.to_lowercase())
                    .split_whitespace()
                    .map(str::to_string)
                    .collect::<Vec<_>>()
            })
            .collect();
        Self {
            min_word_occurrences: 10,
            stopword_list: list,
            stopword_tokens,
            steps: Step::ALL.to_vec(),
        }
    }

    /// Reads a stopword file with one entry per line; blank lines and `#` comments are skipped.
    pub fn load_stopwords(path: impl AsRef<Path>) -> Result<Vec<String>> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(s.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect())
    }

    pub fn stopword_list(&self) -> &[String] {
        &self.stopword_list
    }

    pub fn is_stopword(&self, token: &str) -> bool {
        self.stopword_tokens.contains(token)
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn set_steps(&mut self, steps: Vec<Step>) -> Result<()> {
        let distinct: HashSet<_> = steps.iter().collect();
        if distinct.len() != steps.len() {
            return Err(Error::Argument("cleaning steps must not repeat".into()));
        }
        self.steps = steps;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_word_occurrences < 1 {
            return Err(Error::Argument("min_word_occurrences must be >= 1".into()));
        }
        Ok(())
    }
}

/// Joins title and description with a single space; empty parts add nothing.
pub fn merge_fields(title: &str, description: &str) -> String {
    match (title.is_empty(), description.is_empty()) {
        (true, _) => description.to_string(),
        (false, true) => title.to_string(),
        (false, false) => format!("{title} {description}"),
    }
}

fn strip_non_letters(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_lowercase() || c.is_whitespace() { c } else { ' ' })
        .collect()
}

fn apply_step(text: String, step: Step, cfg: &CleaningConfig) -> String {
    match step {
        Step::Html => HTML_TAG.replace_all(&text, "").into_owned(),
        Step::Math => MATH.replace_all(&text, " ").into_owned(),
        Step::NonAscii => text.chars().filter(char::is_ascii).collect(),
        Step::Digits => text.chars().filter(|c| !c.is_ascii_digit()).collect(),
        Step::Lowercase => text.to_ascii_lowercase(),
        // Anything that is not a lowercase letter or whitespace becomes a
        // separator, so "end.start" yields two tokens.
        Step::Punctuation => strip_non_letters(&text),
        Step::Stopwords => text
            .split_whitespace()
            .filter(|t| !cfg.is_stopword(t))
            .collect::<Vec<_>>()
            .join(" "),
        Step::ShortTokens => text
            .split_whitespace()
            .filter(|t| t.chars().count() > 1)
            .collect::<Vec<_>>()
            .join(" "),
    }
}

pub fn clean_text(raw: &str, cfg: &CleaningConfig) -> String {
    let mut text = raw.to_string();
    for &step in &cfg.steps {
        text = apply_step(text, step, cfg);
    }
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Keeps the first problem for each distinct text.
pub fn remove_duplicates(d: &Dataset) -> Dataset {
    let mut seen = HashSet::new();
    let problems = d
        .problems
        .iter()
        .filter(|p| seen.insert(p.text.as_str()))
        .cloned()
        .collect();
    Dataset::new(problems, d.source)
}

/// Removes tokens that occur fewer than `min_count` times across the corpus.
pub fn filter_rare_words(d: &Dataset, min_count: usize) -> Result<Dataset> {
    if min_count < 1 {
        return Err(Error::Argument("min_count must be >= 1".into()));
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for p in &d.problems {
        for tok in p.text.split_whitespace() {
            *counts.entry(tok).or_insert(0) += 1;
        }
    }
    let problems = d
        .problems
        .iter()
        .map(|p| {
            let text = p
                .text
                .split_whitespace()
                .filter(|t| counts[t] >= min_count)
                .collect::<Vec<_>>()
                .join(" ");
            Problem::new(text, p.tags.clone())
        })
        .collect();
    Ok(Dataset::new(problems, d.source))
}

/// Full corpus pass: clean every text, drop exact duplicates, drop rare
/// words, and finally drop problems whose text ended up empty.
pub fn preprocess_dataset(d: &Dataset, cfg: &CleaningConfig) -> Result<Dataset> {
    cfg.validate()?;
    let cleaned: Vec<Problem> = d
        .problems
        .par_iter()
        .map(|p| Problem::new(clean_text(&p.text, cfg), p.tags.clone()))
        .collect();
    let deduped = remove_duplicates(&Dataset::new(cleaned, d.source));
    let filtered = filter_rare_words(&deduped, cfg.min_word_occurrences)?;
    let problems = filtered
        .problems
        .into_iter()
        .filter(|p| !p.text.is_empty())
        .collect();
    Ok(Dataset::new(problems, d.source))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Source;
    use proptest::prelude::*;

    fn cfg() -> CleaningConfig {
        CleaningConfig::default()
    }

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
    fn shipped_stopword_list_has_174_entries() {
        let c = cfg();
        assert_eq!(c.stopword_list().len(), 174);
        assert!(c.is_stopword("the"));
        assert!(c.is_stopword("don"));
        assert!(!c.is_stopword("graph"));
    }

    #[test]
    fn merge_examples() {
        assert_eq!(merge_fields("A", "B"), "A B");
        assert_eq!(merge_fields("", "B"), "B");
        assert_eq!(merge_fields("A", ""), "A");
        assert_eq!(merge_fields("Two Sum", "find pairs"), "Two Sum find pairs");
    }

    #[test]
    fn clean_examples() {
        assert_eq!(clean_text("<p>Hello</p>", &cfg()), "hello");
        assert_eq!(clean_text("sum $x_i$ of 12 items", &cfg()), "sum items");
        assert_eq!(clean_text("", &cfg()), "");
    }

    #[test]
    fn clean_removes_display_math_and_commands() {
        assert_eq!(
            clean_text("given $$\\sum_{i=1}^n a_i$$ compute \\alpha value", &cfg()),
            "given compute value"
        );
    }

    #[test]
    fn punctuation_splits_tokens() {
        assert_eq!(clean_text("end.start", &cfg()), "end start");
        assert_eq!(clean_text("Caf\u{e9} x-ray", &cfg()), "caf ray");
    }

    #[test]
    fn step_subset_is_honoured() {
        let mut c = cfg();
        c.set_steps(vec![Step::Lowercase]).unwrap();
        assert_eq!(clean_text("The  A <b>", &c), "the a <b>");
        assert!(c.set_steps(vec![Step::Html, Step::Html]).is_err());
    }

    #[test]
    fn dedup_keeps_first_occurrence() {
        let d = Dataset::new(
            vec![
                Problem::new("pa".into(), vec!["x".into()]),
                Problem::new("pa".into(), vec!["y".into()]),
                Problem::new("pb".into(), vec![]),
            ],
            Source::Combined,
        );
        let out = remove_duplicates(&d);
        assert_eq!(out.problems.len(), 2);
        assert_eq!(out.problems[0].tags, vec!["x"]);
        assert_eq!(out.problems[1].text, "pb");
        assert_eq!(remove_duplicates(&out), out);
        let distinct = ds(&["a", "b", "c"]);
        assert_eq!(remove_duplicates(&distinct), distinct);
    }

    #[test]
    fn rare_words_below_threshold_disappear() {
        let mut texts = vec!["xyzzy common"; 3];
        texts.extend(vec!["common"; 10]);
        let out = filter_rare_words(&ds(&texts), 10).unwrap();
        assert!(out.problems.iter().all(|p| !p.text.contains("xyzzy")));
        assert_eq!(out.problems[0].text, "common");
    }

    #[test]
    fn rare_word_threshold_boundary() {
        let d = ds(&["a a a"]);
        assert_eq!(filter_rare_words(&d, 3).unwrap(), d);
        assert_eq!(filter_rare_words(&d, 4).unwrap().problems[0].text, "");
        assert_eq!(filter_rare_words(&d, 1).unwrap(), d);
        assert!(filter_rare_words(&d, 0).is_err());
    }

    #[test]
    fn rare_word_filter_is_idempotent() {
        let d = ds(&["aa bb cc", "aa bb", "aa dd", "ee"]);
        let once = filter_rare_words(&d, 2).unwrap();
        assert_eq!(filter_rare_words(&once, 2).unwrap(), once);
    }

    #[test]
    fn preprocess_pipeline_drops_empty_and_duplicates() {
        let texts = ["<b>Graph</b> edges 42", "graph edges", "$x$ 7", "graph edges nodes"];
        let mut c = cfg();
        c.min_word_occurrences = 2;
        let out = preprocess_dataset(&ds(&texts), &c).unwrap();
        assert_eq!(out.problems.len(), 2);
        assert_eq!(out.problems[0].text, "graph edges");
        // dedup runs before the rare-word pass, so the filtered texts may coincide
        assert_eq!(out.problems[1].text, "graph edges");
    }

    proptest! {
        #[test]
        fn clean_is_idempotent_and_restricted(raw in "\\PC{0,80}") {
            let c = cfg();
            let once = clean_text(&raw, &c);
            prop_assert_eq!(clean_text(&once, &c), once.clone());
            prop_assert!(once.chars().all(|ch| ch.is_ascii_lowercase() || ch == ' '));
            prop_assert!(once.split(' ').all(|t| once.is_empty() || t.len() > 1));
        }

        #[test]
        fn rare_filter_never_grows_documents(
            docs in proptest::collection::vec("[a-d]{1,2}( [a-d]{1,2}){0,6}", 1..8),
            min in 1usize..5,
        ) {
            let refs: Vec<&str> = docs.iter().map(String::as_str).collect();
            let d = ds(&refs);
            let out = filter_rare_words(&d, min).unwrap();
            for (a, b) in d.problems.iter().zip(&out.problems) {
                prop_assert!(b.text.split_whitespace().count() <= a.text.split_whitespace().count());
            }
        }
    }
}
