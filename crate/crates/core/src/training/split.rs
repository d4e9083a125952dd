//! Two-fold iterative stratification.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::corpus::Dataset;
use crate::error::{Error, Result};
use crate::rng::{self, Rng as SeededRng};

#[derive(Debug, Clone, PartialEq)]
pub struct SplitResult {
    pub train: Dataset,
    pub test: Dataset,
    pub ratio: f64,
    /// Positions of the train and test problems in the input dataset.
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

const TRAIN: usize = 0;
const TEST: usize = 1;

fn fold_sizes(n: usize, ratio: f64) -> Result<[usize; 2]> {
    if n < 2 {
        return Err(Error::Argument(format!("need at least 2 problems to split, got {n}")));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Argument(format!("split ratio must lie in (0, 1), got {ratio}")));
    }
    let train = ((ratio * n as f64).round() as usize).clamp(1, n - 1);
    Ok([train, n - train])
}

fn assemble(d: &Dataset, fold: &[usize], ratio: f64) -> SplitResult {
    let (mut tr, mut te) = (Vec::new(), Vec::new());
    for (i, &f) in fold.iter().enumerate() {
        if f == TRAIN {
            tr.push(i);
        } else {
            te.push(i);
        }
    }
    SplitResult {
        train: d.subset(&tr),
        test: d.subset(&te),
        ratio,
        train_indices: tr,
        test_indices: te,
    }
}

/// Picks the fold with the larger key; exact ties go to the RNG.
fn argmax_fold(key: [f64; 2], rng: &mut SeededRng) -> usize {
    if key[TRAIN] > key[TEST] {
        TRAIN
    } else if key[TEST] > key[TRAIN] {
        TEST
    } else if rng.gen_bool(0.5) {
        TRAIN
    } else {
        TEST
    }
}

/// Splits `d` into train and test so each tag's share is as close as possible
/// on both sides.
///
/// Fold sizes are `round(ratio * n)` and the remainder. Tags are processed
/// rarest first (by remaining unassigned problems); each problem carrying the
/// tag goes to the fold that still wants the most of that tag, then to the
/// fold with more free room, then by coin flip. Problems without tags fill
/// the remaining room. Both outputs keep the input order.
pub fn stratified_split(d: &Dataset, ratio: f64, seed: u64) -> Result<SplitResult> {
    let n = d.len();
    let sizes = fold_sizes(n, ratio)?;
    let fracs = [sizes[TRAIN] as f64 / n as f64, sizes[TEST] as f64 / n as f64];
    let mut rng = rng::seeded(seed);

    let tag_ids: BTreeMap<&str, usize> = d
        .problems
        .iter()
        .flat_map(|p| p.tags.iter().map(String::as_str))
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .enumerate()
        .map(|(i, t)| (t, i))
        .collect();
    let labels: Vec<Vec<usize>> = d
        .problems
        .iter()
        .map(|p| p.tags.iter().map(|t| tag_ids[t.as_str()]).collect())
        .collect();
    let n_tags = tag_ids.len();

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);

    let mut per_tag: Vec<Vec<usize>> = vec![Vec::new(); n_tags];
    for &i in &order {
        for &t in &labels[i] {
            per_tag[t].push(i);
        }
    }
    let mut remaining: Vec<usize> = per_tag.iter().map(Vec::len).collect();
    let mut demand: [Vec<f64>; 2] = [
        remaining.iter().map(|&c| c as f64 * fracs[TRAIN]).collect(),
        remaining.iter().map(|&c| c as f64 * fracs[TEST]).collect(),
    ];
    let mut room = sizes;
    let mut fold = vec![usize::MAX; n];

    let assign = |i: usize, f: usize, fold: &mut Vec<usize>, room: &mut [usize; 2], remaining: &mut Vec<usize>, demand: &mut [Vec<f64>; 2]| {
        fold[i] = f;
        room[f] -= 1;
        for &t in &labels[i] {
            remaining[t] -= 1;
            demand[f][t] -= 1.0;
        }
    };

    while let Some(tag) = (0..n_tags).filter(|&t| remaining[t] > 0).min_by_key(|&t| (remaining[t], t)) {
        for &i in &per_tag[tag] {
            if fold[i] != usize::MAX {
                continue;
            }
            let f = if room[TRAIN] == 0 {
                TEST
            } else if room[TEST] == 0 {
                TRAIN
            } else if demand[TRAIN][tag] != demand[TEST][tag] {
                argmax_fold([demand[TRAIN][tag], demand[TEST][tag]], &mut rng)
            } else {
                argmax_fold([room[TRAIN] as f64, room[TEST] as f64], &mut rng)
            };
            assign(i, f, &mut fold, &mut room, &mut remaining, &mut demand);
        }
    }
    for &i in &order {
        if fold[i] == usize::MAX {
            let f = if room[TRAIN] == 0 {
                TEST
            } else if room[TEST] == 0 {
                TRAIN
            } else {
                argmax_fold([room[TRAIN] as f64, room[TEST] as f64], &mut rng)
            };
            assign(i, f, &mut fold, &mut room, &mut remaining, &mut demand);
        }
    }
    Ok(assemble(d, &fold, ratio))
}

/// Uniformly random split with the same fold sizes as [`stratified_split`].
pub fn random_split(d: &Dataset, ratio: f64, seed: u64) -> Result<SplitResult> {
    let n = d.len();
    let sizes = fold_sizes(n, ratio)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::seeded(seed));
    let mut fold = vec![TEST; n];
    for &i in &order[..sizes[TRAIN]] {
        fold[i] = TRAIN;
    }
    Ok(assemble(d, &fold, ratio))
}

/// Mean over tags of `|share in train - share in test|`, where a tag's share
/// in a fold is the fraction of that fold's problems carrying it.
pub fn label_proportion_deviation(s: &SplitResult) -> f64 {
    fn share(d: &Dataset) -> BTreeMap<&str, f64> {
        let mut m: BTreeMap<&str, f64> = BTreeMap::new();
        for p in &d.problems {
            for t in &p.tags {
                *m.entry(t.as_str()).or_default() += 1.0 / d.len() as f64;
            }
        }
        m
    }
    let (a, b) = (share(&s.train), share(&s.test));
    let tags: std::collections::BTreeSet<&str> = a.keys().chain(b.keys()).copied().collect();
    if tags.is_empty() {
        return 0.0;
    }
    tags.iter()
        .map(|t| (a.get(t).unwrap_or(&0.0) - b.get(t).unwrap_or(&0.0)).abs())
        .sum::<f64>()
        / tags.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic, Problem, Source};
    use crate::taxonomy::{tag_frequencies, TaxonomyMap};

    fn tiny(n: usize) -> Dataset {
        Dataset::new(
            (0..n)
                .map(|i| Problem::new(format!("doc {i}"), if i % 3 == 0 { vec!["DP".into()] } else { vec![] }))
                .collect(),
            Source::Combined,
        )
    }

    #[test]
    fn ten_samples_split_nine_one() {
        let s = stratified_split(&tiny(10), 0.9, 1).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (9, 1));
    }

    #[test]
    fn rejects_small_or_bad_input() {
        assert!(stratified_split(&tiny(1), 0.9, 0).is_err());
        assert!(stratified_split(&tiny(5), 1.0, 0).is_err());
        assert!(stratified_split(&tiny(5), 0.0, 0).is_err());
        assert!(random_split(&tiny(1), 0.5, 0).is_err());
    }

    #[test]
    fn disjoint_cover_in_input_order_and_deterministic() {
        let d = generate_synthetic(300, &TaxonomyMap::default_map(), 3);
        let s = stratified_split(&d, 0.9, 7).unwrap();
        let mut all: Vec<usize> = s.train_indices.iter().chain(&s.test_indices).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..300).collect::<Vec<_>>());
        assert!(s.train_indices.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(s.train.problems[0], d.problems[s.train_indices[0]]);
        assert_eq!(s, stratified_split(&d, 0.9, 7).unwrap());
        assert_eq!(s.train.len(), 270);
    }

    #[test]
    fn per_tag_frequency_tracks_overall() {
        let d = generate_synthetic(1000, &TaxonomyMap::default_map(), 8);
        let s = stratified_split(&d, 0.9, 2).unwrap();
        let all = tag_frequencies(&d);
        let tr = tag_frequencies(&s.train);
        for (tag, &c) in &all {
            let overall = c as f64 / d.len() as f64;
            let train = *tr.get(tag).unwrap_or(&0) as f64 / s.train.len() as f64;
            assert!((overall - train).abs() <= 0.03, "{tag}: {overall} vs {train}");
        }
    }

    #[test]
    fn beats_random_split_on_average() {
        let d = generate_synthetic(1000, &TaxonomyMap::default_map(), 9);
        let (mut strat, mut rand) = (0.0, 0.0);
        for seed in 0..5 {
            strat += label_proportion_deviation(&stratified_split(&d, 0.9, seed).unwrap());
            rand += label_proportion_deviation(&random_split(&d, 0.9, seed).unwrap());
        }
        assert!(strat <= rand, "{strat} > {rand}");
    }
}
