use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use probtag::metrics::{weighted_hamming_score, MetricWeights};
use probtag::models::{train_tree, FfnnModel, LstmModel, Network, TreeConfig, LSTM_HIDDEN};
use probtag::preprocess::{clean_text, CleaningConfig};
use probtag::represent::{build_vocabulary, onehot_sequence, tfidf_vector, TfidfModel};
use probtag::taxonomy::encode_dataset;
use probtag::training::{stratified_split, LossWeights};
use probtag_bench::{corpus, RAW_STATEMENT};

fn preprocessing(c: &mut Criterion) {
    let cfg = CleaningConfig::default();
    c.bench_function("clean_text", |b| b.iter(|| clean_text(black_box(RAW_STATEMENT), &cfg)));
}

fn representations(c: &mut Criterion) {
    let (d, _) = corpus(2000, 1);
    let vocab = build_vocabulary(&d).unwrap();
    let tfidf = TfidfModel::fit(&d, &vocab).unwrap();
    let doc = d.problems[0].text.as_str();
    c.bench_function("tfidf_vector", |b| b.iter(|| tfidf_vector(black_box(doc), &tfidf, &vocab)));
    c.bench_function("stratified_split_2000", |b| b.iter(|| stratified_split(black_box(&d), 0.9, 3).unwrap()));
}

fn models(c: &mut Criterion) {
    let (d, t) = corpus(500, 2);
    let vocab = build_vocabulary(&d).unwrap();
    let y = encode_dataset(&d, &t).unwrap();
    let w = LossWeights::default();

    let seqs: Vec<_> = d.texts().take(32).map(|s| onehot_sequence(s, &vocab)).collect();
    let xs: Vec<_> = seqs.iter().collect();
    let ys: Vec<_> = y.iter().take(32).collect();
    let lstm = LstmModel::new(vocab.len(), LSTM_HIDDEN, 0);
    let mut grad = vec![0.0; lstm.n_params()];
    c.bench_function("lstm_backprop_batch32", |b| {
        b.iter(|| lstm.backprop_batch(black_box(&xs), &ys, &w, 1.0, &mut grad).unwrap())
    });

    let ffnn = FfnnModel::new(30, 16, 0);
    let x = vec![0.1; 30];
    c.bench_function("ffnn_predict", |b| b.iter(|| ffnn.predict_proba(black_box(&x)).unwrap()));

    let tfidf = TfidfModel::fit(&d, &vocab).unwrap();
    let rows: Vec<Vec<f64>> = d.texts().map(|s| tfidf_vector(s, &tfidf, &vocab)).collect();
    let mut g = c.benchmark_group("tree");
    g.sample_size(10);
    g.bench_function("train_tree_500", |b| {
        b.iter_batched(|| rows.clone(), |r| train_tree(&r, &y, TreeConfig::default()).unwrap(), BatchSize::LargeInput)
    });
    g.finish();

    let pred: Vec<_> = y.iter().rev().copied().collect();
    c.bench_function("weighted_hamming_500", |b| {
        b.iter(|| weighted_hamming_score(black_box(&pred), &y, MetricWeights::default()).unwrap())
    });
}

criterion_group!(benches, preprocessing, representations, models);
criterion_main!(benches);
