use std::path::Path;
use std::process::{Command, Output};

fn probtag(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_probtag"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn ok(o: Output) -> Output {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    o
}

const FAST: &str = "n_trees=15\nword2vec_dim=16\nword2vec_epochs=2\ndoc2vec_dim=8\ndoc2vec_epochs=5\nmax_epochs=4\n";

#[test]
fn synth_then_stats_reports_count() {
    let dir = tempfile::tempdir().unwrap();
    ok(probtag(dir.path(), &["synth", "--n", "1000", "--seed", "42", "--out", "s.json"]));
    let o = ok(probtag(dir.path(), &["stats", "--input", "s.json"]));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["problem_count"], 1000);
}

#[test]
fn split_train_evaluate_predict() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(probtag(p, &["synth", "--n", "300", "--seed", "1", "--out", "s.json"]));
    ok(probtag(p, &["split", "--input", "s.json", "--output", "sp", "--ratio", "0.8"]));
    std::fs::write(p.join("run.cfg"), format!("representation=onehot\nmodel=lstm\n{FAST}")).unwrap();
    ok(probtag(p, &["train", "--config", "run.cfg", "--input", "sp/train.json", "--model", "m.bin", "--report", "h.csv"]));
    let csv = std::fs::read_to_string(p.join("h.csv")).unwrap();
    assert!(csv.starts_with("epoch,train_loss,holdout_loss,holdout_whs\n"));

    let o = ok(probtag(p, &["evaluate", "--model", "m.bin", "--input", "sp/test.json", "--report", "r.json"]));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["model"], "onehot+lstm");
    assert!(v["loss"].is_number());
    assert_eq!(std::fs::read_to_string(p.join("r.json")).unwrap(), stdout(&o));

    let o = ok(probtag(p, &["predict", "--model", "m.bin", "--text", "shortest path between nodes"]));
    let tags: Vec<String> = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(tags.len() <= 9);
}

#[test]
fn identical_runs_write_identical_models() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(probtag(p, &["synth", "--n", "200", "--seed", "5", "--out", "s.json"]));
    std::fs::write(p.join("run.cfg"), format!("representation=doc2vec\nmodel=ffnn\n{FAST}")).unwrap();
    for out in ["a.bin", "b.bin"] {
        ok(probtag(p, &["train", "--config", "run.cfg", "--input", "s.json", "--model", out, "--seed", "9"]));
    }
    assert_eq!(std::fs::read(p.join("a.bin")).unwrap(), std::fs::read(p.join("b.bin")).unwrap());
}

#[test]
fn benchmark_lists_the_six_pairings() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(probtag(p, &["synth", "--n", "300", "--seed", "2", "--out", "s.json"]));
    std::fs::write(p.join("run.cfg"), format!("dataset=s.json\n{FAST}")).unwrap();
    let o = ok(probtag(p, &["benchmark", "--config", "run.cfg", "--report", "b.json"]));
    let table = stdout(&o);
    let rows: Vec<&str> = table.lines().skip(2).map(|l| l.split_whitespace().next().unwrap()).collect();
    assert_eq!(
        rows,
        ["tfidf+forest", "tfidf+tree", "random", "onehot+lstm", "doc2vec+ffnn", "word2vec+lstm"]
    );
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(p.join("b.json")).unwrap()).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 6);
}

#[test]
fn exit_codes_separate_usage_from_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(probtag(p, &["synth", "--n", "50", "--out", "s.json"]));

    std::fs::write(p.join("bad.cfg"), "representation=tfidf\nmodel=lstm\n").unwrap();
    let o = probtag(p, &["train", "--config", "bad.cfg", "--input", "s.json", "--model", "m.bin"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("onehot+lstm") && err.contains("tfidf+forest"), "{err}");

    std::fs::write(p.join("typo.cfg"), "learning_rat=0.1\n").unwrap();
    let o = probtag(p, &["train", "--config", "typo.cfg", "--input", "s.json", "--model", "m.bin"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("learning_rat"));

    assert_eq!(probtag(p, &["frobnicate"]).status.code(), Some(1));
    assert_eq!(probtag(p, &["stats"]).status.code(), Some(1));
    assert_eq!(probtag(p, &["stats", "--input", "missing.json"]).status.code(), Some(2));

    std::fs::write(p.join("junk.json"), "{not json").unwrap();
    assert_eq!(probtag(p, &["stats", "--input", "junk.json"]).status.code(), Some(2));
    std::fs::write(p.join("junk.bin"), "TGMDxx").unwrap();
    let o = probtag(p, &["predict", "--model", "junk.bin", "--text", "graphs"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn holdout_test_requires_a_test_set() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(probtag(p, &["synth", "--n", "50", "--out", "s.json"]));
    let o = probtag(p, &["train", "--input", "s.json", "--model", "m.bin", "--holdout", "test"]);
    assert_eq!(o.status.code(), Some(1));
}
