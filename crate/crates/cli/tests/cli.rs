use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn logent(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_logent"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = logent(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fails(args: &[&str]) -> String {
    let out = logent(args);
    assert!(!out.status.success(), "{args:?} unexpectedly succeeded");
    String::from_utf8(out.stderr).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

const SPEC: &str = r#"
seed = 11
duration = 120.0
nodes = [
  { id = "master", role = "master", host = "m" },
  { id = "w1", role = "worker", host = "n1" },
  { id = "w2", role = "worker", host = "n2" },
  { id = "d1", role = "data-node", host = "n1" },
  { id = "d2", role = "data-node", host = "n2" },
]
[failure]
kind = "compute-node"
target = "w2"
onset = 60.0
"#;

#[test]
fn gen_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "spec.toml", SPEC);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&["gen", "--spec", p(&spec), "--out", p(&a)]);
    ok(&["gen", "--spec", p(&spec), "--out", p(&b)]);
    for name in ["corpus.jsonl", "truth.json", "labels.csv"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
    let truth: serde_json::Value =
        serde_json::from_slice(&fs::read(a.join("truth.json")).unwrap()).unwrap();
    assert_eq!(truth.as_array().unwrap().len(), 4);
}

#[test]
fn gen_without_failure_has_no_truth_regions() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "spec.toml", SPEC.split("[failure]").next().unwrap());
    let out = dir.path().join("o");
    let summary = ok(&["gen", "--spec", p(&spec), "--out", p(&out)]);
    assert!(summary.ends_with("regions 0\n"), "{summary}");
    let truth: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("truth.json")).unwrap()).unwrap();
    assert_eq!(truth, serde_json::json!([]));
}

#[test]
fn combined_failure_on_one_node_is_a_spec_error() {
    let dir = TempDir::new().unwrap();
    let spec = write(
        &dir,
        "spec.toml",
        r#"
seed = 1
duration = 60.0
nodes = [{ id = "w1", role = "worker", host = "n1" }]
[failure]
kind = "combined"
target = "n1"
onset = 30.0
"#,
    );
    let out = dir.path().join("o");
    let err = fails(&["gen", "--spec", p(&spec), "--out", p(&out)]);
    assert!(err.contains("nodes"), "{err}");
    assert!(!out.join("corpus.jsonl").exists());
}

#[test]
fn missing_model_fails() {
    let dir = TempDir::new().unwrap();
    let corpus = write(&dir, "c.log", "a b c\n");
    let out = dir.path().join("tl.csv");
    let err = fails(&[
        "score",
        "--model",
        p(&dir.path().join("none.json")),
        "--corpus",
        p(&corpus),
        "--out",
        p(&out),
    ]);
    assert!(err.contains("none.json"), "{err}");
    assert!(!out.exists());
}

#[test]
fn zero_order_is_rejected() {
    let dir = TempDir::new().unwrap();
    let corpus = write(&dir, "c.log", "a b c\n");
    fails(&[
        "train",
        "--order",
        "0",
        "--corpus",
        p(&corpus),
        "--out",
        p(&dir.path().join("m")),
    ]);
}

#[test]
fn empty_corpus_trains_with_a_warning() {
    let dir = TempDir::new().unwrap();
    let corpus = write(&dir, "c.log", "");
    let model = dir.path().join("m.json");
    let out = logent(&["train", "--corpus", p(&corpus), "--out", p(&model)]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    assert!(model.exists());
}

#[test]
fn flags_override_config_file() {
    let dir = TempDir::new().unwrap();
    let corpus = write(&dir, "c.log", "a b c\n");
    let cfg = write(&dir, "run.toml", "order = 3\nalpha = 0.5\n");
    let model = dir.path().join("m.json");
    let from_file = ok(&[
        "train",
        "--config",
        p(&cfg),
        "--corpus",
        p(&corpus),
        "--out",
        p(&model),
    ]);
    assert!(from_file.starts_with("order 3,"), "{from_file}");
    let from_flag = ok(&[
        "train",
        "--config",
        p(&cfg),
        "--order",
        "2",
        "--corpus",
        p(&corpus),
        "--out",
        p(&model),
    ]);
    assert!(from_flag.starts_with("order 2,"), "{from_flag}");
}

#[test]
fn deterministic_corpus_scores_zero_under_mle() {
    let dir = TempDir::new().unwrap();
    let text: String = (0..400)
        .map(|i| format!("job {i} started on host 10.0.0.{}\n", i % 250))
        .collect();
    let corpus = write(&dir, "c.log", &text);
    let model = dir.path().join("m.json");
    let tl = dir.path().join("tl.csv");
    ok(&[
        "train",
        "--alpha",
        "0",
        "--corpus",
        p(&corpus),
        "--out",
        p(&model),
    ]);
    ok(&[
        "score",
        "--model",
        p(&model),
        "--corpus",
        p(&corpus),
        "--out",
        p(&tl),
    ]);
    let rows: Vec<String> = fs::read_to_string(&tl)
        .unwrap()
        .lines()
        .skip(1)
        .map(String::from)
        .collect();
    assert!(rows.len() > 1);
    assert!(rows.iter().all(|r| r.ends_with(",0.000000")), "{rows:?}");
}

#[test]
fn unseen_event_under_mle_names_the_window() {
    let dir = TempDir::new().unwrap();
    let train = write(&dir, "t.log", "alpha beta\n");
    let test = write(&dir, "s.log", "alpha beta\nalpha gamma\n");
    let model = dir.path().join("m.json");
    ok(&[
        "train",
        "--alpha",
        "0",
        "--corpus",
        p(&train),
        "--out",
        p(&model),
    ]);
    let out = dir.path().join("tl.csv");
    let err = fails(&[
        "score",
        "--model",
        p(&model),
        "--corpus",
        p(&test),
        "--out",
        p(&out),
    ]);
    assert!(err.contains("window 0"), "{err}");
    assert!(!out.exists());
}

/// The case-study pipeline from generation to evaluation.
#[test]
fn openstack_pipeline() {
    let dir = TempDir::new().unwrap();
    let (case, base) = (dir.path().join("case"), dir.path().join("base"));
    ok(&["gen", "--preset", "openstack", "--out", p(&case)]);
    ok(&["gen", "--preset", "openstack-baseline", "--out", p(&base)]);
    let model = dir.path().join("model.json");
    let tl = dir.path().join("tl.csv");
    let report = dir.path().join("report.json");
    ok(&[
        "train",
        "--corpus",
        p(&base.join("corpus.jsonl")),
        "--out",
        p(&model),
    ]);
    ok(&[
        "score",
        "--model",
        p(&model),
        "--corpus",
        p(&case.join("corpus.jsonl")),
        "--out",
        p(&tl),
    ]);
    let text = fs::read_to_string(&tl).unwrap();
    assert_eq!(text.lines().count(), 53);
    assert!(text.starts_with("window,start,end,tokens,entropy\n"));
    ok(&[
        "detect",
        "--timeline",
        p(&tl),
        "--labels",
        p(&case.join("labels.csv")),
        "--out",
        p(&report),
    ]);
    let r: serde_json::Value = serde_json::from_slice(&fs::read(&report).unwrap()).unwrap();
    let e = &r["evaluation"];
    assert_eq!(r["flagged"], serde_json::json!([17, 24, 25, 26, 27]));
    assert_eq!(
        (
            e["tp"].as_u64(),
            e["fp"].as_u64(),
            e["fn"].as_u64(),
            e["tn"].as_u64()
        ),
        (Some(4), Some(1), Some(0), Some(47))
    );
    assert!((e["f_measure"].as_f64().unwrap() - 0.8889).abs() < 1e-4);

    let no_labels = dir.path().join("bare.json");
    ok(&["detect", "--timeline", p(&tl), "--out", p(&no_labels)]);
    let r: serde_json::Value = serde_json::from_slice(&fs::read(&no_labels).unwrap()).unwrap();
    assert!(r.get("evaluation").is_none());
    assert_eq!(r["flagged"], serde_json::json!([17, 24, 25, 26, 27]));

    let short = write(&dir, "short.csv", "window,label\n0,normal\n");
    fails(&[
        "detect",
        "--timeline",
        p(&tl),
        "--labels",
        p(&short),
        "--out",
        p(&dir.path().join("x.json")),
    ]);
}

#[test]
fn constant_timeline_flags_nothing() {
    let dir = TempDir::new().unwrap();
    let rows: String = (0..40)
        .map(|i| format!("{i},{},{},10,1.500000\n", i * 10, i * 10 + 10))
        .collect();
    let tl = write(
        &dir,
        "tl.csv",
        &format!("window,start,end,tokens,entropy\n{rows}"),
    );
    let report = dir.path().join("r.json");
    ok(&["detect", "--timeline", p(&tl), "--out", p(&report)]);
    let r: serde_json::Value = serde_json::from_slice(&fs::read(&report).unwrap()).unwrap();
    assert_eq!(r["flagged"], serde_json::json!([]));
    assert_eq!(r["windows"], 40);
}

#[test]
fn output_never_replaces_an_input() {
    let dir = TempDir::new().unwrap();
    let corpus = write(&dir, "c.log", "a b c\n");
    fails(&["train", "--corpus", p(&corpus), "--out", p(&corpus)]);
    assert_eq!(fs::read_to_string(&corpus).unwrap(), "a b c\n");
}

#[test]
fn xval_is_deterministic_and_handles_singleton_folds() {
    let dir = TempDir::new().unwrap();
    let t = dir.path().join("t");
    ok(&[
        "gen",
        "--preset",
        "templated",
        "--records",
        "300",
        "--out",
        p(&t),
    ]);
    let corpus = t.join("corpus.txt");
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    ok(&[
        "xval",
        "--seed",
        "4",
        "--corpus",
        p(&corpus),
        "--out",
        p(&a),
    ]);
    ok(&[
        "xval",
        "--seed",
        "4",
        "--corpus",
        p(&corpus),
        "--out",
        p(&b),
    ]);
    let table = fs::read_to_string(&a).unwrap();
    assert_eq!(table, fs::read_to_string(&b).unwrap());
    assert_eq!(table.lines().count(), 9);
    let curve: Vec<f64> = table
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(curve.windows(2).all(|w| w[1] <= w[0] + 1e-6), "{curve:?}");

    let ten: String = (0..10).map(|i| format!("line {i} of ten\n")).collect();
    let small = write(&dir, "ten.log", &ten);
    let out = dir.path().join("ten.csv");
    ok(&[
        "xval",
        "--folds",
        "10",
        "--max-order",
        "2",
        "--corpus",
        p(&small),
        "--out",
        p(&out),
    ]);
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 3);
    fails(&[
        "xval",
        "--folds",
        "11",
        "--corpus",
        p(&small),
        "--out",
        p(&dir.path().join("e.csv")),
    ]);
}
