mod common;

use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_score-expansion")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(code(&cli(&["--help"])), 0);
    assert_eq!(code(&cli(&[])), 1);
    assert_eq!(code(&cli(&["frobnicate"])), 1);
    let piece = common::corpus_dir().join("piece_00.mid");
    let out = cli(&["expand", s(&piece), "--boundary", "4", "--infiller", "nope", "--out", "/dev/null"]);
    assert_eq!(code(&out), 1);
    let out = cli(&["expand", s(&piece), "--boundary", "4", "--infiller", "markov", "--out", "/dev/null"]);
    assert_eq!(code(&out), 1, "markov needs a model");
}

#[test]
fn expand_writes_a_longer_file() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("x.mid");
    let piece = common::corpus_dir().join("piece_00.mid");
    let out = cli(&["expand", s(&piece), "--boundary", "4", "--gap", "3", "--out", s(&target)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let analysis: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(analysis["delta_gs"].as_f64().unwrap() > 0.0);
    let score = score_expansion::parse_midi(&std::fs::read(target).unwrap()).unwrap();
    assert_eq!(score_expansion::quantize(&score, 16).bar_count(), 15);
}

#[test]
fn data_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.mid");
    std::fs::write(&bad, b"nope").unwrap();
    let out = cli(&["expand", s(&bad), "--boundary", "1", "--out", s(&dir.path().join("o.mid"))]);
    assert_eq!(code(&out), 2);
    let piece = common::corpus_dir().join("piece_00.mid");
    let out = cli(&["expand", s(&piece), "--boundary", "40", "--out", s(&dir.path().join("o.mid"))]);
    assert_eq!(code(&out), 2, "boundary past the end");
}

#[test]
fn evaluate_prints_metrics() {
    let c = common::corpus_dir();
    let out = cli(&["evaluate", s(&c.join("piece_00.mid")), s(&c.join("piece_01.mid")), s(&c.join("piece_02.mid"))]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for key in ["gs1", "gs2", "delta_gs", "rhs1", "rhs2", "delta_rhs"] {
        assert!(v[key].is_f64(), "{key}");
    }
}

#[test]
fn train_then_run_markov() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    let out = cli(&["train-markov", "--corpus", s(&common::corpus_dir()), "--out", s(&model)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let config = common::fixtures_dir().join("experiment.toml");
    let results = dir.path().join("results");
    let out = cli(&[
        "run",
        "--config",
        s(&config),
        "--infiller",
        "markov",
        "--model",
        s(&model),
        "--output-dir",
        s(&results),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["count"], 20);
    assert!(results.join("piece_19_expanded.mid").exists());
}

#[test]
fn partial_failure_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    std::fs::create_dir(&corpus).unwrap();
    std::fs::copy(common::corpus_dir().join("piece_03.mid"), corpus.join("a.mid")).unwrap();
    std::fs::write(corpus.join("b.mid"), b"junk").unwrap();
    std::fs::write(
        corpus.join("ann.json"),
        r#"[{"file": "a.mid", "boundary_bar": 7}, {"file": "b.mid", "boundary_bar": 2}]"#,
    )
    .unwrap();
    let config = dir.path().join("exp.toml");
    std::fs::write(&config, "corpus_dir = \"corpus\"\nannotations = \"corpus/ann.json\"\noutput_dir = \"out\"\n").unwrap();
    let out = cli(&["run", "--config", s(&config)]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("out/results.csv").exists());

    std::fs::write(&config, "corpus_dir = \"corpus\"\nannotations = \"corpus/ann.json\"\noutput_dir = \"out\"\nbogus = 1\n")
        .unwrap();
    assert_eq!(code(&cli(&["run", "--config", s(&config)])), 1);
}
