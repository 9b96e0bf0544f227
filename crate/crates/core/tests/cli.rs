//! Drives the `projner` binary: exit codes and a stage-by-stage run on the
//! toy fixture.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use projner::corpus::SentenceRecord;
use projner::io::read_jsonl;
use projner::stages::{parallel_text, read_lines};

fn projner(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_projner"))
        .args(args)
        .env("PROJNER_LOG", "error")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = projner(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures/toy")
        .join(rel)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn missing_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = projner(&[
        "tokenize",
        "--in",
        "/nonexistent/input.txt",
        "--out",
        s(&dir.path().join("t.jsonl")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/input.txt"));
}

#[test]
fn bad_ratios_exit_3_and_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("bad.conf");
    let text = std::fs::read_to_string(fixture("toy.conf"))
        .unwrap()
        .replace("data.ratios = 0.8,0.1,0.1", "data.ratios = 0.9,0.1,0.1")
        .replace("= corpus", &format!("= {}", s(&fixture("corpus"))))
        .replace(
            "= target.de.txt",
            &format!("= {}", s(&fixture("target.de.txt"))),
        )
        .replace(
            "= external.jsonl",
            &format!("= {}", s(&fixture("external.jsonl"))),
        )
        .replace(
            "= label_map.txt",
            &format!("= {}", s(&fixture("label_map.txt"))),
        );
    std::fs::write(&conf, text).unwrap();
    let out = projner(&["pipeline", "--config", s(&conf)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("data.ratios"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn unknown_flag_exits_3() {
    let out = projner(&["split", "--bogus"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn mismatched_evaluation_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let gold = dir.path().join("gold.jsonl");
    let pred = dir.path().join("pred.jsonl");
    std::fs::write(
        &gold,
        "{\"text\":\"a b\",\"spans\":[]}\n{\"text\":\"c d\",\"spans\":[]}\n",
    )
    .unwrap();
    std::fs::write(&pred, "{\"text\":\"a b\",\"spans\":[]}\n").unwrap();
    let out = projner(&[
        "evaluate",
        "--gold",
        s(&gold),
        "--pred",
        s(&pred),
        "--out",
        s(&dir.path().join("e.json")),
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn stages_run_one_by_one() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name);

    ok(&[
        "ingest",
        "--corpus",
        s(&fixture("corpus")),
        "--out",
        s(&p("docs.jsonl")),
    ]);
    ok(&[
        "sentencize",
        "--in",
        s(&p("docs.jsonl")),
        "--out",
        s(&p("sents.jsonl")),
    ]);
    ok(&[
        "synthesize",
        "--in",
        s(&p("sents.jsonl")),
        "--out",
        s(&p("synth.jsonl")),
        "--seed",
        "0",
    ]);

    let sources: Vec<SentenceRecord> = read_jsonl(&p("synth.jsonl")).unwrap();
    let targets = read_lines(&fixture("target.de.txt")).unwrap();
    assert_eq!(sources.len(), targets.len());
    std::fs::write(
        p("parallel.txt"),
        parallel_text(&sources, &targets).unwrap(),
    )
    .unwrap();

    ok(&[
        "align-train",
        "--corpus",
        s(&p("parallel.txt")),
        "--model",
        s(&p("ibm.json")),
    ]);
    assert!(p("ibm.json.manifest.json").exists());
    ok(&[
        "align",
        "--model",
        s(&p("ibm.json")),
        "--corpus",
        s(&p("parallel.txt")),
        "--out",
        s(&p("links.pharaoh")),
    ]);
    let projected = ok(&[
        "project",
        "--src",
        s(&p("synth.jsonl")),
        "--tgt",
        s(&fixture("target.de.txt")),
        "--align",
        s(&p("links.pharaoh")),
        "--out",
        s(&p("projected.jsonl")),
    ]);
    assert!(projected.contains("projected"), "{projected}");
    assert!(p("projected.report.json").exists());

    ok(&[
        "split",
        "--in",
        s(&p("projected.jsonl")),
        "--out-dir",
        s(&p("split")),
    ]);
    for f in [
        "train.jsonl",
        "validation.jsonl",
        "test.jsonl",
        "split_stats.json",
    ] {
        assert!(p("split").join(f).exists(), "{f}");
    }

    std::fs::write(
        p("hyper.conf"),
        "tagger.dim = 16\ntagger.rows = 256\ntagger.hidden = 16\ntagger.epochs = 3\n",
    )
    .unwrap();
    ok(&[
        "train",
        "--train",
        s(&p("split/train.jsonl")),
        "--val",
        s(&p("split/validation.jsonl")),
        "--out",
        s(&p("tagger.json")),
        "--hyperparams",
        s(&p("hyper.conf")),
    ]);
    ok(&[
        "tag",
        "--model",
        s(&p("tagger.json")),
        "--in",
        s(&p("split/test.jsonl")),
        "--out",
        s(&p("pred.jsonl")),
    ]);
    let table = ok(&[
        "evaluate",
        "--gold",
        s(&p("split/test.jsonl")),
        "--pred",
        s(&p("pred.jsonl")),
        "--out",
        s(&p("eval.json")),
        "--table",
        s(&p("eval.txt")),
    ]);
    assert!(table.contains("Drug"), "{table}");
    assert_eq!(
        std::fs::read_to_string(p("eval.txt")).unwrap().trim_end(),
        table.trim_end()
    );

    // The external gold set has a span inside a token, so only char level scores.
    let external = ok(&[
        "evaluate",
        "--gold",
        s(&fixture("external.jsonl")),
        "--pred",
        s(&fixture("external.jsonl")),
        "--label-map",
        s(&fixture("label_map.txt")),
        "--out",
        s(&p("ext.json")),
    ]);
    assert!(external.contains("n/a"), "{external}");
}

#[test]
fn pipeline_subcommand_honours_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let summary = ok(&[
        "pipeline",
        "--config",
        s(&fixture("toy.conf")),
        "--out-dir",
        s(&out),
    ]);
    assert!(summary.contains("8 documents"), "{summary}");
    assert!(out.join("manifest.json").exists());
    assert!(out.join("evaluation_external.json").exists());
}
