use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use styledistill_core::human_eval::{RubricDefinition, SessionStore};

fn toy() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/toy")
}

fn styledistill(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_styledistill"))
        .args(args)
        .env_remove("STYLEDISTILL_JSON")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn error_json(o: &Output) -> Value {
    let err = String::from_utf8(o.stderr.clone()).unwrap();
    let line = err.lines().last().unwrap_or_default();
    serde_json::from_str(line).unwrap_or_else(|e| panic!("{e}: {err}"))
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

fn replay_args(run_dir: &Path) -> Vec<String> {
    let toy = toy();
    [
        "--sources",
        toy.join("sources.txt").to_str().unwrap(),
        "--style",
        "formality",
        "--q",
        "2",
        "--size",
        "30",
        "--seed",
        "7",
        "--backend",
        "replay",
        "--fixture",
        toy.join("replay.jsonl").to_str().unwrap(),
        "--run-dir",
        run_dir.to_str().unwrap(),
    ]
    .map(String::from)
    .to_vec()
}

fn run(sub: &str, extra: &[String]) -> Output {
    let mut args = vec![sub.to_owned()];
    args.extend_from_slice(extra);
    styledistill(&args.iter().map(String::as_str).collect::<Vec<_>>())
}

#[test]
fn bleu_identity_prints_score_and_signature() {
    let dir = tempfile::tempdir().unwrap();
    let h = write(
        dir.path(),
        "h.txt",
        "the cat is on the mat\nhello there , friend .\n",
    );
    let out = styledistill(&["bleu", "--hyp", &h, "--ref", &h]);
    assert!(out.status.success());
    assert_eq!(
        stdout(&out),
        "100.00\nbleu|tok:13a|smooth:exp|order:4|case:mixed\n"
    );
}

#[test]
fn bleu_json_report_and_options() {
    let dir = tempfile::tempdir().unwrap();
    let h = write(dir.path(), "h.txt", "the cat sat on the mat\n");
    let r = write(dir.path(), "r.txt", "the cat is on the mat\n");
    let out = styledistill(&["--json", "bleu", "--hyp", &h, "--ref", &r, "--tok", "ws"]);
    assert!(out.status.success());
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["matches"], serde_json::json!([5, 3, 1, 0]));
    assert!((report["score"].as_f64().unwrap() - 37.99178428257963).abs() < 1e-9);
    assert_eq!(
        report["signature"],
        "bleu|tok:ws|smooth:exp|order:4|case:mixed"
    );
}

#[test]
fn error_classes_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let h = write(dir.path(), "h.txt", "a b c d\n");
    let two = write(dir.path(), "two.txt", "a b c d\ne f g h\n");
    let missing = dir.path().join("nope.txt");
    let missing = missing.to_str().unwrap();

    let out = styledistill(&["--json", "bleu", "--hyp", missing, "--ref", &h]);
    assert_eq!(out.status.code(), Some(4));
    let err = error_json(&out);
    assert_eq!(
        (err["error"].as_str(), err["exit_code"].as_i64()),
        (Some("input"), Some(4))
    );

    let out = styledistill(&["--json", "bleu", "--hyp", &h, "--ref", &h, "--tok", "intl"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"], "usage");

    let out = styledistill(&["--json", "bleu", "--hyp", &h, "--ref", &two]);
    assert_eq!(out.status.code(), Some(7));
    assert_eq!(error_json(&out)["error"], "evaluation");

    let out = styledistill(&["bleu", "--hyp", &h]);
    assert_eq!(out.status.code(), Some(2), "clap usage errors exit 2");
}

#[test]
fn generate_dry_run_counts_requests() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = replay_args(&dir.path().join("run"));
    args.push("--dry-run".into());
    let out = run("generate", &args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(
        stdout(&out),
        "50 sources x q=2 = 100 requests (100 backend calls)\n"
    );
    assert!(!dir.path().join("run").exists());
}

#[test]
fn replay_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let out = run("run", &replay_args(d));
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(stdout(&out).contains("50 sources, 100 requests, 100 records, 95 examples"));
    }
    for name in [
        "train_full.jsonl",
        "train_30.jsonl",
        "manifest.json",
        "records.jsonl",
    ] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }

    // Second run in the same directory reuses the completions.
    let out = run("run", &replay_args(&a));
    assert!(stdout(&out).contains("(completions reused)"));

    // A different config in the same directory is refused.
    let mut changed = replay_args(&a);
    changed[5] = "3".into();
    let out = run("run", &[vec!["--json".to_owned()], changed].concat());
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_json(&out)["error"], "config");

    // Seeded sampling is a pure function of input, size and seed.
    let full = a.join("train_full.jsonl");
    let digests: Vec<String> = ["s1.jsonl", "s2.jsonl"]
        .iter()
        .map(|name| {
            let out = styledistill(&[
                "sample",
                "--input",
                full.to_str().unwrap(),
                "--size",
                "10",
                "--seed",
                "3",
                "--out",
                dir.path().join(name).to_str().unwrap(),
            ]);
            assert!(out.status.success());
            stdout(&out).split_whitespace().next().unwrap().to_owned()
        })
        .collect();
    assert_eq!(digests[0], digests[1]);
    assert_eq!(
        fs::read_to_string(dir.path().join("s1.jsonl"))
            .unwrap()
            .lines()
            .count(),
        10
    );

    let out = styledistill(&[
        "sample",
        "--input",
        full.to_str().unwrap(),
        "--size",
        "1000",
        "--out",
        "x.jsonl",
    ]);
    assert_eq!(out.status.code(), Some(6));
}

#[test]
fn eval_table_bolds_the_best_run() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "ref.txt",
        "the cat is on the mat\nwe are not here today\n",
    );
    write(
        dir.path(),
        "good.txt",
        "the cat is on the mat\nwe are not here\n",
    );
    write(dir.path(), "weak.txt", "a cat on a mat\nnobody is here\n");
    let manifest = write(
        dir.path(),
        "runs.json",
        r#"[
  {"run_id": "good", "method_label": "Strong", "hyp_path": "good.txt", "ref_path": "ref.txt"},
  {"run_id": "weak", "method_label": "Baseline", "hyp_path": "weak.txt", "ref_path": "ref.txt"}
]"#,
    );
    let out = styledistill(&["eval", "table", "--manifest", &manifest]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout(&out);
    let bold: Vec<&str> = text.lines().filter(|l| l.contains("**")).collect();
    assert_eq!(bold.len(), 1, "{text}");
    assert!(bold[0].starts_with("| **Strong** |"), "{text}");
    assert!(text.contains("| Baseline |"));

    let out = styledistill(&["eval", "run", "--manifest", &manifest]);
    assert!(stdout(&out).contains("(cached)"), "table persisted reports");
}

#[test]
fn session_create_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let items: String = (0..8)
        .map(|i| {
            format!(
                "{{\"item_id\":\"it{i}\",\"source\":\"s{i}\",\"rationale\":\"r{i}\",\"transferred\":\"t{i}\",\"task_label\":\"formality\",\"model_label\":\"student\"}}\n"
            )
        })
        .collect();
    let items = write(dir.path(), "items.jsonl", &items);
    let data_arg = data.to_str().unwrap();

    let out = styledistill(&[
        "--json",
        "session",
        "create",
        "--data-dir",
        data_arg,
        "--items",
        &items,
        "--annotator",
        "ann",
        "--size",
        "4",
        "--seed",
        "1",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let created: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let id = created["session_id"].as_str().unwrap().to_owned();
    assert_eq!(created["progress"]["total"], 4);

    let out = styledistill(&["--json", "session", "summary", "--data-dir", data_arg]);
    assert_eq!(out.status.code(), Some(8));
    assert_eq!(error_json(&out)["error"], "human_eval");

    {
        let store = SessionStore::open(&data, RubricDefinition::builtin()).unwrap();
        let session = store.session(&id).unwrap();
        for (item, rate) in session.items.iter().zip(["A", "B", "C", "A"]) {
            store.submit_rating(&id, &item.item_id, rate).unwrap();
        }
    }
    let out = styledistill(&["session", "summary", "--data-dir", data_arg]);
    assert!(out.status.success());
    assert!(
        stdout(&out).starts_with("A=2 B=1 C=1 D=0 total=4 acceptable=75.0%\n"),
        "{}",
        stdout(&out)
    );

    let out = styledistill(&["session", "export", "--data-dir", data_arg, "--id", &id]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).lines().count(), 5);
}
