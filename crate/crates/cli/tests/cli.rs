use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

const SUBCOMMANDS: [&str; 8] = [
    "simplify",
    "match",
    "loss",
    "rasterize",
    "eval",
    "synth",
    "compare",
    "fit",
];

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pivotmap"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_stdin(args: &[&str], stdin: &str) -> Output {
    let mut child = bin()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(stdin.as_bytes())
        .unwrap();
    child.wait_with_output().unwrap()
}

struct TempDir(PathBuf);

impl TempDir {
    fn new(name: &str) -> Self {
        let dir = std::env::temp_dir().join(format!("pivotmap-cli-{name}-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        TempDir(dir)
    }

    fn path(&self, file: &str) -> String {
        self.0.join(file).to_string_lossy().into_owned()
    }
}

impl Drop for TempDir {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

fn error_kind(out: &Output) -> String {
    let text = String::from_utf8_lossy(&out.stderr);
    let v: serde_json::Value =
        serde_json::from_str(text.trim()).expect("stderr is a JSON error envelope");
    v["error"]["kind"].as_str().unwrap().to_string()
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Pivot-level ground truth for six synthetic frames, and predictions offset
/// by (0.05, -0.05) with score 0.9.
fn fixture(dir: &TempDir) -> (String, String) {
    let dense = dir.path("dense.jsonl");
    let gts = dir.path("gts.jsonl");
    stdout(&run(&[
        "synth", "--count", "6", "--kind", "all", "--out", &dense,
    ]));
    stdout(&run(&["simplify", "--in", &dense, "--out", &gts]));
    let mut preds = String::new();
    for line in std::fs::read_to_string(&gts).unwrap().lines() {
        let mut v: serde_json::Value = serde_json::from_str(line).unwrap();
        for e in v["elements"].as_array_mut().unwrap() {
            e["score"] = serde_json::json!(0.9);
            for p in e["points"].as_array_mut().unwrap() {
                let x = p[0].as_f64().unwrap() + 0.05;
                let y = p[1].as_f64().unwrap() - 0.05;
                *p = serde_json::json!([x, y]);
            }
        }
        preds.push_str(&v.to_string());
        preds.push('\n');
    }
    let pred_path = dir.path("preds.jsonl");
    std::fs::write(&pred_path, preds).unwrap();
    (pred_path, gts)
}

#[test]
fn every_subcommand_has_help() {
    assert!(run(&["--help"]).status.success());
    for cmd in SUBCOMMANDS {
        let out = run(&[cmd, "--help"]);
        assert!(out.status.success(), "{cmd} --help");
        assert!(String::from_utf8_lossy(&out.stdout).contains("Usage"));
    }
}

#[test]
fn stochastic_commands_are_deterministic() {
    let a = run(&["synth", "--count", "8", "--seed", "7"]);
    let b = run(&["synth", "--count", "8", "--seed", "7"]);
    assert_eq!(stdout(&a), stdout(&b));
    let c = run(&["synth", "--count", "8", "--seed", "8"]);
    assert_ne!(stdout(&a), stdout(&c));

    let f1 = run(&[
        "fit", "--steps", "150", "--seed", "3", "--shape", "l_corner",
    ]);
    let f2 = run(&[
        "fit", "--steps", "150", "--seed", "3", "--shape", "l_corner",
    ]);
    assert_eq!(stdout(&f1), stdout(&f2));
}

#[test]
fn eval_perfect_predictions_and_parallel_parity() {
    let dir = TempDir::new("eval");
    let (preds, gts) = fixture(&dir);
    let csv = dir.path("table.csv");
    let seq = stdout(&run(&[
        "eval", "--preds", &preds, "--gts", &gts, "--csv", &csv,
    ]));
    let par = stdout(&run(&[
        "eval", "--preds", &preds, "--gts", &gts, "--jobs", "4",
    ]));
    assert_eq!(seq, par);
    let v: serde_json::Value = serde_json::from_str(&seq).unwrap();
    assert_eq!(v["map"], 1.0);
    assert_eq!(v["frames"], 6);
    let table = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(table, "AP_divider,AP_ped,AP_boundary,mAP\n1,1,1,1\n");

    let strict = stdout(&run(&[
        "eval",
        "--preds",
        &preds,
        "--gts",
        &gts,
        "--thresholds",
        "0.01",
    ]));
    let v: serde_json::Value = serde_json::from_str(&strict).unwrap();
    assert_eq!(v["map"], 0.0);
}

#[test]
fn compare_parallel_parity() {
    let dir = TempDir::new("compare");
    let corpus = dir.path("corpus.jsonl");
    stdout(&run(&["synth", "--count", "12", "--out", &corpus]));
    let seq = stdout(&run(&["compare", "--in", &corpus]));
    let par = stdout(&run(&["compare", "--in", &corpus, "--jobs", "3"]));
    assert_eq!(seq, par);
    let v: serde_json::Value = serde_json::from_str(&seq).unwrap();
    assert_eq!(v["entries"].as_array().unwrap().len(), 12);
}

#[test]
fn match_reports_every_prediction() {
    let dir = TempDir::new("match");
    let (preds, gts) = fixture(&dir);
    let text = stdout(&run(&["match", "--preds", &preds, "--gts", &gts]));
    let records: Vec<serde_json::Value> = text
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(records.len(), 6);
    for r in &records {
        assert_eq!(r["gt_index"], 0);
        // every pivot offset by 0.05 on both axes: mean L1 cost 0.1
        assert!((r["cost"].as_f64().unwrap() - 0.1).abs() < 1e-9);
    }
    let normalized = stdout(&run(&[
        "match",
        "--preds",
        &preds,
        "--gts",
        &gts,
        "--normalize",
    ]));
    let r: serde_json::Value = serde_json::from_str(normalized.lines().next().unwrap()).unwrap();
    assert!(r["cost"].as_f64().unwrap() < 0.01);
}

#[test]
fn loss_reports_components() {
    let rec = r#"{"pred":[[0,0],[1,0],[2,0]],"probs":[1,0,1],"gt":[[0,0],[2,0]]}"#;
    let text = stdout(&run_stdin(&["loss"], rec));
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["l_pp"], 0.0);
    assert_eq!(v["l_cp"], 0.0);
    assert_eq!(v["combination"], serde_json::json!([0, 2]));
}

#[test]
fn rasterize_pgm_header() {
    let dir = TempDir::new("raster");
    let corpus = dir.path("corpus.jsonl");
    stdout(&run(&["synth", "--count", "3", "--out", &corpus]));
    let out = run(&[
        "rasterize",
        "--in",
        &corpus,
        "--format",
        "pgm",
        "--frame",
        "synth-0001",
    ]);
    assert!(out.status.success());
    assert!(out.stdout.starts_with(b"P5\n32 64\n255\n"));
    assert_eq!(out.stdout.len(), b"P5\n32 64\n255\n".len() + 32 * 64);
    let missing = run(&[
        "rasterize",
        "--in",
        &corpus,
        "--format",
        "pgm",
        "--frame",
        "nope",
    ]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn exit_codes_and_error_envelope() {
    let out = run_stdin(&["loss"], "{not json");
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_kind(&out), "parse");

    let out = run(&[
        "eval",
        "--preds",
        "/nonexistent/p.jsonl",
        "--gts",
        "/nonexistent/g.jsonl",
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(error_kind(&out), "io");

    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_kind(&out), "invalid_input");

    let dir = TempDir::new("codes");
    let range = r#""range":{"x_min":-15.0,"x_max":15.0,"y_min":-30.0,"y_max":30.0}"#;
    let pred = format!(
        r#"{{"frame_id":"f",{range},"elements":[{{"class":"divider","score":0.5,"points":[[0,0],[1,1]]}}]}}"#
    );
    let gt_path = dir.path("g.jsonl");
    let pred_path = dir.path("p.jsonl");
    let gt = format!(
        r#"{{"frame_id":"f",{range},"elements":[{{"class":"divider","points":[[0,0],[1,1]]}},{{"class":"divider","points":[[3,0],[4,1]]}}]}}"#
    );
    std::fs::write(&gt_path, gt).unwrap();
    std::fs::write(&pred_path, pred).unwrap();
    let out = run(&["match", "--preds", &pred_path, "--gts", &gt_path]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_kind(&out), "capacity");

    let bad_cfg = dir.path("cfg.json");
    std::fs::write(&bad_cfg, r#"{"eval":{"thresholds":[-1.0]}}"#).unwrap();
    let out = run(&[
        "eval", "--preds", &pred_path, "--gts", &gt_path, "--config", &bad_cfg,
    ]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&[
        "eval",
        "--preds",
        &pred_path,
        "--gts",
        &dir.path("absent.jsonl"),
    ]);
    assert_eq!(out.status.code(), Some(4));

    let other_path = dir.path("other.jsonl");
    std::fs::write(
        &other_path,
        format!(r#"{{"frame_id":"g",{range},"elements":[]}}"#),
    )
    .unwrap();
    let out = run(&["eval", "--preds", &pred_path, "--gts", &other_path]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("frame mismatch"));
}

#[test]
fn config_overrides_defaults() {
    let dir = TempDir::new("config");
    let cfg = dir.path("cfg.json");
    std::fs::write(&cfg, r#"{"grid":{"height":16,"width":8}}"#).unwrap();
    let corpus = dir.path("corpus.jsonl");
    stdout(&run(&["synth", "--count", "1", "--out", &corpus]));
    let text = stdout(&run(&["rasterize", "--in", &corpus, "--config", &cfg]));
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["height"], 16);
    assert_eq!(v["width"], 8);
    assert!(Path::new(&corpus).exists());
}
