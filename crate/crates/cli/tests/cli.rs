use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

fn strfix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_strfix")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)))
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn detect_flags_the_outlier_player_id() {
    let out = strfix(&["detect", path(&fixture("players.csv")), "--columns", "Player ID"]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["command"], "detect");
    let flagged: Vec<&str> = report["columns"][0]["detections"]
        .as_array()
        .unwrap()
        .iter()
        .map(|d| d["value"].as_str().unwrap())
        .collect();
    assert_eq!(flagged, ["usa_837"]);
    assert!(report["columns"][0]["repairs"].as_array().unwrap().is_empty());
}

#[test]
fn invalid_delta_is_a_usage_error() {
    let out = strfix(&["detect", path(&fixture("players.csv")), "--delta", "1.01"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("delta"));
}

#[test]
fn missing_input_and_unknown_flag_exit_2() {
    assert_eq!(strfix(&["detect", "/definitely/missing.csv"]).status.code(), Some(2));
    assert_eq!(strfix(&["repair", path(&fixture("players.csv")), "--bogus"]).status.code(), Some(2));
}

#[test]
fn repair_suggests_and_applies() {
    let dir = tempfile::tempdir().unwrap();
    let applied = dir.path().join("fixed.csv");
    let out = strfix(&["repair", path(&fixture("players.csv")), "--apply", path(&applied)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&out);
    let col = report["columns"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["column"] == "Player ID")
        .unwrap();
    assert_eq!(col["repairs"][0]["suggestions"][0]["repaired"], "US-837-PRO");
    let written = std::fs::read_to_string(&applied).unwrap();
    assert!(written.contains("US-837-PRO"));
    assert!(!written.contains("usa_837"));
}

#[test]
fn reports_are_reproducible_and_job_independent() {
    let input = fixture("players.csv");
    let a = strfix(&["repair", path(&input), "--jobs", "1"]);
    let b = strfix(&["repair", path(&input), "--jobs", "4"]);
    assert_eq!(a.stdout, b.stdout);
    assert!(!a.stdout.is_empty());
}

#[test]
fn no_abstraction_leaves_no_mask_tokens() {
    let out = strfix(&["repair", path(&fixture("players.csv")), "--semantic", "no-abstraction"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(!text.contains("{country"));
    assert!(!text.contains('\u{27e6}'));
    assert!(text.contains("\"semantic\": \"no_abstraction\""));
}

#[test]
fn weights_and_top_n_are_echoed() {
    let out = strfix(&["repair", path(&fixture("players.csv")), "--weights", "-1,0,0,0", "--top-n", "2"]);
    let report = json(&out);
    assert_eq!(report["config"]["weights"]["coverage"], 0.0);
    assert_eq!(report["config"]["top_n"], 2);
    assert_eq!(
        strfix(&["repair", path(&fixture("players.csv")), "--weights", "1,2"]).status.code(),
        Some(2)
    );
}

#[test]
fn exec_repair_reports_both_modes() {
    let out = strfix(&[
        "exec-repair",
        "--input",
        path(&fixture("codes.csv")),
        "--formula",
        "=SEARCH(\"-\",[@Code])",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    let runs = report["exec"]["runs"].as_array().unwrap();
    assert_eq!(runs[0]["mode"], "guided");
    assert_eq!(runs[0]["verification"]["formula_success"], true);
    assert_eq!(runs[1]["mode"], "unsupervised");
    assert_eq!(runs[1]["verification"]["formula_success"], false);
    assert_eq!(report["exec"]["before"]["formula_success"], false);
}

#[test]
fn exec_repair_rejects_unknown_column() {
    let out = strfix(&[
        "exec-repair",
        "--input",
        path(&fixture("dashes.csv")),
        "--formula",
        "=SEARCH(\"-\",[@nope])",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exec_repair_task_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(fixture("dashes.csv"), dir.path().join("dashes.csv")).unwrap();
    let tasks = dir.path().join("tasks.jsonl");
    std::fs::write(
        &tasks,
        "{\"formula\":\"=SEARCH(\\\"-\\\",[@col1])\",\"table\":\"dashes.csv\",\"target_output_column\":\"out\"}\n\
         {\"formula\":\"=CONCAT(\\\"x\\\",[@a])\",\"table\":\"a\\nq\\nr\\n\",\"target_output_column\":\"out\"}\n",
    )
    .unwrap();
    let out = strfix(&["exec-repair", "--tasks", path(&tasks)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let reports = json(&out);
    assert_eq!(reports.as_array().unwrap().len(), 2);
    assert_eq!(reports[0]["exec"]["runs"][0]["verification"]["cell_success_rate"], 1.0);
}

#[test]
fn corrupt_is_deterministic_and_logged() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str, rate: &str| {
        let out_csv = dir.path().join(format!("{tag}.csv"));
        let log = dir.path().join(format!("{tag}.log.json"));
        let out = strfix(&[
            "corrupt",
            "--in",
            path(&fixture("players.csv")),
            "--out",
            path(&out_csv),
            "--log",
            path(&log),
            "--seed",
            "7",
            "--rate",
            rate,
        ]);
        assert_eq!(out.status.code(), Some(0));
        (std::fs::read(&out_csv).unwrap(), std::fs::read_to_string(&log).unwrap())
    };
    let a = run("a", "0.5");
    let b = run("b", "0.5");
    assert_eq!(a, b);
    let log: Value = serde_json::from_str(&a.1).unwrap();
    assert!(!log["entries"].as_array().unwrap().is_empty());

    let (clean, log) = run("c", "0");
    let original = std::fs::read_to_string(fixture("players.csv")).unwrap();
    assert_eq!(String::from_utf8(clean).unwrap().trim_end(), original.trim_end());
    let log: Value = serde_json::from_str(&log).unwrap();
    assert!(log["entries"].as_array().unwrap().is_empty());
}

#[test]
fn bench_sweep_over_a_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let out = strfix(&[
        "corrupt",
        "--in",
        path(&fixture("players.csv")),
        "--out",
        path(&dir.path().join("players.csv")),
        "--log",
        path(&dir.path().join("players.log.json")),
        "--seed",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rows_json = dir.path().join("rows.json");
    let out = strfix(&["bench", path(dir.path()), "--mode", "sweep", "--out", path(&rows_json)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 6);
    let rows: Value = serde_json::from_str(&std::fs::read_to_string(rows_json).unwrap()).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 5);
    assert!(rows[0]["score"]["recall"].as_f64().is_some());
}

#[test]
fn bench_rejects_empty_corpus() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(strfix(&["bench", path(dir.path())]).status.code(), Some(2));
}

#[test]
fn headerless_input_gets_synthetic_names() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("raw.csv");
    std::fs::write(&input, "c-1\nc-2\nc-3\nc-4\nc-5\nc-6\nc7\n").unwrap();
    let applied = dir.path().join("fixed.csv");
    let out = strfix(&["repair", path(&input), "--no-header", "--apply", path(&applied)]);
    let report = json(&out);
    assert_eq!(report["columns"][0]["column"], "col1");
    let written = std::fs::read_to_string(&applied).unwrap();
    assert!(written.starts_with("c-1\n"), "{written}");
    assert!(written.contains("c-7"));
}
