use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn wfaudit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wfaudit"))
        .args(args)
        .env_remove("WFAUDIT_TOKEN")
        .env_remove("GITHUB_TOKEN")
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn workflow_dir(files: &[(&str, &str)]) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    for (name, text) in files {
        std::fs::write(dir.path().join(name), text).unwrap();
    }
    dir
}

fn scan_json(dir: &Path) -> (Option<i32>, Value) {
    let out = wfaudit(&[
        "scan",
        "--mode",
        "workflows",
        "--input",
        path(dir),
        "--output",
        "-",
        "--no-timestamp",
    ]);
    let report = serde_json::from_slice(&out.stdout).expect("json on stdout");
    (out.status.code(), report)
}

const CLEAN: &str = "on: push\njobs:\n  a:\n    permissions:\n      contents: read\n    steps:\n      - run: make\n";

#[test]
fn exit_codes_follow_the_worst_finding() {
    let clean = workflow_dir(&[("ok.yml", CLEAN)]);
    assert_eq!(scan_json(clean.path()).0, Some(0));

    let misconfigured = workflow_dir(&[(
        "m.yml",
        "on: push\njobs:\n  a:\n    steps:\n      - run: make\n",
    )]);
    let (code, report) = scan_json(misconfigured.path());
    assert_eq!(code, Some(1));
    assert_eq!(report["aggregates"]["misconfigurations"], 1);

    let vulnerable = workflow_dir(&[(
        "v.yml",
        &std::fs::read_to_string(fixtures().join("examples/issue_title.yml")).unwrap(),
    )]);
    assert_eq!(scan_json(vulnerable.path()).0, Some(2));
}

#[test]
fn configuration_errors_exit_3() {
    assert_eq!(
        wfaudit(&["scan", "--input", "/nonexistent/dir"])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(wfaudit(&["scan", "--bogus-flag"]).status.code(), Some(3));
    assert_eq!(wfaudit(&["--help"]).status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("scores.yml");
    std::fs::write(&table, "issues: 7\n").unwrap();
    let out = wfaudit(&["score-table", "--score-table", path(&table)]);
    assert_eq!(out.status.code(), Some(3));
    std::fs::write(&table, "issues: [1\n").unwrap();
    let wf = workflow_dir(&[("ok.yml", CLEAN)]);
    let out = wfaudit(&[
        "scan",
        "--mode",
        "workflows",
        "--input",
        path(wf.path()),
        "--score-table",
        path(&table),
        "--output",
        "-",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("score table"));
}

#[test]
fn score_table_overrides_are_marked() {
    let out = wfaudit(&["score-table"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("push 1 ")));
    assert!(text.lines().any(|l| l.starts_with("issues 3 ")));

    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("scores.yml");
    std::fs::write(&table, "issues: 2\n\"pull_request/opened\": 1\n").unwrap();
    let out = wfaudit(&["score-table", "--score-table", path(&table)]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(
        text.lines().any(|l| l.starts_with("issues 2 (override)")),
        "{text}"
    );

    // The override changes the score carried by findings.
    let wf = workflow_dir(&[(
        "v.yml",
        &std::fs::read_to_string(fixtures().join("examples/issue_title.yml")).unwrap(),
    )]);
    let out = wfaudit(&[
        "scan",
        "--mode",
        "workflows",
        "--input",
        path(wf.path()),
        "--score-table",
        path(&table),
        "--output",
        "-",
    ]);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let entry = report["workflows"]
        .as_object()
        .unwrap()
        .values()
        .next()
        .unwrap();
    assert_eq!(entry["issues"][0][6], 2);
}

#[test]
fn repo_list_scans_each_listed_repository() {
    let out = wfaudit(&[
        "scan",
        "--repos",
        path(&fixtures().join("repos.txt")),
        "--fixtures",
        path(&fixtures().join("forge")),
        "--output",
        "-",
        "--no-timestamp",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let keys: Vec<&String> = report["workflows"].as_object().unwrap().keys().collect();
    assert_eq!(
        keys,
        [
            "fixture-org/alpha:.github/workflows/ci.yml",
            "fixture-org/alpha:.github/workflows/release.yaml",
            "fixture-org/epsilon:.github/workflows/a.yml",
            "fixture-org/epsilon:.github/workflows/b.yml",
            "fixture-org/gamma:.github/workflows/lint.yml",
        ]
    );
    // The malformed file is reported, not fatal.
    let errors = report["errors"].as_array().unwrap();
    assert_eq!(errors.len(), 1);
    assert_eq!(
        errors[0]["target"],
        "fixture-org/epsilon:.github/workflows/c.yaml"
    );
    assert_eq!(report["graph"]["repositories"].as_array().unwrap().len(), 3);
    assert!(report["graph"]["edges"].as_array().unwrap().is_empty());
}

#[test]
fn project_scan_walks_dependencies_and_isolates_failures() {
    let dir = tempfile::tempdir().unwrap();
    let out_file = dir.path().join("report.json");
    let out = wfaudit(&[
        "scan",
        "--input",
        path(&fixtures().join("project")),
        "--fixtures",
        path(&fixtures().join("forge")),
        "--output",
        path(&out_file),
        "--no-timestamp",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let summary = String::from_utf8_lossy(&out.stderr);
    assert!(summary.contains("Scanned 4 workflow(s)"), "{summary}");

    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out_file).unwrap()).unwrap();
    let graph = &report["graph"];
    let depths: Vec<(String, u64)> = graph["repositories"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| {
            (
                r["repository"].as_str().unwrap().to_string(),
                r["depth"].as_u64().unwrap(),
            )
        })
        .collect();
    assert!(depths.contains(&("github.com/fixture-org/gamma".into(), 2)));
    assert!(depths.contains(&("github.com/fixture-org/beta".into(), 1)));
    assert_eq!(graph["partial"], true);
    let unresolved: Vec<&str> = graph["unresolved_packages"]
        .as_array()
        .unwrap()
        .iter()
        .map(|u| u["package"].as_str().unwrap())
        .collect();
    assert_eq!(unresolved, ["no-meta", "unknown-pkg"]);
    // The repository without recorded responses is an error entry; the rest
    // of the scan still completes.
    assert_eq!(report["errors"][0]["target"], "fixture-org/delta");
    let lint: Vec<&str> = report["workflows"]["fixture-org/gamma:.github/workflows/lint.yml"]
        ["issues"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| t[0].as_str().unwrap())
        .collect();
    assert_eq!(lint, ["MISCONF_PERM_DEFAULT", "CI_PR_TITLE"]);
}

#[test]
fn text_format_summarizes() {
    let wf = workflow_dir(&[(
        "v.yml",
        &std::fs::read_to_string(fixtures().join("examples/stale_pins.yml")).unwrap(),
    )]);
    let out = wfaudit(&[
        "scan",
        "--mode",
        "workflows",
        "--input",
        path(wf.path()),
        "--format",
        "text",
        "--fixtures",
        path(&fixtures().join("forge")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(
        text.contains("5 issues: 1 vulnerability, 4 misconfigurations"),
        "{text}"
    );
    assert!(text.contains("workflow level only        100.0%"), "{text}");
}

#[test]
fn token_never_reaches_the_report() {
    let wf = workflow_dir(&[("ok.yml", CLEAN)]);
    let out = Command::new(env!("CARGO_BIN_EXE_wfaudit"))
        .args([
            "scan",
            "--mode",
            "workflows",
            "--input",
            path(wf.path()),
            "--output",
            "-",
        ])
        .env("WFAUDIT_TOKEN", "ghp_secretvalue123")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(!String::from_utf8_lossy(&out.stdout).contains("ghp_secretvalue123"));
    assert!(!String::from_utf8_lossy(&out.stderr).contains("ghp_secretvalue123"));
}
