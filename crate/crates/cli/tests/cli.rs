use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn rosarch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rosarch"))
        .args(args)
        .env_remove("ARCH_RECOVERY_LLM_ENDPOINT")
        .env_remove("ROSARCH_SERVER")
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_succeeds_and_prints_the_digest() {
    let out = tempfile::tempdir().unwrap();
    let o = rosarch(&["run", "--repo", s(&fixture("nested/repo")), "--out", s(out.path()), "--no-llm"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.starts_with("status: ok"), "{stdout}");
    assert!(stdout.contains("manifest digest: "));
    assert!(out.path().join("manifest.json").is_file());
}

#[test]
fn json_format_and_diagnostics_file() {
    let out = tempfile::tempdir().unwrap();
    let diag = out.path().join("diag.jsonl");
    let o = rosarch(&[
        "--format",
        "json",
        "--diagnostics",
        s(&diag),
        "run",
        "--repo",
        s(&fixture("brickbybrick/repo")),
        "--out",
        s(&out.path().join("o")),
        "--no-llm",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["manifest"]["status"], "ok");
    let text = std::fs::read_to_string(diag).unwrap();
    for line in text.lines() {
        let d: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(d["code"].is_string());
    }
}

#[test]
fn input_errors_exit_1() {
    let out = tempfile::tempdir().unwrap();
    let o = rosarch(&["run", "--repo", "/no/such/repo", "--out", s(out.path())]);
    assert_eq!(o.status.code(), Some(1));

    let repo = tempfile::tempdir().unwrap();
    let inside = repo.path().join("out");
    let o = rosarch(&["extract", "--repo", s(repo.path()), "--out", s(&inside)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("inside"));

    let o = rosarch(&["synthesize", "--out", s(out.path())]);
    assert_eq!(o.status.code(), Some(1));

    let o = rosarch(&["resolve-name", "a//b", "--node", "n"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn analysis_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.puml");
    std::fs::write(&bad, "@startuml\n}\n").unwrap();
    let o = rosarch(&["evaluate", "--recovered", s(&bad), "--reference", s(&fixture("nested/reference"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn threshold_exits_3() {
    let out = tempfile::tempdir().unwrap();
    let o = rosarch(&[
        "run",
        "--repo",
        s(&fixture("nested/repo")),
        "--out",
        s(out.path()),
        "--no-llm",
        "--reference",
        s(&fixture("brickbybrick/reference")),
        "--fail-under",
        "0.5",
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stdout));

    let o = rosarch(&[
        "evaluate",
        "--recovered",
        s(out.path()),
        "--reference",
        s(&fixture("nested/reference")),
        "--fail-under",
        "1.0",
    ]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn stages_and_prompt() {
    let out = tempfile::tempdir().unwrap();
    let repo = fixture("nested/repo");
    for args in [
        vec!["extract", "--repo", s(&repo), "--out", s(out.path())],
        vec!["launch-graph", "--repo", s(&repo), "--out", s(out.path()), "--root", "example_pkg/launch/main.launch.py"],
        vec!["synthesize", "--out", s(out.path())],
    ] {
        let o = rosarch(&args);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = rosarch(&["prompt", "--template", "system_architecture_constructor", "--out", s(out.path())]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("ExampleNode"));

    let o = rosarch(&["prompt", "--template", "nope", "--out", s(out.path())]);
    assert_eq!(o.status.code(), Some(1));

    let o = rosarch(&["launch-graph", "--repo", s(&repo), "--out", s(out.path()), "--root", "missing.launch.py"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn resolve_name_prints_remapped_form() {
    let o = rosarch(&["resolve-name", "~/status", "--namespace", "/main", "--node", "Tom", "--remap", "~/status:=/s"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(String::from_utf8(o.stdout).unwrap(), "/main/Tom/status -> /s\n");

    let o = rosarch(&["resolve-name", "x", "--node", "n", "--remap", "broken"]);
    assert_eq!(o.status.code(), Some(1));

    assert_eq!(rosarch(&["--help"]).status.code(), Some(0));
    assert_eq!(rosarch(&["run", "--bogus"]).status.code(), Some(1));
}

#[test]
fn talks_to_a_separate_server() {
    let mut server = Command::new(env!("CARGO_BIN_EXE_rosarch"))
        .args(["serve", "--bind", "127.0.0.1:0"])
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(server.stderr.take().unwrap()).read_line(&mut line).unwrap();
    let url = line.trim().strip_prefix("listening on ").expect("listen banner").to_string();

    let o = rosarch(&["--server", &url, "resolve-name", "reset", "--namespace", "/backup", "--node", "Tom"]);
    server.kill().unwrap();
    let _ = server.wait();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(String::from_utf8(o.stdout).unwrap(), "/backup/reset\n");
}

#[test]
fn unreachable_server_exits_1() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    drop(listener);
    let o = rosarch(&["--server", &url, "resolve-name", "x", "--node", "n"]);
    assert_eq!(o.status.code(), Some(1));
}
