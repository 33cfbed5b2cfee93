//! End-to-end tests driving the compiled `wormtrace` binary.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::tempdir;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_wormtrace")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is utf-8")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr is utf-8")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal exit")
}

fn testbed_corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/testbed")
}

fn testbed_file(rel: &str) -> String {
    testbed_corpus().join(rel).to_str().unwrap().to_string()
}

fn file_tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(dir: &Path, root: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in fs::read_dir(dir).expect("readable dir") {
            let path = entry.expect("dir entry").path();
            if path.is_dir() {
                walk(&path, root, out);
            } else {
                let rel = path.strip_prefix(root).expect("under root").to_path_buf();
                out.insert(rel, fs::read(&path).expect("readable file"));
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

fn simulate_into(dir: &Path, extra: &[&str]) {
    let mut args = vec![
        "simulate",
        "--hosts",
        "3",
        "--seed",
        "9",
        "--duration",
        "300",
        "--out",
        dir.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    let out = run(&args);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
}

#[test]
fn parse_emits_one_json_event_per_line() {
    let out = run(&[
        "parse",
        &testbed_file("SAHIB/pfirewall.log"),
        "--type",
        "firewall",
        "--host",
        "SAHIB",
        "--ip",
        "192.168.4.20",
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    assert!(stderr(&out).is_empty());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 6);
    for line in lines {
        let value: serde_json::Value = serde_json::from_str(line).expect("valid JSON");
        assert_eq!(value["kind"], "firewall");
        assert_eq!(value["host"]["name"], "SAHIB");
    }
}

#[test]
fn parse_requires_host_for_host_logs() {
    let out = run(&[
        "parse",
        &testbed_file("SAHIB/security.log"),
        "--type",
        "security",
    ]);
    assert_eq!(exit_code(&out), 1);
    assert!(stderr(&out).contains("--host"), "{}", stderr(&out));
}

#[test]
fn parse_rejects_host_and_year_misuse() {
    let year_on_firewall = run(&[
        "parse",
        &testbed_file("SAHIB/pfirewall.log"),
        "--type",
        "firewall",
        "--host",
        "SAHIB",
        "--year",
        "2009",
    ]);
    assert_eq!(exit_code(&year_on_firewall), 1);
    assert!(stderr(&year_on_firewall).contains("--year"));

    let host_on_ids = run(&[
        "parse",
        &testbed_file("ids/alert.log"),
        "--type",
        "ids",
        "--host",
        "SENSOR",
    ]);
    assert_eq!(exit_code(&host_on_ids), 1);
    assert!(stderr(&host_on_ids).contains("--host"));
}

#[test]
fn parse_missing_file_exits_one() {
    let out = run(&[
        "parse",
        "/nonexistent/pfirewall.log",
        "--type",
        "firewall",
        "--host",
        "X",
    ]);
    assert_eq!(exit_code(&out), 1);
    assert!(stderr(&out).contains("error:"));
}

#[test]
fn parse_strict_exits_two_naming_the_line() {
    let dir = tempdir().unwrap();
    let log = dir.path().join("pfirewall.log");
    let good = fs::read_to_string(testbed_corpus().join("SAHIB/pfirewall.log")).unwrap();
    fs::write(&log, format!("{good}not a firewall line\n")).unwrap();

    let strict = run(&[
        "parse",
        log.to_str().unwrap(),
        "--type",
        "firewall",
        "--host",
        "SAHIB",
        "--strict",
    ]);
    assert_eq!(exit_code(&strict), 2);
    assert!(stderr(&strict).contains("line 11"), "{}", stderr(&strict));
    assert!(stderr(&strict).contains("pfirewall.log"));

    let lenient = run(&[
        "parse",
        log.to_str().unwrap(),
        "--type",
        "firewall",
        "--host",
        "SAHIB",
    ]);
    assert_eq!(exit_code(&lenient), 0);
    assert_eq!(stdout(&lenient).lines().count(), 6);
    assert!(stderr(&lenient).contains("skipped line 11"));
}

#[test]
fn parse_empty_file_emits_nothing_and_succeeds() {
    let dir = tempdir().unwrap();
    let log = dir.path().join("empty.log");
    fs::write(&log, "").unwrap();
    let out = run(&[
        "parse",
        log.to_str().unwrap(),
        "--type",
        "firewall",
        "--host",
        "X",
        "--strict",
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).is_empty());
    assert!(stderr(&out).is_empty());
}

#[test]
fn parse_ids_applies_year_flag() {
    let out = run(&[
        "parse",
        &testbed_file("ids/alert.log"),
        "--type",
        "ids",
        "--year",
        "2009",
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    let first = stdout(&out).lines().next().unwrap().to_string();
    let value: serde_json::Value = serde_json::from_str(&first).unwrap();
    assert_eq!(value["ts"], "2009-09-07T14:41:03.846382");
    assert_eq!(value["message"], "TFTP Get");
}

#[test]
fn analyze_writes_report_summary_and_dot() {
    let dir = tempdir().unwrap();
    let report = dir.path().join("report.json");
    let dot = dir.path().join("graph.dot");
    let out = run(&[
        "analyze",
        "--corpus",
        testbed_corpus().to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
        "--dot",
        dot.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));

    let text = stdout(&out);
    assert!(text.contains("TARMIZI"));
    assert!(text.contains("attacker (origin)"));
    assert!(text.contains("multi-step"));
    assert!(text.contains("victim"));

    let saved: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(saved["schema_version"], 1);
    assert_eq!(saved["hosts"].as_array().unwrap().len(), 3);

    let graph = fs::read_to_string(&dot).unwrap();
    assert!(graph.starts_with("digraph scenario {"));
    assert!(graph.contains("\"TARMIZI\" -> \"SAHIB\""));
}

#[test]
fn analyze_missing_corpus_exits_one() {
    let out = run(&["analyze", "--corpus", "/nonexistent/corpus"]);
    assert_eq!(exit_code(&out), 1);
}

#[test]
fn analyze_empty_corpus_reports_zero_hosts() {
    let dir = tempdir().unwrap();
    fs::write(dir.path().join("manifest.json"), r#"{"hosts": []}"#).unwrap();
    let report = dir.path().join("report.json");
    let out = run(&[
        "analyze",
        "--corpus",
        dir.path().to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("0 host(s)"));
    let saved: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert!(saved["hosts"].as_array().is_none_or(|h| h.is_empty()));
}

#[test]
fn analyze_strict_parse_failure_exits_two() {
    let dir = tempdir().unwrap();
    simulate_into(dir.path(), &[]);
    let log = dir.path().join("NODE02/pfirewall.log");
    let mut text = fs::read_to_string(&log).unwrap();
    text.push_str("truncated garbage\n");
    fs::write(&log, text).unwrap();

    let report = dir.path().join("report.json");
    let strict = run(&[
        "analyze",
        "--corpus",
        dir.path().to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
        "--strict",
    ]);
    assert_eq!(exit_code(&strict), 2, "{}", stderr(&strict));

    let lenient = run(&[
        "analyze",
        "--corpus",
        dir.path().to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&lenient), 0, "{}", stderr(&lenient));
    let saved: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert!(!saved["skipped"].as_array().unwrap().is_empty());
}

#[test]
fn analyze_fail_on_anomaly_exits_three() {
    let dir = tempdir().unwrap();
    simulate_into(dir.path(), &[]);
    let log = dir.path().join("NODE02/pfirewall.log");
    let mut text = fs::read_to_string(&log).unwrap();
    text.push_str("2009-09-07 15:30:00 OPEN TCP 10.9.9.9 10.0.0.5 5555 80\n");
    fs::write(&log, text).unwrap();

    let report = dir.path().join("report.json");
    let plain = run(&[
        "analyze",
        "--corpus",
        dir.path().to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&plain), 0, "{}", stderr(&plain));
    let saved = fs::read_to_string(&report).unwrap();
    assert!(saved.contains("does not match host address"));

    let gated = run(&[
        "analyze",
        "--corpus",
        dir.path().to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
        "--fail-on-anomaly",
    ]);
    assert_eq!(exit_code(&gated), 3);
    assert!(stderr(&gated).contains("anomaly"));
}

#[test]
fn simulate_writes_complete_corpus_tree() {
    let dir = tempdir().unwrap();
    simulate_into(dir.path(), &[]);
    for rel in [
        "manifest.json",
        "ground_truth.json",
        "ids/alert.log",
        "NODE01/pfirewall.log",
        "NODE01/security.log",
        "NODE02/system.log",
        "NODE03/pfirewall.log",
    ] {
        assert!(dir.path().join(rel).is_file(), "missing {rel}");
    }
    let truth: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("ground_truth.json")).unwrap())
            .unwrap();
    assert_eq!(truth["roles"]["NODE01"]["origin"], true);
    assert_eq!(truth["roles"]["NODE01"]["role"], "attacker");
}

#[test]
fn simulate_same_seed_is_byte_identical() {
    let a = tempdir().unwrap();
    let b = tempdir().unwrap();
    simulate_into(a.path(), &[]);
    simulate_into(b.path(), &[]);
    assert_eq!(file_tree(a.path()), file_tree(b.path()));
}

#[test]
fn simulate_refuses_non_empty_dir_without_force() {
    let dir = tempdir().unwrap();
    fs::write(dir.path().join("keep.txt"), "data").unwrap();
    let out = run(&[
        "simulate",
        "--hosts",
        "3",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 1);
    assert!(stderr(&out).contains("--force"), "{}", stderr(&out));

    simulate_into(dir.path(), &["--force"]);
    assert!(dir.path().join("manifest.json").is_file());
    assert_eq!(
        fs::read_to_string(dir.path().join("keep.txt")).unwrap(),
        "data"
    );
}

#[test]
fn simulate_reads_topology_files() {
    let dir = tempdir().unwrap();
    let topology = dir.path().join("topology.json");
    fs::write(
        &topology,
        r#"[
            {"name": "ALPHA", "ip": "172.16.0.1"},
            {"name": "BRAVO", "ip": "172.16.0.2", "vulnerable": false},
            {"name": "CHARLIE", "ip": "172.16.0.3"}
        ]"#,
    )
    .unwrap();
    let corpus = dir.path().join("corpus");
    let out = run(&[
        "simulate",
        "--topology",
        topology.to_str().unwrap(),
        "--attacker",
        "ALPHA",
        "--seed",
        "4",
        "--duration",
        "300",
        "--out",
        corpus.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    let truth: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(corpus.join("ground_truth.json")).unwrap())
            .unwrap();
    assert_eq!(truth["roles"]["ALPHA"]["origin"], true);
    assert!(truth["infection_times"].get("BRAVO").is_none());
    assert!(truth["infection_times"].get("CHARLIE").is_some());
}

#[test]
fn simulate_rejects_hosts_with_topology() {
    let out = run(&[
        "simulate",
        "--hosts",
        "3",
        "--topology",
        "t.json",
        "--out",
        "x",
    ]);
    assert_eq!(exit_code(&out), 1);
}

#[test]
fn report_rerenders_saved_analysis() {
    let dir = tempdir().unwrap();
    let report = dir.path().join("report.json");
    let dot_a = dir.path().join("analyze.dot");
    let dot_b = dir.path().join("report.dot");
    let analyzed = run(&[
        "analyze",
        "--corpus",
        testbed_corpus().to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
        "--dot",
        dot_a.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&analyzed), 0);

    let rendered = run(&[
        "report",
        report.to_str().unwrap(),
        "--dot",
        dot_b.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&rendered), 0, "{}", stderr(&rendered));
    assert_eq!(stdout(&rendered), stdout(&analyzed));
    assert_eq!(
        fs::read_to_string(&dot_a).unwrap(),
        fs::read_to_string(&dot_b).unwrap()
    );
}

#[test]
fn report_rejects_non_report_json() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("not_a_report.json");
    fs::write(&path, r#"{"events": []}"#).unwrap();
    let out = run(&["report", path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 1);
    assert!(stderr(&out).contains("not a report"), "{}", stderr(&out));
}

#[test]
fn help_and_version_exit_zero() {
    let help = run(&["--help"]);
    assert_eq!(exit_code(&help), 0);
    assert!(stdout(&help).contains("analyze"));

    let version = run(&["--version"]);
    assert_eq!(exit_code(&version), 0);
    assert!(stdout(&version).contains("wormtrace"));

    let unknown = run(&["frobnicate"]);
    assert_eq!(exit_code(&unknown), 1);
}
