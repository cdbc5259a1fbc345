use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_medsacks")).args(args).output().expect("binary runs")
}

/// Runs with `--out` into a fresh directory; returns the exit code and report.
fn run_report(args: &[&str]) -> (i32, Value, String) {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let mut full: Vec<&str> = args.to_vec();
    full.extend(["--out", out.to_str().unwrap()]);
    let output = run(&full);
    let code = output.status.code().unwrap();
    let report = std::fs::read_to_string(&out).map(|s| serde_json::from_str(&s).unwrap()).unwrap_or(Value::Null);
    (code, report, String::from_utf8(output.stdout).unwrap())
}

fn write_temp(dir: &tempfile::TempDir, name: &str, body: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

fn check_names(report: &Value) -> Vec<String> {
    report["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap().to_owned()).collect()
}

#[test]
fn selftest_passes() {
    let (code, report, stdout) = run_report(&["orders-selftest", "--max", "1000"]);
    assert_eq!(code, 0);
    assert_eq!(report["command"], "orders-selftest");
    assert_eq!(check_names(&report), ["delta", "node-index", "seq-code", "pair-code"]);
    assert_eq!(report["result"]["roundTrips"], 4000);
    assert!(stdout.starts_with("orders-selftest: PASS"));
}

#[test]
fn echo_trace_has_every_node_to_depth_six() {
    let echo = data("echo.json");
    let (code, report, _) = run_report(&["catch-single", "--code", echo.to_str().unwrap(), "--depth", "6"]);
    assert_eq!(code, 0);
    let rows = report["result"]["trace"].as_array().unwrap();
    assert_eq!(rows.len(), (1 << 7) - 1);
    assert_eq!(rows[0]["c"], "");
    let indices: Vec<u64> = rows.iter().map(|r| r["index"].as_u64().unwrap()).collect();
    assert_eq!(indices, (0..127).collect::<Vec<_>>());
}

#[test]
fn malformed_code_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_temp(&dir, "bad.json", r#"{"states": [0], "start": 0, "trans": [{"from": 0}]}"#);
    let output = run(&["catch-single", "--code", &bad]);
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8(output.stderr).unwrap().contains("missing field"));
    let missing = run(&["validate-code", "--code", "/nonexistent/code.json"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn silent_cycle_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let silent = write_temp(
        &dir,
        "silent.json",
        r#"{"states": [0], "start": 0, "trans": [
            {"from": 0, "bit": 0, "to": 0, "out": []},
            {"from": 0, "bit": 1, "to": 0, "out": [1]}]}"#,
    );
    let (code, report, stdout) = run_report(&["validate-code", "--code", &silent]);
    assert_eq!(code, 1);
    assert_eq!(report["checks"][0]["name"], "cycle-emission");
    assert!(report["checks"][0]["witness"].is_string());
    assert!(stdout.contains("FAIL"));
}

#[test]
fn exhausted_search_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_temp(
        &dir,
        "stuck.json",
        r#"{"arity": 1,
            "code": {"states": [0], "start": 0, "trans": [
                {"from": 0, "bit": 0, "to": 0, "out": [0]},
                {"from": 0, "bit": 1, "to": 0, "out": [0]}]},
            "family": [{"kind": "constant", "params": {"value": 0}, "certBound": 0}],
            "searchCap": 4, "depth": 2}"#,
    );
    let output = run(&["catch-product", "--manifest", &manifest]);
    assert_eq!(output.status.code(), Some(3));
}

#[test]
fn product_run_reports_h0_and_fronts() {
    let manifest = data("product.json");
    let (code, report, _) = run_report(&["catch-product", "--manifest", manifest.to_str().unwrap()]);
    assert_eq!(code, 0, "{report}");
    let h0 = report["result"]["h0"].as_array().unwrap();
    let fronts = report["result"]["frontTraces"].as_array().unwrap();
    assert_eq!(h0.len(), fronts.len());
    // stage n has 2^(n·min(n,2)) front tuples
    assert_eq!(fronts.len(), 1 + 2 + 16 + 64);
    for name in ["certificates", "catches", "injective", "avoidance", "front", "fusion", "branch-agreement"] {
        assert!(check_names(&report).iter().any(|n| n == name), "{name}");
    }
}

#[test]
fn greedy_verifies_each_stage() {
    let manifest = data("greedy.json");
    let (code, report, stdout) = run_report(&["greedy", "--manifest", manifest.to_str().unwrap()]);
    assert_eq!(code, 0, "{report}");
    assert_eq!(report["result"]["stages"].as_array().unwrap().len(), 2);
    let names = check_names(&report);
    assert!(names.iter().any(|n| n == "stage 1 avoidance"));
    assert!(names.iter().any(|n| n == "family certificates"));
    assert!(stdout.contains("family of 4"));
}

#[test]
fn encode_then_decode_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let input = data("encode.json");
    let (code, report, _) = run_report(&["encode", "--input", input.to_str().unwrap(), "--len", "12"]);
    assert_eq!(code, 0);
    let h: Vec<u64> = serde_json::from_value(report["result"]["h"].clone()).unwrap();
    assert_eq!(h, (0..12).map(|n| 3 * n + 1).collect::<Vec<_>>());

    let prefix = serde_json::to_string(&report["result"]["prefix"]).unwrap();
    let table = write_temp(&dir, "prefix.json", &prefix);
    let (code, decoded, _) = run_report(&["decode", "--input", &table]);
    assert_eq!(code, 0);
    assert_eq!(decoded["result"]["h"], serde_json::json!(h[..11]));
    assert_eq!(decoded["result"]["z"], Value::from(&report["result"]["z"].as_array().unwrap()[..11]));

    let mut entries: Vec<String> = serde_json::from_str(&prefix).unwrap();
    entries.swap(3, 5);
    let swapped = write_temp(&dir, "swapped.json", &serde_json::to_string(&entries).unwrap());
    let (code, report, _) = run_report(&["decode", "--input", &swapped]);
    assert_eq!(code, 1);
    assert_eq!(report["checks"][0]["status"], "fail");
    assert!(report["result"].is_null());
}

#[test]
fn ned_instance_builds_and_verifies() {
    let instance = data("ned.json");
    let (code, report, _) = run_report(&["ned", "--instance", instance.to_str().unwrap()]);
    assert_eq!(code, 0, "{report}");
    let h = report["result"]["h"].as_array().unwrap();
    assert_eq!(h.len(), 120);
    let agreements: Vec<u64> = serde_json::from_value(report["result"]["N"].clone()).unwrap();
    let f = [0, 1, 2];
    for n in agreements {
        assert_eq!(h[n as usize], f[n as usize % 3]);
    }
}

#[test]
fn broken_certificate_fails_preconditions() {
    let dir = tempfile::tempdir().unwrap();
    let instance = write_temp(
        &dir,
        "ned.json",
        r#"{"f": {"kind": "constant", "params": {"value": 3}},
            "family": [{"fn": {"kind": "table", "params": {"values": [0, 0, 3], "default": 0}}, "B": 1}],
            "hStar": {"kind": "constant", "params": {"value": 3}},
            "gStar": {"kind": "affine", "params": {"mul": 5, "add": 0}},
            "horizon": 20}"#,
    );
    let (code, report, _) = run_report(&["ned", "--instance", &instance]);
    assert_eq!(code, 1);
    assert_eq!(report["checks"][0]["name"], "preconditions");
    assert!(report["checks"][0]["witness"].as_str().unwrap().contains("n = 2"));
}

#[test]
fn tree_and_code_validation() {
    let tree = data("tree.json");
    let (code, report, _) = run_report(&["validate-tree", "--tree", tree.to_str().unwrap(), "--depth", "6"]);
    assert_eq!(code, 0);
    assert_eq!(report["result"]["stem"], "01");
    let echo = data("echo.json");
    let (code, report, _) = run_report(&["validate-code", "--code", echo.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(report["result"]["modulus"][3], 3);
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let manifest = data("product.json");
    let dir = tempfile::tempdir().unwrap();
    let outs: Vec<Vec<u8>> = (0..2)
        .map(|i| {
            let out = dir.path().join(format!("r{i}.json"));
            let status =
                run(&["catch-product", "--manifest", manifest.to_str().unwrap(), "--out", out.to_str().unwrap()]);
            assert_eq!(status.status.code(), Some(0));
            std::fs::read(out).unwrap()
        })
        .collect();
    assert_eq!(outs[0], outs[1]);
    let stdout = run(&["orders-selftest", "--max", "50"]).stdout;
    assert_eq!(stdout, run(&["orders-selftest", "--max", "50"]).stdout);
}
