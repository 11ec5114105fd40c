use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn missview() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_missview"));
    cmd.env_remove("MISSVIEW_STYLE");
    cmd
}

fn run(args: &[&str]) -> Output {
    missview().args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_owned()
}

/// Deterministic numeric table with `n` rows over columns A..=letters.
fn write_numeric(dir: &Path, name: &str, columns: &[&str], n: usize) -> PathBuf {
    let mut text = columns.join(",");
    text.push('\n');
    let mut state = 12345u64;
    for _ in 0..n {
        let row: Vec<String> = columns
            .iter()
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                format!("{}", (state >> 40) % 1000)
            })
            .collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn six_variable(dir: &Path) -> PathBuf {
    let p = dir.join("six.csv");
    let mut text = String::from("x1,x2,x3,x4,x5,x6\n");
    for i in 0..50 {
        let row: Vec<String> = (0..6)
            .map(|v| {
                if v > 0 && (i * (v + 1)) % 7 == 0 {
                    "NaN".to_owned()
                } else {
                    ((i * 13 + v * 5) % 41).to_string()
                }
            })
            .collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn stats_complete_dataset_is_all_zero() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_numeric(dir.path(), "full.csv", &["a", "b", "c"], 20);
    let out = run(&["stats", input.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["variables"].as_array().unwrap().iter().all(|v| v["am"] == 0.0));
    assert!(report["pairs"].as_array().unwrap().iter().all(|p| p["jm"] == 0.0 && p["deviation"] == 0.0));
    assert!(report["cm"].as_array().unwrap().iter().all(|c| c["defined"] == false && c["divergence"].is_null()));
}

#[test]
fn stats_select_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let input = six_variable(dir.path());
    let input = input.to_str().unwrap();
    let out = run(&["stats", input, "--select", "x3", "--bins", "5"]);
    assert_eq!(code(&out), 0);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["cm"].as_array().unwrap().len(), 5);

    let out = run(&["stats", input, "--format", "table", "--top", "3"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("pairs by |jm - expected| (top 3)"));
    assert!(text.lines().any(|l| l.starts_with("x6 ")));

    let out = run(&["stats", input, "--select", "nope"]);
    assert_eq!(code(&out), 2);
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope"));
}

#[test]
fn usage_and_data_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["stats"])), 1);
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["stats", &path(dir.path(), "missing.csv")])), 2);
    let input = write_numeric(dir.path(), "t.csv", &["a"], 3);
    assert_eq!(code(&run(&["stats", input.to_str().unwrap(), "--delimiter", "ab"])), 1);
    assert_eq!(code(&run(&["stats", input.to_str().unwrap(), "--bins", "0"])), 1);
    fs::write(dir.path().join("ragged.csv"), "a,b\n1\n").unwrap();
    let out = run(&["stats", &path(dir.path(), "ragged.csv")]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 2"));
}

#[test]
fn render_layouts() {
    let dir = tempfile::tempdir().unwrap();
    let input = six_variable(dir.path());
    let input = input.to_str().unwrap();
    let svg = path(dir.path(), "out.svg");

    assert_eq!(code(&run(&["render", input, "--out", &svg])), 0);
    let text = fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<?xml"));
    assert!(!text.contains("class=\"arc\""));

    let out = run(&["render", input, "--layout", "radial", "--out", &svg]);
    assert_eq!(code(&out), 1);
    assert_eq!(code(&run(&["render", input, "--layout", "radial", "--select", "x2", "--out", &svg])), 0);
    let text = fs::read_to_string(&svg).unwrap();
    assert_eq!(text.matches("class=\"frame\"").count(), 5);
    assert_eq!(text.matches("class=\"frame selected\"").count(), 1);

    let args = ["render", input, "--layout", "heatmap", "--select", "x4", "--attach-glyphs", "--out", &svg];
    assert_eq!(code(&run(&args)), 0);
    let text = fs::read_to_string(&svg).unwrap();
    assert!(text.contains("class=\"cell\"") && text.contains("class=\"cell missing\""));
    assert!(text.contains("class=\"frame selected\"") && text.contains("class=\"grey-bar\""));

    fs::write(dir.path().join("cat.csv"), "a,b\n1,u\n2,v\n").unwrap();
    let out = run(&["render", &path(dir.path(), "cat.csv"), "--layout", "pc", "--out", &svg]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("categorical"));
}

#[test]
fn render_style_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let input = six_variable(dir.path());
    let style = dir.path().join("style.json");
    fs::write(&style, r##"{"viewport": {"width": 400, "height": 300}, "show_labels": false, "palette": {"am": "#123456"}}"##).unwrap();
    let svg = path(dir.path(), "styled.svg");
    let out = missview()
        .args(["render", input.to_str().unwrap(), "--out", &svg])
        .env("MISSVIEW_STYLE", &style)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&svg).unwrap();
    assert!(text.contains(r#"width="400.000" height="300.000""#));
    assert!(text.contains("#123456"));
    assert!(!text.contains("<text"));

    fs::write(&style, r#"{"viewport": {"width": -1, "height": 3}}"#).unwrap();
    let out = run(&["render", input.to_str().unwrap(), "--out", &svg, "--style", style.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
}

#[test]
fn synth_zero_rate_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_numeric(dir.path(), "in.csv", &["A", "B"], 30);
    let out_csv = path(dir.path(), "out.csv");
    let out = run(&["synth", input.to_str().unwrap(), "--mcar", "*=0.0", "--seed", "1", "--out", &out_csv]);
    assert_eq!(code(&out), 0);
    assert_eq!(fs::read(&input).unwrap(), fs::read(&out_csv).unwrap());
}

#[test]
fn synth_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_numeric(dir.path(), "in.csv", &["A", "B", "C"], 200);
    let input = input.to_str().unwrap();
    let mut manifests = Vec::new();
    for i in 0..2 {
        let csv = path(dir.path(), &format!("o{i}.csv"));
        let json = path(dir.path(), &format!("m{i}.json"));
        let out = run(&["synth", input, "--cm", "A,B,0.5", "--seed", "7", "--out", &csv, "--manifest", &json]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        manifests.push((fs::read(&csv).unwrap(), fs::read(&json).unwrap()));
    }
    assert_eq!(manifests[0], manifests[1]);
    let manifest: Value = serde_json::from_slice(&manifests[0].1).unwrap();
    assert_eq!(manifest["seed"], 7);
}

#[test]
fn synth_mcar_pair_gives_quarter_joint_missing() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_numeric(dir.path(), "big.csv", &["A", "B"], 10_000);
    let csv = path(dir.path(), "out.csv");
    let out = run(&["synth", input.to_str().unwrap(), "--mcar", "A=0.5,B=0.5", "--seed", "3", "--out", &csv]);
    assert_eq!(code(&out), 0);
    let stats = run(&["stats", &csv]);
    let report: Value = serde_json::from_slice(&stats.stdout).unwrap();
    let jm = report["pairs"][0]["jm"].as_f64().unwrap();
    assert!((jm - 0.25).abs() <= 0.02, "jm = {jm}");
}

#[test]
fn synth_manifest_matches_stats() {
    let dir = tempfile::tempdir().unwrap();
    let cars = ["mpg", "cylinders", "displacement", "horsepower", "weight", "acceleration", "year"];
    let input = write_numeric(dir.path(), "cars.csv", &cars, 392);
    let plan = dir.path().join("plan.json");
    fs::write(
        &plan,
        r#"{"seed": 11, "steps": [
            {"type": "mcar", "variable": "mpg", "rate": 0.2},
            {"type": "mcar", "variable": "weight", "rate": 0.35},
            {"type": "base_random", "rate": 0.05}
        ]}"#,
    )
    .unwrap();
    let csv = path(dir.path(), "out.csv");
    let json = path(dir.path(), "manifest.json");
    let args = ["synth", input.to_str().unwrap(), "--plan", plan.to_str().unwrap(), "--out", &csv, "--manifest", &json];
    assert_eq!(code(&run(&args)), 0);
    let manifest: Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    let mut removed = std::collections::HashMap::<String, usize>::new();
    for step in manifest["steps"].as_array().unwrap() {
        for cell in step["removed"].as_array().unwrap() {
            *removed.entry(cell["variable"].as_str().unwrap().to_owned()).or_default() += 1;
        }
    }
    let report: Value = serde_json::from_slice(&run(&["stats", &csv]).stdout).unwrap();
    for v in report["variables"].as_array().unwrap() {
        let expected = removed.get(v["name"].as_str().unwrap()).copied().unwrap_or(0) as f64 / 392.0;
        assert_eq!(v["am"].as_f64().unwrap(), expected);
    }
}

#[test]
fn synth_rejects_bad_plans() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_numeric(dir.path(), "in.csv", &["A", "B"], 10);
    let input = input.to_str().unwrap();
    let csv = path(dir.path(), "out.csv");
    for bad in [
        vec!["--mcar", "A"],
        vec!["--mcar", "Z=0.1"],
        vec!["--cm", "A,A,0.5"],
        vec!["--cm", "A,B"],
    ] {
        let mut args = vec!["synth", input, "--out", &csv];
        args.extend(bad.iter().copied());
        assert_eq!(code(&run(&args)), 1, "{bad:?}");
    }
    let plan = dir.path().join("plan.json");
    fs::write(&plan, r#"{"seed": 1, "steps": [{"type": "mcar", "variable": "A", "rate": 0.9}]}"#).unwrap();
    assert_eq!(code(&run(&["synth", input, "--plan", plan.to_str().unwrap(), "--out", &csv])), 1);
    assert_eq!(code(&run(&["synth", input, "--out", &csv])), 1);
    // never overwrite the input
    assert_eq!(code(&run(&["synth", input, "--mcar", "*=0.1", "--out", input])), 1);
}

fn http_get(addr: &str, target: &str) -> (u16, String) {
    let mut stream = TcpStream::connect(addr).unwrap();
    write!(stream, "GET {target} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n").unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).unwrap();
    let status = response[9..12].parse().unwrap();
    let body = response.split_once("\r\n\r\n").map(|(_, b)| b.to_owned()).unwrap_or_default();
    (status, body)
}

#[test]
fn serve_answers_requests() {
    let dir = tempfile::tempdir().unwrap();
    six_variable(dir.path());
    let mut child = missview()
        .args(["serve", "--data", dir.path().to_str().unwrap(), "--port", "0"])
        .stderr(Stdio::piped())
        .stdout(Stdio::null())
        .spawn()
        .unwrap();
    let mut stderr = BufReader::new(child.stderr.take().unwrap());
    let mut line = String::new();
    let addr = loop {
        line.clear();
        assert!(stderr.read_line(&mut line).unwrap() > 0, "server exited early");
        if let Some(rest) = line.trim().strip_prefix("listening on http://") {
            break rest.to_owned();
        }
    };
    let (status, body) = http_get(&addr, "/health");
    assert_eq!(status, 200);
    assert!(body.contains("\"ok\""));
    let (status, _) = http_get(&addr, "/datasets/six/stats");
    assert_eq!(status, 200);
    let (status, _) = http_get(&addr, "/datasets/six/scene?layout=radial");
    assert_eq!(status, 400);
    child.kill().unwrap();
    child.wait().unwrap();
}

#[test]
fn serve_reports_bind_failure() {
    let taken = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let port = taken.local_addr().unwrap().port().to_string();
    let out = run(&["serve", "--port", &port]);
    assert_eq!(code(&out), 2);
}
