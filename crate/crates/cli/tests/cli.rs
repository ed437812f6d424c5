use std::net::{TcpListener, TcpStream};
use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use hemac_server::{read_frame, write_frame};

fn hemac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hemac")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = hemac(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn list_scenarios_prints_registry() {
    let text = ok(&["list-scenarios"]);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 12);
    assert!(lines.iter().any(|l| l.starts_with("complex_fleet_20q3o5p ")));
}

#[test]
fn run_csv_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        ok(&["run", "--scenario", "simple_fleet_1q1o", "--policy", "random", "--episodes", "4", "--seed", "10", "--out", p.to_str().unwrap()]);
    }
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    let text = String::from_utf8(bytes).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "scenario,seed,team_return,reaches,retrieves,collision_steps,oob_steps,wall_time_s");
    let seeds: Vec<&str> = lines.map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(seeds, ["10", "11", "12", "13"]);
}

#[test]
fn run_to_stdout_with_padding() {
    let text = ok(&["run", "--scenario", "fleet_3q1o", "--policy", "heuristic", "--episodes", "1", "--padded"]);
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn unknown_scenario_fails() {
    let out = hemac(&["run", "--scenario", "nope", "--episodes", "1"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope"));
}

fn record_one(dir: &Path) -> std::path::PathBuf {
    ok(&["run", "--scenario", "simple_fleet_1q1o", "--episodes", "1", "--seed", "3", "--record", dir.to_str().unwrap(), "--out", dir.join("m.csv").to_str().unwrap()]);
    dir.join("simple_fleet_1q1o_3.replay")
}

#[test]
fn record_verify_and_detect_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let replay = record_one(dir.path());
    let text = ok(&["replay", "--file", replay.to_str().unwrap(), "--verify"]);
    assert!(text.contains("4000 records"));
    assert!(text.trim_end().ends_with("verified"));

    let body = std::fs::read_to_string(&replay).unwrap();
    let mut lines: Vec<String> = body.lines().map(String::from).collect();
    let mut rec: serde_json::Value = serde_json::from_str(&lines[500]).unwrap();
    let v = rec["value"].as_array().unwrap()[0].as_f64().unwrap();
    rec["value"][0] = serde_json::json!(if v > 0.0 { -0.9 } else { 0.9 });
    lines[500] = rec.to_string();
    std::fs::write(&replay, lines.join("\n") + "\n").unwrap();
    let out = hemac(&["replay", "--file", replay.to_str().unwrap(), "--verify"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("MISMATCH"));
}

#[test]
fn render_frames_from_replay() {
    let dir = tempfile::tempdir().unwrap();
    let replay = record_one(dir.path());
    let frames = dir.path().join("frames");
    let again = dir.path().join("again");
    let text = ok(&["render", "--file", replay.to_str().unwrap(), "--out", frames.to_str().unwrap(), "--every", "200"]);
    assert!(text.starts_with("wrote 10 frames"));
    ok(&["render", "--file", replay.to_str().unwrap(), "--out", again.to_str().unwrap(), "--every", "200"]);
    let svg = std::fs::read_to_string(frames.join("frame_000200.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(!svg.contains("\"red\"") && !svg.contains("\"blue\"") && !svg.contains("\"grey\""));
    assert_eq!(svg, std::fs::read_to_string(again.join("frame_000200.svg")).unwrap());
}

#[test]
fn serve_answers_hello() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let addr = format!("127.0.0.1:{port}");
    let mut child = Command::new(env!("CARGO_BIN_EXE_hemac")).args(["serve", "--bind", &addr]).spawn().unwrap();
    let deadline = Instant::now() + Duration::from_secs(20);
    let mut stream = loop {
        match TcpStream::connect(&addr) {
            Ok(s) => break s,
            Err(_) if Instant::now() < deadline => std::thread::sleep(Duration::from_millis(50)),
            Err(e) => {
                child.kill().ok();
                panic!("server did not come up: {e}");
            }
        }
    };
    write_frame(&mut stream, br#"{"op":"hello"}"#).unwrap();
    let resp: serde_json::Value = serde_json::from_slice(&read_frame(&mut stream).unwrap().unwrap()).unwrap();
    child.kill().ok();
    child.wait().ok();
    assert_eq!(resp["ok"], true);
    assert_eq!(resp["protocol"], 1);
}
