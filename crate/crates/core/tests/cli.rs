use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qcsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcsim")).args(args).env_remove("QCSIM_THREADS").output().expect("spawn qcsim")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn generate(dir: &Path, rows: &str, cols: &str, depth: &str, seed: &str) -> String {
    let path = dir.join(format!("c_{rows}x{cols}_{depth}_{seed}.json"));
    let p = path.to_str().unwrap().to_string();
    let stats = json(&qcsim(&["generate", "--rows", rows, "--cols", cols, "--depth", depth, "--seed", seed, "-o", &p]));
    assert_eq!(stats["qubits"], rows.parse::<usize>().unwrap() * cols.parse::<usize>().unwrap());
    p
}

#[test]
fn generate_to_stdout_is_a_circuit() {
    let out = qcsim(&["generate", "--rows", "6", "--cols", "6", "--depth", "0"]);
    let c = json(&out);
    let gates = c["gates"].as_array().unwrap();
    assert_eq!(gates.len(), 36);
    assert!(gates.iter().all(|g| g["kind"] == "H" && g["cycle"] == 0));
}

#[test]
fn schedule_reports_swaps_and_clusters() {
    let tmp = tempfile::tempdir().unwrap();
    let c = generate(tmp.path(), "6", "6", "25", "1");
    let on = json(&qcsim(&["schedule", &c, "--local-qubits", "30", "--specialize", "--worst-case"]));
    let off = json(&qcsim(&["schedule", &c, "--local-qubits", "30", "--worst-case"]));
    assert_eq!(on["swaps"], 1);
    assert_eq!(off["swaps"], 2);
    assert_eq!(on["scheduled_gates"], 447);
    let per_k = on["clusters_per_kmax"].as_object().unwrap();
    for k in ["3", "4", "5"] {
        assert!(per_k.contains_key(k));
    }
    let baseline = json(&qcsim(&["schedule", &c, "--local-qubits", "30", "--specialize", "--policy", "baseline"]));
    assert!(baseline["swaps"].as_u64() >= on["swaps"].as_u64());
}

#[test]
fn run_reports_norm_entropy_and_amplitudes() {
    let tmp = tempfile::tempdir().unwrap();
    let c = generate(tmp.path(), "3", "4", "20", "4");
    let bits = tmp.path().join("bits.txt");
    std::fs::write(&bits, "# queries\n000000000000\n100000000001\n").unwrap();
    let report = json(&qcsim(&[
        "run",
        &c,
        "--ranks",
        "4",
        "--entropy",
        "--amplitudes",
        bits.to_str().unwrap(),
        "--threads",
        "2",
    ]));
    assert!((report["norm"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    assert_eq!(report["ranks"], 4);
    assert_eq!(report["local_qubits"], 10);
    assert_eq!(report["exchanges"], report["swaps"]);
    let amps = report["amplitudes"].as_array().unwrap();
    assert_eq!(amps.len(), 2);
    assert_eq!(amps[1]["bitstring"], "100000000001");
    let entropy = report["entropy"].as_f64().unwrap();
    assert!(entropy > 0.0 && entropy < 12.0 * std::f64::consts::LN_2);

    let single = json(&qcsim(&["run", &c, "--amplitudes", bits.to_str().unwrap(), "--precision", "single"]));
    for (a, b) in amps.iter().zip(single["amplitudes"].as_array().unwrap()) {
        assert!((a["re"].as_f64().unwrap() - b["re"].as_f64().unwrap()).abs() < 1e-5);
        assert!((a["im"].as_f64().unwrap() - b["im"].as_f64().unwrap()).abs() < 1e-5);
    }
}

#[test]
fn verify_passes_and_detects_faults() {
    let ok = qcsim(&["verify", "--max-qubits", "8", "--trials", "5", "--seed", "3"]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(json(&ok)["passed"], true);
    let bad = qcsim(&["verify", "--max-qubits", "8", "--trials", "3", "--inject-fault"]);
    assert_eq!(bad.status.code(), Some(1));
    let none = qcsim(&["verify", "--trials", "0"]);
    assert_eq!(none.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&none.stderr).contains("warning"));
}

#[test]
fn bench_writes_csv() {
    let out =
        qcsim(&["bench", "--k", "1,3", "--qubits", "12", "--locs", "low,high", "--threads", "1,2", "--repeats", "1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("k,qubits,locs,block_size,threads"));
    assert_eq!(lines.len(), 1 + 2 * 2 * 2);
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(qcsim(&["generate", "--rows", "0", "--cols", "5", "--depth", "3"]).status.code(), Some(2));
    assert_eq!(qcsim(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(qcsim(&["schedule"]).status.code(), Some(2));
    let tmp = tempfile::tempdir().unwrap();
    let c = generate(tmp.path(), "2", "3", "5", "0");
    assert_eq!(qcsim(&["run", &c, "--ranks", "3"]).status.code(), Some(2));
    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, r#"{"rows":1,"cols":2,"depth":1,"seed":0,"gates":[{"kind":"CX","qubits":[0,1],"cycle":1}]}"#)
        .unwrap();
    let out = qcsim(&["schedule", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("CX"));
}

#[test]
fn memory_cap_is_enforced() {
    let tmp = tempfile::tempdir().unwrap();
    let c = generate(tmp.path(), "4", "5", "2", "0");
    let out = qcsim(&["run", &c, "--memory-cap-gib", "0.001"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("hint"));
}

#[test]
fn threads_default_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let c = generate(tmp.path(), "2", "3", "10", "0");
    let out = Command::new(env!("CARGO_BIN_EXE_qcsim")).args(["run", &c]).env("QCSIM_THREADS", "3").output().unwrap();
    assert_eq!(json(&out)["threads"], 3);
}
