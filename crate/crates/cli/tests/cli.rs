use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const SHORT_GATE: &str = r#"
experiment = ["optimize-pulse", "simulate-gate"]
seed = 7

[modes]
frequencies = ["1.2 MHz", "2.08 MHz"]
lamb_dicke = [[0.1285, 0.0976], [0.1285, -0.0976]]

[laser]
detuning = "2.04 MHz"

[noise]
dephasing = ["0 Hz", "20 Hz"]

[[setting]]
label = "short"
duration = "1 ms"
amplitude_min = "0 Hz"
amplitude_max = "30 kHz"
segments = 20
restarts = 2
fock_cutoff = 4

[gate]
samples = 11
"#;

fn thq(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_thq"));
    cmd.args(args).env_remove("THQ_WORKERS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("spawn thq")
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path
}

fn run_config(dir: &Path, text: &str, out: &str) -> Output {
    let cfg = write_config(dir, text);
    let out = dir.join(out);
    thq(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], &[])
}

/// The last JSON event on stderr.
fn last_event(out: &Output) -> Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().last().expect("some stderr output");
    serde_json::from_str(line).unwrap_or_else(|e| panic!("not JSON ({e}): {line}"))
}

fn manifest(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let mut rows = vec![r.headers().unwrap().iter().map(str::to_string).collect()];
    rows.extend(r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()));
    rows
}

#[test]
fn gate_run_writes_artifacts_and_manifest() {
    let dir = TempDir::new().unwrap();
    let out = run_config(dir.path(), SHORT_GATE, "out");
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let stdout = String::from_utf8(out.stdout).unwrap();
    let manifest_path = PathBuf::from(stdout.trim());
    assert_eq!(manifest_path, dir.path().join("out/manifest.json"));
    let m = manifest(&manifest_path);
    assert_eq!(m["seed"], 7);
    assert_eq!(m["version"], env!("CARGO_PKG_VERSION"));
    let paths: Vec<&str> = m["artifacts"].as_array().unwrap().iter().map(|a| a["path"].as_str().unwrap()).collect();
    for expected in [
        "optimize.csv",
        "short/pulse.toml",
        "short/gl_0hz/metrics.csv",
        "short/gl_20hz/metrics.csv",
        "short/gl_20hz/state_checks.csv",
        "summary.csv",
    ] {
        assert!(paths.contains(&expected), "{expected} missing from {paths:?}");
    }

    let metrics = read_csv(&dir.path().join("out/short/gl_0hz/metrics.csv"));
    assert_eq!(metrics[0], ["time_s", "entropy", "fidelity", "negativity"]);
    assert_eq!(metrics.len(), 12);
    let final_fidelity: f64 = metrics[11][2].parse().unwrap();
    assert!(final_fidelity > 0.999, "noise-free fidelity {final_fidelity}");
    let noisy: f64 = read_csv(&dir.path().join("out/short/gl_20hz/metrics.csv"))[11][2].parse().unwrap();
    assert!(noisy < final_fidelity);

    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.lines().all(|l| serde_json::from_str::<Value>(l).is_ok()));
}

#[test]
fn identical_config_and_seed_reproduce_artifact_hashes() {
    let dir = TempDir::new().unwrap();
    let a = run_config(dir.path(), SHORT_GATE, "a");
    let b = run_config(dir.path(), SHORT_GATE, "b");
    assert!(a.status.success() && b.status.success());
    let ma = manifest(&dir.path().join("a/manifest.json"));
    let mb = manifest(&dir.path().join("b/manifest.json"));
    assert_eq!(ma["artifacts"], mb["artifacts"]);
    assert_eq!(ma["config_sha256"], mb["config_sha256"]);
}

#[test]
fn seed_flag_overrides_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), SHORT_GATE);
    let out = dir.path().join("o");
    let res = thq(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "11"], &[]);
    assert!(res.status.success());
    assert_eq!(manifest(&out.join("manifest.json"))["seed"], 11);
}

#[test]
fn malformed_unit_exits_2_naming_the_key() {
    let dir = TempDir::new().unwrap();
    let out = run_config(dir.path(), &SHORT_GATE.replace("\"1 ms\"", "\"1 fortnight\""), "out");
    assert_eq!(out.status.code(), Some(2));
    let ev = last_event(&out);
    assert_eq!(ev["event"], "error");
    assert_eq!(ev["code"], 2);
    assert!(ev["message"].as_str().unwrap().contains("setting[0].duration"), "{ev}");
    assert!(out.stdout.is_empty());
}

#[test]
fn missing_unit_suffix_exits_2() {
    let dir = TempDir::new().unwrap();
    let out = run_config(dir.path(), &SHORT_GATE.replace("\"2.04 MHz\"", "\"2.04e6\""), "out");
    assert_eq!(out.status.code(), Some(2));
    assert!(last_event(&out)["message"].as_str().unwrap().contains("laser.detuning"));
}

#[test]
fn unknown_key_exits_2() {
    let dir = TempDir::new().unwrap();
    let out = run_config(dir.path(), &SHORT_GATE.replace("[gate]", "[gate]\nintegrator = \"rk4\""), "out");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_pulse_file_exits_2() {
    let dir = TempDir::new().unwrap();
    let text = SHORT_GATE.replace("fock_cutoff = 4", "fock_cutoff = 4\npulse_file = \"nowhere.toml\"");
    let out = run_config(dir.path(), &text, "out");
    assert_eq!(out.status.code(), Some(2));
    assert!(last_event(&out)["message"].as_str().unwrap().contains("nowhere.toml"));
}

#[test]
fn negative_rate_exits_3() {
    let dir = TempDir::new().unwrap();
    let out = run_config(dir.path(), &SHORT_GATE.replace("\"20 Hz\"", "\"-20 Hz\""), "out");
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(last_event(&out)["kind"], "domain");
}

#[test]
fn truncation_exits_4() {
    let dir = TempDir::new().unwrap();
    let out = run_config(dir.path(), &SHORT_GATE.replace("fock_cutoff = 4", "fock_cutoff = 1"), "out");
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn infeasible_optimization_exits_5() {
    let dir = TempDir::new().unwrap();
    let out = run_config(dir.path(), &SHORT_GATE.replace("\"30 kHz\"", "\"1 kHz\""), "out");
    assert_eq!(out.status.code(), Some(5));
    assert_eq!(last_event(&out)["kind"], "optimizer");
}

#[test]
fn validate_reports_without_running() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), SHORT_GATE);
    let out = thq(&["validate", "--config", cfg.to_str().unwrap()], &[]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert_eq!(last_event(&out)["event"], "valid");
    assert!(!dir.path().join("thq-out").exists());
}

#[test]
fn bad_worker_count_exits_2() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), SHORT_GATE);
    let out = thq(&["validate", "--config", cfg.to_str().unwrap()], &[("THQ_WORKERS", "zero")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn metrics_and_eb_kinds() {
    let dir = TempDir::new().unwrap();
    let text = r#"
experiment = ["metrics", "eb", "modes"]
[trap]
charge_number = 3
axial_frequency = "1.2 MHz"
[laser]
power = "30 uW"
beam_waist = "1.5 um"
[metrics]
werner = [0.0, 0.5, 1.0]
[eb]
channels = "illustrative"
target_time = "1 s"
"#;
    let out = run_config(dir.path(), text, "out");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let w = read_csv(&dir.path().join("out/metrics_werner.csv"));
    assert_eq!(w[0], ["werner_p", "entropy", "fidelity", "negativity"]);
    let neg_half: f64 = w[2][3].parse().unwrap();
    assert!((neg_half - 0.125).abs() < 1e-12);
    let eb = read_csv(&dir.path().join("out/eb.csv"));
    assert_eq!(eb[0].last().unwrap(), "required_enhancement");
    let modes = read_csv(&dir.path().join("out/modes.csv"));
    assert_eq!(modes[0], ["mode", "frequency_hz", "lamb_dicke_ion1", "lamb_dicke_ion2"]);
}

#[test]
fn fig1_preset_reports_coherence_times_and_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let res = thq(&["reproduce", "--preset", "fig1", "--out", out.to_str().unwrap()], &[]);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    }
    for f in ["rabi.csv", "ramsey.csv", "t1t2.csv", "summary.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
    let rows = read_csv(&a.join("t1t2.csv"));
    assert_eq!(rows[0], ["decay_rate_per_s", "dephasing_rate_per_s", "t1_s", "t2_s"]);
    for r in &rows[1..] {
        let v: Vec<f64> = r.iter().map(|x| x.parse().unwrap()).collect();
        assert!((v[2] * v[0] - 1.0).abs() < 0.05, "T1 row {r:?}");
        assert!((v[3] * 2.0 * v[1] - 1.0).abs() < 0.05, "T2 row {r:?}");
    }
}

#[test]
fn fig4_preset_covers_detunings_and_powers() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let res = thq(&["reproduce", "--preset", "fig4", "--out", out.to_str().unwrap()], &[("THQ_WORKERS", "2")]);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    }
    for power in ["30uW", "300uW"] {
        for d in ["2", "2.04", "2.07"] {
            let rel = format!("{power}/delta_{d}mhz/robustness.csv");
            let rows = read_csv(&a.join(&rel));
            assert_eq!(rows[0], ["drift_hz", "fidelity"]);
            let drifts: Vec<f64> = rows[1..].iter().map(|r| r[0].parse().unwrap()).collect();
            assert!(drifts[0] <= -1000.0 && *drifts.last().unwrap() >= 1000.0);
            assert_eq!(fs::read(a.join(&rel)).unwrap(), fs::read(b.join(&rel)).unwrap());
        }
    }
}
