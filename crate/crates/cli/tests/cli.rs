use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

use ringlink_cli::envelope::{config_hash, ResultEnvelope};
use ringlink_cli::trace::write_trace;
use ringlink_core::fit::{simulate_trace, Port};
use ringlink_core::{Coupling, PolMode};

const BIN: &str = env!("CARGO_BIN_EXE_ringlink");

fn ring() -> Value {
    json!({"spectral": {"f0_te_hz": 193.4e12, "te_tm_interval_hz": 16.6e9, "fsr_hz": 49e9, "fwhm_hz": 140e6}})
}

fn write_config(dir: &Path, name: &str, cfg: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_vec_pretty(cfg).unwrap()).unwrap();
    p
}

fn ringlink(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).env_remove("RINGLINK_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn run_ok(sub: &str, config: &Path, out: &Path) -> ResultEnvelope {
    let o = ringlink(
        &[sub, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()],
        &[],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&std::fs::read(out).unwrap()).unwrap()
}

fn ossb_config(polarizer: Option<f64>) -> Value {
    let mut ossb = json!({"carrier": {"resonance": "tm", "offset_hz": 0.0}, "rf_freq_hz": 16.6e9, "sideband": "lower"});
    if let Some(p) = polarizer {
        ossb["polarizer_deg"] = json!(p);
    }
    json!({"schema_version": 1, "ring": ring(), "ossb": ossb})
}

#[test]
fn success_writes_checked_envelope() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &ossb_config(Some(30.0)));
    let out = dir.path().join("r.json");
    let env = run_ok("ossb", &cfg, &out);
    assert_eq!(env.tool, "ringlink");
    assert_eq!(env.experiment, "ossb");
    assert!(env.hash_matches());
    assert!(!env.records().is_empty());
    assert!(env.scalar("ocsr_db").is_some());
    assert!(env.timestamp_unix_s.is_none());
    // fixed float format
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("\"rf_freq_hz\": 1.6600000000000000e10"));
}

#[test]
fn malformed_config_exits_1_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let cases = [
        ("bad.json", "{ not json".to_string(), "<root>"),
        (
            "unknown.json",
            json!({"schema_version": 1, "ring": ring(), "spectrum": {"span_hz": 1e9, "points": 3, "colour": 1}})
                .to_string(),
            "spectrum",
        ),
        (
            "two.json",
            json!({"schema_version": 1, "ring": ring(), "spectrum": {"span_hz": 1e9, "points": 3},
                   "ossb": {"carrier": {"freq_hz": 193.4e12}, "rf_freq_hz": 1e9}})
            .to_string(),
            "ossb",
        ),
        (
            "version.json",
            json!({"schema_version": 7, "ring": ring(), "spectrum": {"span_hz": 1e9, "points": 3}}).to_string(),
            "schema_version",
        ),
    ];
    for (name, body, key) in cases {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        let o = ringlink(&["spectrum", "--config", p.to_str().unwrap(), "--out", out.to_str().unwrap()], &[]);
        assert_eq!(o.status.code(), Some(1), "{name}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(key), "{name}: {err}");
        assert!(!out.exists());
    }
}

#[test]
fn missing_config_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = ringlink(&["spectrum", "--config", "/nonexistent/c.json", "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn section_must_match_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &ossb_config(None));
    let out = dir.path().join("r.json");
    let o = ringlink(&["spectrum", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`spectrum`"));
}

#[test]
fn domain_error_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let mut ring = ring();
    ring["spectral"]["fwhm_hz"] = Value::Null;
    ring["spectral"]["t"] = json!(1.5);
    let cfg = write_config(
        dir.path(),
        "c.json",
        &json!({"schema_version": 1, "ring": ring, "spectrum": {"span_hz": 1e9, "points": 3}}),
    );
    let out = dir.path().join("r.json");
    let o = ringlink(&["spectrum", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!out.exists());
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(ringlink(&["transmogrify"], &[]).status.code(), Some(64));
    assert_eq!(ringlink(&["spectrum", "--config", "x.json"], &[]).status.code(), Some(64));
    assert_eq!(ringlink(&[], &[]).status.code(), Some(64));
    assert_eq!(ringlink(&["--help"], &[]).status.code(), Some(0));
    assert_eq!(ringlink(&["--version"], &[]).status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &ossb_config(None));
    let out = dir.path().join("r.json");
    let args = ["ossb", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    assert_eq!(ringlink(&args, &[("RINGLINK_THREADS", "zero")]).status.code(), Some(64));
    assert!(!out.exists());
}

#[test]
fn unwritable_output_exits_74() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &ossb_config(None));
    let out = dir.path().join("missing_dir/r.json");
    let o = ringlink(&["ossb", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(74));
}

#[test]
fn output_is_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        &json!({"schema_version": 1, "ring": ring(), "sweep": {
            "theta_deg": {"start": 2.0, "stop": 88.0, "points": 9},
            "equalizer": {"carrier": {"resonance": "te", "offset_hz": 5.9e9}}}}),
    );
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "4", "4"].iter().enumerate() {
        let out = dir.path().join(format!("r{i}.json"));
        let o = ringlink(
            &["sweep-theta", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()],
            &[("RINGLINK_THREADS", threads)],
        );
        assert_eq!(o.status.code(), Some(0));
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[1], outputs[2]);
}

#[test]
fn echoed_config_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &ossb_config(Some(40.0)));
    let first = run_ok("ossb", &cfg, &dir.path().join("a.json"));
    let echo = write_config(dir.path(), "echo.json", &first.config);
    let second = run_ok("ossb", &echo, &dir.path().join("b.json"));
    assert_eq!(first, second);
    assert_eq!(
        std::fs::read(dir.path().join("a.json")).unwrap(),
        std::fs::read(dir.path().join("b.json")).unwrap()
    );
}

#[test]
fn tampered_echo_fails_hash_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &ossb_config(None));
    let mut env = run_ok("ossb", &cfg, &dir.path().join("a.json"));
    env.config["ossb"]["rf_freq_hz"] = json!(16.7e9);
    assert!(!env.hash_matches());
    assert_ne!(config_hash(&env.config), env.config_sha256);
}

#[test]
fn csv_and_timestamp_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        &json!({"schema_version": 1, "ring": ring(), "spectrum": {"span_hz": 2e9, "points": 5}}),
    );
    let out = dir.path().join("spectrum.json");
    let o = ringlink(
        &["spectrum", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--csv", "--timestamp"],
        &[],
    );
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "freq_hz,drop_te,drop_tm,through_te,through_tm");
    assert_eq!(lines.len(), 6);
    let env: ResultEnvelope = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert!(env.timestamp_unix_s.is_some());
}

#[test]
fn single_point_sweep_equals_single_run() {
    let dir = tempfile::tempdir().unwrap();
    let single = run_ok(
        "ossb",
        &write_config(dir.path(), "s.json", &ossb_config(Some(33.0))),
        &dir.path().join("s_out.json"),
    );
    let base = ossb_config(None);
    let sweep = json!({"schema_version": 1, "ring": ring(), "sweep": {
        "theta_deg": {"values": [33.0]}, "ossb": base["ossb"]}});
    let swept = run_ok("sweep-theta", &write_config(dir.path(), "w.json", &sweep), &dir.path().join("w_out.json"));
    assert_eq!(swept.column("ocsr_db"), vec![single.scalar("ocsr_db").unwrap()]);
}

#[test]
fn sweep_temp_needs_three_temperatures_for_rates() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({"schema_version": 1, "ring": ring(), "sweep": {"temperature_c": {"values": [25.0, 26.0]}}});
    let env = run_ok("sweep-temp", &write_config(dir.path(), "c.json", &cfg), &dir.path().join("r.json"));
    assert_eq!(env.records().len(), 2);
    assert!(env.scalar("rate_te_hz_per_c").is_none());
    assert!(!env.warnings.is_empty());
}

#[test]
fn fit_recovers_ring_from_trace_file() {
    let dir = tempfile::tempdir().unwrap();
    let (t, a, f0, fsr) = (0.9964, 0.9982, 193.4e12, 49e9);
    let freqs: Vec<f64> = (0..401).map(|i| f0 - 1e9 + 5e6 * i as f64).collect();
    let trace = simulate_trace(Coupling::new(t, a).unwrap(), f0, fsr, Port::Through, PolMode::Te, &freqs).unwrap();
    write_trace(&dir.path().join("notch.txt"), &trace).unwrap();
    std::fs::write(
        dir.path().join("notch.txt.json"),
        json!({"port": "through", "pol": "te", "fsr_hz": fsr}).to_string(),
    )
    .unwrap();
    let cfg = json!({"schema_version": 1, "ring": ring(), "fit": {"resonance": {"trace_path": "notch.txt"}}});
    let env = run_ok("fit", &write_config(dir.path(), "c.json", &cfg), &dir.path().join("r.json"));
    assert!((env.scalar("t").unwrap() / t - 1.0).abs() < 1e-4);
    assert!((env.scalar("a").unwrap() / a - 1.0).abs() < 1e-4);
    assert!((env.scalar("f0_hz").unwrap() - f0).abs() < 1e3);
    assert_eq!(env.column("model_power").len(), 401);
}

#[test]
fn bad_trace_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("t.txt"), "1 2\nthree 4\n").unwrap();
    std::fs::write(dir.path().join("t.txt.json"), r#"{"port": "drop", "pol": "te", "fsr_hz": 49e9}"#).unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        &json!({"schema_version": 1, "ring": ring(), "fit": {"resonance": {"trace_path": "t.txt"}}}),
    );
    let out = dir.path().join("r.json");
    let o = ringlink(&["fit", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn thermal_fit_section() {
    let dir = tempfile::tempdir().unwrap();
    let samples: Vec<Value> = (0..4)
        .flat_map(|i| {
            let t = 23.0 + i as f64;
            [
                json!({"temperature_c": t, "pol": "te", "f0_hz": 193.4e12 - 1.77e9 * t}),
                json!({"temperature_c": t, "pol": "tm", "f0_hz": 193.4e12 + 16.6e9 - 1.67e9 * t}),
            ]
        })
        .collect();
    let cfg = json!({"schema_version": 1, "ring": ring(), "fit": {"thermal": {"samples": samples}}});
    let env = run_ok("fit", &write_config(dir.path(), "c.json", &cfg), &dir.path().join("r.json"));
    assert!((env.scalar("rate_te_hz_per_c").unwrap() - 1.77e9).abs() < 1.0);
    assert!((env.scalar("interval_slope_hz_per_c").unwrap() - 1e8).abs() < 1.0);
}
