use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn fslm(config: &str, out: &Path, extra: &[&str]) -> (Output, TempDir) {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("config.json");
    std::fs::write(&path, config).unwrap();
    let output = Command::new(env!("CARGO_BIN_EXE_fslm"))
        .arg("--config")
        .arg(&path)
        .arg("--output")
        .arg(out)
        .arg("--quiet")
        .args(extra)
        .output()
        .unwrap();
    (output, tmp)
}

fn run_ok(config: &str) -> (TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let (output, _cfg) = fslm(config, &out, &[]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    (dir, out)
}

fn records(path: &Path) -> Vec<csv::StringRecord> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    reader.records().map(|r| r.unwrap()).collect()
}

fn headers(path: &Path) -> Vec<String> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    reader.headers().unwrap().iter().map(String::from).collect()
}

#[test]
fn invalid_configs_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    for config in [
        r#"{"command": "sweep", "paddles": [1], "seed": 1, "excitation": {"uniform_modes": 7}}"#,
        r#"{"command": "sweep", "paddles": [1], "excitation": {"uniform_modes": 6}}"#,
        r#"{"command": "simulate", "paddles": 1, "seed": 1, "excitation": {"uniform_modes": 6}, "colour": 3}"#,
        r#"{"command": "simulate", "paddles": 1, "seed": 1,
            "excitation": {"uniform_modes": 6, "groups": [1.0]}}"#,
        r#"{"command": "simulate", "paddles": 1, "seed": 1, "excitation": {"uniform_modes": 6},
            "fiber": {"core_radius_um": 31.25, "na": 1.6, "n1": 1.49, "wavelength_um": 1.55}}"#,
        "{ not json",
    ] {
        let (output, _cfg) = fslm(config, &dir.path().join("never"), &[]);
        assert_eq!(output.status.code(), Some(2), "{config}");
        assert!(!output.stderr.is_empty());
    }
    let (output, _cfg) = fslm(
        r#"{"command": "modes", "seed": 1}"#,
        &dir.path().join("never"),
        &["--workers", "0"],
    );
    assert_eq!(output.status.code(), Some(2));
    assert!(!dir.path().join("never").exists());
}

#[test]
fn triangular_error_names_neighbours() {
    let dir = tempfile::tempdir().unwrap();
    let (output, _cfg) = fslm(
        r#"{"command": "sweep", "paddles": [1], "seed": 1, "excitation": {"uniform_modes": 7}}"#,
        &dir.path().join("x"),
        &[],
    );
    let err = String::from_utf8_lossy(&output.stderr);
    assert!(err.contains('6') && err.contains("10"), "{err}");
}

#[test]
fn unwritable_output_exits_with_code_three() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let (output, _cfg) = fslm(r#"{"command": "modes", "seed": 1}"#, &blocker.join("sub"), &[]);
    assert_eq!(output.status.code(), Some(3));
}

#[test]
fn modes_lists_reference_fiber_groups() {
    let (_dir, out) = run_ok(r#"{"command": "modes", "seed": 1}"#);
    let groups = out.join("mode_groups.csv");
    assert_eq!(headers(&groups), ["group", "p", "modes", "beta_rad_per_m"]);
    let rows = records(&groups);
    assert_eq!(rows.len(), 17);
    let modes: usize = rows.iter().map(|r| r[2].parse::<usize>().unwrap()).sum();
    assert_eq!(modes, 153);
    let beta: Vec<f64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    assert!((beta[0] - 6.034056e6).abs() < 1.0);
    assert!(beta.windows(2).all(|w| w[0] > w[1]));

    let weights = records(&out.join("modes.csv"));
    assert_eq!(weights.len(), 17);
    let total: f64 = weights.iter().map(|r| r[3].parse::<f64>().unwrap()).sum();
    assert!(total > 0.95 && total <= 1.0 + 1e-12);
}

#[test]
fn simulate_writes_stats_and_manifest() {
    let (_dir, out) = run_ok(
        r#"{"command": "simulate", "excitation": {"uniform_modes": 6}, "paddles": 3,
            "realizations": 5, "baseline_samples": 20, "seed": 11, "raw": true, "dump_model": true}"#,
    );
    let stats = out.join("stats.csv");
    assert_eq!(
        headers(&stats),
        ["n_modes", "k_paddles", "mean_enh", "std_enh", "stderr", "realizations", "ablated"]
    );
    let rows = records(&stats);
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][0], "6");
    assert_eq!(&rows[0][1], "3");
    assert!(rows[0][2].parse::<f64>().unwrap() > 1.0);
    assert_eq!(&rows[0][5], "5");

    let raw = std::fs::read_to_string(out.join("raw.jsonl")).unwrap();
    assert_eq!(raw.lines().count(), 5);
    for line in raw.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["enhancement"].as_f64().unwrap() * v["baseline"].as_f64().unwrap() <= 1.0 + 1e-12);
    }

    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    let mut listed: Vec<String> = manifest["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f.as_str().unwrap().to_string())
        .collect();
    listed.sort();
    let mut present: Vec<String> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n != "manifest.json")
        .collect();
    present.sort();
    assert_eq!(listed, present);
    assert_eq!(manifest["seed"], 11);
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn json_format_writes_json_only() {
    let (_dir, out) = run_ok(
        r#"{"command": "simulate", "excitation": {"uniform_modes": 3}, "paddles": 1,
            "realizations": 2, "baseline_samples": 10, "seed": 2, "format": "json"}"#,
    );
    assert!(out.join("stats.json").exists());
    assert!(!out.join("stats.csv").exists());
}

#[test]
fn sweep_covers_grid_and_comparator() {
    let (_dir, out) = run_ok(
        r#"{"command": "sweep", "excitation": {"uniform_modes": [3, 6]}, "paddles": [0, 2, 4],
            "realizations": 4, "baseline_samples": 20, "seed": 5, "slope_range": [0, 4]}"#,
    );
    let rows = records(&out.join("stats.csv"));
    assert_eq!(rows.len(), 6);
    for r in rows.iter().filter(|r| &r[1] == "0") {
        assert_eq!(r[2].parse::<f64>().unwrap(), 1.0);
    }
    let lcslm = records(&out.join("lcslm.csv"));
    assert_eq!(lcslm.len(), 5);
    assert_eq!(lcslm[2][1].parse::<f64>().unwrap(), 1.78);
    assert_eq!(records(&out.join("slopes.csv")).len(), 2);
}

#[test]
fn ablate_pairs_full_and_ablated() {
    let (_dir, out) = run_ok(
        r#"{"command": "ablate", "excitation": {"uniform_modes": 6}, "paddles": [1, 3],
            "realizations": 4, "baseline_samples": 20, "seed": 8}"#,
    );
    let path = out.join("ablation.csv");
    let h = headers(&path);
    for col in ["n_modes", "k_paddles", "mean_full", "std_full", "mean_ablated", "std_ablated"] {
        assert!(h.iter().any(|c| c == col), "{col} missing from {h:?}");
    }
    assert_eq!(records(&path).len(), 2);
    let stats = records(&out.join("stats.csv"));
    assert_eq!(stats.iter().filter(|r| &r[6] == "true").count(), 2);
    assert_eq!(stats.iter().filter(|r| &r[6] == "false").count(), 2);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let config = r#"{"command": "sweep", "excitation": {"uniform_modes": 6}, "paddles": [1, 2],
        "realizations": 6, "baseline_samples": 20, "seed": 99, "raw": true}"#;
    let (_a, out_a) = run_ok(config);
    let (_b, out_b) = run_ok(config);
    for name in ["stats.csv", "slopes.csv", "raw.jsonl", "lcslm.csv"] {
        assert_eq!(
            std::fs::read(out_a.join(name)).unwrap(),
            std::fs::read(out_b.join(name)).unwrap(),
            "{name}"
        );
    }
}
