use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn default_config() -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml");
    std::fs::read_to_string(path).unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("case.toml");
    std::fs::write(&path, text).unwrap();
    path
}

fn phasefield(config: &Path, command: &str, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phasefield"))
        .args(["--config", config.to_str().unwrap(), "--command", command, "--out"])
        .arg(out)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned() + &String::from_utf8_lossy(&o.stderr)
}

#[test]
fn validate_default_is_clean() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &default_config());
    let o = phasefield(&cfg, "validate", &tmp.path().join("out"));
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("0 violations"));
}

#[test]
fn nonpositive_temperature_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let text = default_config()
        .replace("theta_floor = 1e-6", "theta_floor = 0.0")
        .replace("mean = 1.0", "mean = 0.5");
    let cfg = write_config(tmp.path(), &text);
    for command in ["validate", "run"] {
        let out = tmp.path().join(command);
        let o = phasefield(&cfg, command, &out);
        assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
        assert!(stdout(&o).contains("theta0"));
        assert!(!out.join("trajectory.csv").exists());
    }
}

#[test]
fn run_writes_one_row_per_time_level() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &default_config());
    let out = tmp.path().join("out");
    let o = phasefield(&cfg, "run", &out);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let csv = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header[0], "n");
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 21);
    for (n, row) in rows.iter().enumerate() {
        assert_eq!(row.len(), header.len());
        assert_eq!(row[0], n as f64);
        assert!((row[1] - n as f64 * 0.05).abs() < 1e-12);
    }
    let ndjson = std::fs::read_to_string(out.join("steps.ndjson")).unwrap();
    assert_eq!(ndjson.lines().count(), 20);
    for line in ndjson.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["min_theta"].as_f64().unwrap() > 0.0);
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["digest"].as_str().unwrap().len(), 64);
}

#[test]
fn single_step_run() {
    let tmp = tempfile::tempdir().unwrap();
    let text = default_config()
        .replace("steps = 20", "steps = 1")
        .replace("final_time = 1.0", "final_time = 0.2");
    let cfg = write_config(tmp.path(), &text);
    let out = tmp.path().join("out");
    let o = phasefield(&cfg, "run", &out);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let csv = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    let ndjson = std::fs::read_to_string(out.join("steps.ndjson")).unwrap();
    assert_eq!(ndjson.lines().count(), 1);
}

#[test]
fn zero_steps_is_invalid_and_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &default_config().replace("steps = 20", "steps = 0"));
    let out = tmp.path().join("out");
    let o = phasefield(&cfg, "run", &out);
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
    assert!(!out.join("trajectory.csv").exists());
}

#[test]
fn unknown_key_is_invalid() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &default_config().replace("eta = 1.0", "eta = 1.0\nzeta = 2.0"));
    let o = phasefield(&cfg, "validate", &tmp.path().join("out"));
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
}

#[test]
fn diagnose_on_plane_config_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/plane.toml");
    let out = tmp.path().join("out");
    let o = phasefield(&cfg, "diagnose", &out);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let summary = std::fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(!summary.contains("FAIL"), "{summary}");
    assert!(out.join("diagnostics.csv").exists());
}

#[test]
fn shipped_default_matches_builtin() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml");
    let file = phasefield::cli::Config::from_path(&path).unwrap();
    assert_eq!(file, phasefield::cli::Config::default());
}
