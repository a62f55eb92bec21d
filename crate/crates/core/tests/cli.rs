use std::path::Path;
use std::process::{Command, Output};

use harvest_evt::{GpdFit, ReturnLevelMap};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_harvest-evt"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("cfg.json");
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

const SMALL_NOISE: &str = r#"{
  "spectrum": {"model": "white_noise", "power_dbw": 30.0},
  "duration_s": 60.0,
  "ensemble_size": 1,
  "base_seed": 7
}"#;

#[test]
fn unknown_flag_is_usage_error() {
    let out = run(&["fit", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn help_exits_zero() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn missing_config_is_usage_error() {
    let out = run(&["run", "--config", "/nonexistent/cfg.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bad_config_value_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"spectrum": {"model": "white_noise", "power_dbw": 30.0}, "percentile": 1.5}"#);
    assert_eq!(run(&["run", "--config", &cfg]).status.code(), Some(1));
}

#[test]
fn smoke_run_writes_artifacts_and_flags_low_confidence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_NOISE);
    let out_dir = dir.path().join("out");
    let out = run(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.contains("Shape parameter - Voltage"));
    assert!(table.contains("low-confidence"));
    for f in ["config.json", "report.json", "report.txt", "return_curves.csv", "voltage_fit.json", "voltage_qq.csv"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let report = run(&["report", "--input", out_dir.join("report.json").to_str().unwrap()]);
    assert_eq!(report.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&report.stdout), table);
}

#[test]
fn seed_flag_changes_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_NOISE);
    let a = run(&["run", "--config", &cfg]);
    let b = run(&["run", "--config", &cfg, "--seed", "8"]);
    let c = run(&["run", "--config", &cfg]);
    assert_eq!(a.stdout, c.stdout);
    assert_ne!(a.stdout, b.stdout);
}

#[test]
fn synth_simulate_fit_map_chain() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"spectrum": {"model": "kaimal", "mean_wind_speed": 20.0, "height": 10.0, "roughness_length": 0.025},
            "duration_s": 400.0}"#,
    );
    let d = dir.path();
    let synth = run(&["synth", "--config", &cfg, "--out", d.join("s").to_str().unwrap()]);
    assert_eq!(synth.status.code(), Some(0), "{}", String::from_utf8_lossy(&synth.stderr));
    let wind_csv = d.join("s/kaimal.csv");
    assert!(d.join("s/kaimal.manifest.json").exists());

    let sim = run(&["simulate", "--config", &cfg, "--out", d.join("m").to_str().unwrap()]);
    assert_eq!(sim.status.code(), Some(0), "{}", String::from_utf8_lossy(&sim.stderr));
    let volt_csv = d.join("m/voltage.csv");
    let manifest = std::fs::read_to_string(d.join("m/voltage.manifest.json")).unwrap();
    assert!(manifest.contains("\"config_hash\""));

    let wind_fit = d.join("wind.json");
    let volt_fit = d.join("volt.json");
    let fw = run(&["fit", "--input", wind_csv.to_str().unwrap(), "--out", wind_fit.to_str().unwrap()]);
    assert_eq!(fw.status.code(), Some(0), "{}", String::from_utf8_lossy(&fw.stderr));
    let fv = run(&[
        "fit",
        "--input",
        volt_csv.to_str().unwrap(),
        "--percentile",
        "0.95",
        "--out",
        volt_fit.to_str().unwrap(),
        "--diagnostics",
        d.join("diag").to_str().unwrap(),
    ]);
    assert_eq!(fv.status.code(), Some(0), "{}", String::from_utf8_lossy(&fv.stderr));
    assert!(d.join("diag/fit_probability.csv").exists());
    let printed: GpdFit = serde_json::from_slice(&fv.stdout).unwrap();
    let vf: GpdFit = serde_json::from_str(&std::fs::read_to_string(&volt_fit).unwrap()).unwrap();
    assert_eq!(printed, vf);
    let wf: GpdFit = serde_json::from_str(&std::fs::read_to_string(&wind_fit).unwrap()).unwrap();
    assert_eq!(wf.units.to_string(), "m/s");

    let level = vf.threshold * 1.2;
    let m = run(&[
        "map",
        "--from",
        volt_fit.to_str().unwrap(),
        "--to",
        wind_fit.to_str().unwrap(),
        "--level",
        &level.to_string(),
    ]);
    assert_eq!(m.status.code(), Some(0), "{}", String::from_utf8_lossy(&m.stderr));
    let printed: f64 = String::from_utf8_lossy(&m.stdout).trim().parse().unwrap();
    let expected = ReturnLevelMap::new(vf, wf).unwrap().map(level).unwrap();
    assert_eq!(printed, expected);

    // Below the threshold is outside the support: a numerical failure.
    let below = run(&[
        "map",
        "--from",
        volt_fit.to_str().unwrap(),
        "--to",
        wind_fit.to_str().unwrap(),
        "--level",
        &(vf.threshold * 0.5).to_string(),
    ]);
    assert_eq!(below.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&below.stderr).contains("lower endpoint"));
}

#[test]
fn fit_without_manifest_needs_units() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("x.csv");
    let mut body = String::from("t,value\n");
    for i in 0..2000 {
        body.push_str(&format!("{},{}\n", i as f64 * 0.04, ((i * 7919) % 1000) as f64 / 100.0));
    }
    std::fs::write(&p, body).unwrap();
    assert_eq!(run(&["fit", "--input", p.to_str().unwrap()]).status.code(), Some(1));
    let ok = run(&["fit", "--input", p.to_str().unwrap(), "--units", "V"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
}
