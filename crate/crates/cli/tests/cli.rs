use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn spinpulse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinpulse"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is json")
}

#[test]
fn cn_preset_passes() {
    let out = spinpulse(&["run-cn"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = stdout_json(&out);
    assert_eq!(v["status"], "pass");
    assert!(v["metrics"]["fidelity"].as_f64().unwrap() >= 0.99);
}

#[test]
fn cn_config_file_with_integrator() {
    let dir = tempfile::tempdir().unwrap();
    let mut config: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(configs().join("cn.json")).unwrap()).unwrap();
    config["method"] = "integrator".into();
    let path = dir.path().join("cn.json");
    std::fs::write(&path, config.to_string()).unwrap();
    let out = spinpulse(&["run-cn", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert!(v["metrics"]["steps"].as_f64().unwrap() > 0.0);
}

#[test]
fn ensemble_reports_tolerance_failure_with_metrics() {
    let out = spinpulse(&[
        "run-ensemble",
        "--config",
        configs().join("ensemble.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let v = stdout_json(&out);
    assert!(v["metrics"]["deviation"].as_f64().unwrap() > 0.0);
    assert!(v["metrics"]["background_change"].as_f64().unwrap() < 0.005);
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAILED deviation"));
}

#[test]
fn ensemble_csv_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = spinpulse(&[
        "run-ensemble",
        "--format",
        "csv",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let r = std::fs::read_to_string(dir.path().join("ensemble_r.csv")).unwrap();
    assert!(r.starts_with("row,col,re,im\n"));
    assert_eq!(r.lines().count(), 17);
    let b = std::fs::read_to_string(dir.path().join("ensemble_b.csv")).unwrap();
    assert_eq!(b.lines().count(), 13);
}

#[test]
fn missing_rabi_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"{"kind":"cn","system":{"n_spins":1,"larmor":[100.0],"couplings":[[0.0]],
            "pulses":[{"carrier":100.0,"duration":1.0}]},"initial_state":[[1,0],[0,0]]}"#,
    )
    .unwrap();
    let out = spinpulse(&["run-cn", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("system.pulses[0].rabi: missing"));
}

#[test]
fn wrong_kind_is_a_validation_error() {
    let out = spinpulse(&[
        "run-cn",
        "--config",
        configs().join("design.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_is_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = spinpulse(&[
            "sweep",
            "--out",
            dir.path().to_str().unwrap(),
            "--format",
            "csv",
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    let x = std::fs::read(a.path().join("sweep.csv")).unwrap();
    let y = std::fs::read(b.path().join("sweep.csv")).unwrap();
    assert_eq!(x, y);
    let text = String::from_utf8(x).unwrap();
    assert!(text.starts_with("delta_omega_over_rabi,j_over_rabi,deviation,fidelity,error\n"));
    assert_eq!(text.lines().count(), 7);
}

#[test]
fn sweep_tolerance_and_grid_validation() {
    let out = spinpulse(&[
        "sweep",
        "--delta-omega-over-rabi",
        "300,1000",
        "--j-over-rabi",
        "50",
        "--max-deviation",
        "0.02",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out = spinpulse(&["sweep", "--delta-omega-over-rabi", "300,30"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn design_pulse_fields() {
    let out = spinpulse(&[
        "design-pulse",
        "--delta-omega",
        "10",
        "--k",
        "1",
        "--n",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    let rabi = v["rabi"].as_f64().unwrap();
    assert!((rabi - 10.0 / 15f64.sqrt()).abs() < 1e-12);
    assert!((v["tau"].as_f64().unwrap() * rabi - std::f64::consts::PI / 2.0).abs() < 1e-12);
    assert_eq!(v["n"], 2);
    assert!(v.get("omega").is_some() && v.get("delta_omega").is_some());
    let zero = spinpulse(&["design-pulse", "--delta-omega", "0"]);
    assert_eq!(zero.status.code(), Some(2));
}

#[test]
fn shor_modes_and_trace() {
    let out = spinpulse(&["run-shor"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["period"]["period"], 2);
    assert_eq!(v["period"]["factor"], 2);

    let dir = tempfile::tempdir().unwrap();
    let out = spinpulse(&[
        "run-shor",
        "--mode",
        "natural-phase",
        "--tau1",
        "0.7",
        "--tau2",
        "2.5",
        "--trace",
        "--seed",
        "11",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("shor.json")).unwrap())
            .unwrap();
    let p = summary["distribution"].as_array().unwrap();
    assert!((p[0].as_f64().unwrap() - 0.5).abs() < 1e-10);
    assert!(p[1].as_f64().unwrap().abs() < 1e-10);
    let trace = std::fs::read_to_string(dir.path().join("shor_trace.csv")).unwrap();
    assert!(trace.starts_with("final,path,magnitude,phase,re,im\n"));
}

#[test]
fn shor_explicit_energies_and_seeded_sampling() {
    let dir = tempfile::tempdir().unwrap();
    let energies = dir.path().join("energies.json");
    let values: Vec<f64> = (0..16).map(|i| i as f64 * 0.9 - 3.0).collect();
    std::fs::write(&energies, serde_json::to_string(&values).unwrap()).unwrap();
    let run = || {
        spinpulse(&[
            "run-shor",
            "--mode",
            "bare-delay",
            "--tau1",
            "0.4",
            "--tau2",
            "1.3",
            "--energies",
            energies.to_str().unwrap(),
            "--seed",
            "5",
        ])
    };
    let (a, b) = (run(), run());
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v = stdout_json(&a);
    assert_eq!(v["energy_source"], "explicit-config");
    assert!(v["distribution"][1].as_f64().unwrap() > 0.0);
    assert_eq!(
        v["samples"]
            .as_array()
            .unwrap()
            .iter()
            .map(|c| c.as_u64().unwrap())
            .sum::<u64>(),
        1000
    );
}

#[test]
fn shipped_configs_match_presets() {
    for name in ["cn", "ensemble", "shor", "design", "sweep"] {
        let out = spinpulse(&["preset", name]);
        let shipped = std::fs::read_to_string(configs().join(format!("{name}.json"))).unwrap();
        assert_eq!(String::from_utf8(out.stdout).unwrap(), shipped, "{name}");
    }
}
