use std::fs;
use std::path::Path;
use std::process::Command as Process;

use clap::Parser;
use dnls_cli::config::{Command, FileConfig};
use dnls_cli::error::{CliError, ExitCode};
use dnls_cli::Cli;
use dnls_core::LabError;
use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_dnls-lab");

fn parse(text: &str) -> FileConfig {
    toml::from_str(text).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn lab(args: &[&str]) -> std::process::Output {
    Process::new(BIN).args(args).env_remove("DNLS_LAB_OUT").output().unwrap()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

const MINIMAL: &str = r#"
[soliton]
equation = "dnls"
b = 0.0
omega = 0.25
c = 0.0
"#;

#[test]
fn minimal_soliton_config_is_valid() {
    let cfg = parse(MINIMAL).resolve(Command::Soliton).unwrap();
    assert_eq!(cfg.params.omega, 0.25);
    assert_eq!(cfg.grid.n(), 1024);
    assert_eq!(cfg.seed, 0);
}

#[test]
fn inadmissible_speed_is_rejected_with_the_rule() {
    let err = parse(&MINIMAL.replace("omega = 0.25", "omega = 1.0").replace("c = 0.0", "c = 3.0"))
        .resolve(Command::Soliton)
        .unwrap_err();
    assert_eq!(err.exit_code(), ExitCode::CONFIG);
    let msg = err.to_string();
    assert!(msg.contains("-2 sqrt(omega) < c <= 2 sqrt(omega)"), "{msg}");
}

#[test]
fn unknown_and_missing_keys_are_rejected() {
    assert!(toml::from_str::<FileConfig>(&format!("{MINIMAL}width = 3.0\n")).is_err());
    assert!(toml::from_str::<FileConfig>(&format!("{MINIMAL}[grid]\npoints = 64\n")).is_err());
    let err = parse(&MINIMAL.replace("omega = 0.25\n", "")).resolve(Command::Soliton).unwrap_err();
    assert!(err.to_string().contains("soliton.omega"), "{err}");
    let err = parse(&MINIMAL.replace("b = 0.0\n", "")).resolve(Command::Soliton).unwrap_err();
    assert!(err.to_string().contains("soliton.b"), "{err}");
    let err = parse(&MINIMAL.replace("b = 0.0\n", "b = 0.0\nsigma = 2.0\n"))
        .resolve(Command::Soliton)
        .unwrap_err();
    assert!(err.to_string().contains("gdnls only"), "{err}");
}

#[test]
fn flags_override_the_file() {
    let tmp = TempDir::new().unwrap();
    let path = write(tmp.path(), "run.toml", &format!("{MINIMAL}[evolution]\ndt = 1e-3\nt_end = 2.0\n"));
    let from_file = Cli::try_parse_from(["dnls-lab", "evolve", "--config", &path]).unwrap().resolve().unwrap();
    assert_eq!(from_file.evolution.dt, 1e-3);
    let cli = Cli::try_parse_from(["dnls-lab", "evolve", "--config", &path, "--dt", "5e-4", "--omega", "0.3"]).unwrap();
    let cfg = cli.resolve().unwrap();
    assert_eq!(cfg.evolution.dt, 5e-4);
    assert_eq!(cfg.evolution.t_end, 2.0);
    assert_eq!(cfg.params.omega, 0.3);
    // the escape runs inherit the evolution step unless given their own
    assert_eq!(cfg.escape.dt, Some(5e-4));
}

#[test]
fn unstable_time_step_is_a_config_error() {
    let err = parse(&format!("{MINIMAL}[evolution]\ndt = 1.0\n")).resolve(Command::Evolve).unwrap_err();
    assert!(matches!(err, CliError::Lab(LabError::TimeStep { .. })), "{err}");
    assert_eq!(err.exit_code(), ExitCode::CONFIG);
}

#[test]
fn exit_codes_follow_the_failure_class() {
    assert_eq!(CliError::BlowUp { t: 1.0 }.exit_code(), ExitCode::BLOW_UP);
    assert_eq!(CliError::Lab(LabError::BlowUp { t: 1.0 }).exit_code(), ExitCode::BLOW_UP);
    assert_eq!(CliError::Lab(LabError::Resonance("x".into())).exit_code(), ExitCode::SOLVER);
    assert_eq!(CliError::Lab(LabError::NoUnstableMode).exit_code(), ExitCode::SOLVER);
}

#[test]
fn multi_commands_need_a_partner() {
    let err = parse(MINIMAL).resolve(Command::Interaction).unwrap_err();
    assert_eq!(err.exit_code(), ExitCode::CONFIG);
    let with_partner = format!("{MINIMAL}[[partner]]\nequation = \"dnls\"\nb = 0.0\nomega = 1.0\nc = 1.0\nx0 = 30.0\n");
    let cfg = parse(&with_partner).resolve(Command::Interaction).unwrap();
    assert_eq!(cfg.train().len(), 2);
}

#[test]
fn rejected_run_exits_two_and_leaves_a_manifest() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("bad");
    let o = lab(&[
        "soliton", "--equation", "dnls", "--b", "0", "--omega", "1", "--c", "3", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("c <= 2 sqrt(omega)"));
    let m = manifest(&out);
    assert_eq!(m["status"], "config-error");
    assert_eq!(m["exit_code"], 2);
}

fn strip_volatile(mut m: Value) -> Value {
    let obj = m.as_object_mut().unwrap();
    obj.remove("started_unix");
    obj.remove("wall_seconds");
    if let Some(cfg) = obj.get_mut("config").and_then(Value::as_object_mut) {
        cfg.remove("out");
    }
    m
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let config = write(
        tmp.path(),
        "spec.toml",
        "seed = 11\n[soliton]\nequation = \"gdnls\"\nsigma = 2.0\nomega = 1.0\nc = -1.0\n[grid]\nn = 256\n",
    );
    let runs: Vec<_> = ["a", "b"]
        .iter()
        .map(|name| {
            let out = tmp.path().join(name);
            let o = lab(&["spectrum", "--config", &config, "--out", out.to_str().unwrap()]);
            assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
            out
        })
        .collect();
    for file in ["eigenvalues.csv", "mode.csv", "spectrum.json"] {
        let a = fs::read(runs[0].join(file)).unwrap();
        let b = fs::read(runs[1].join(file)).unwrap();
        assert!(a == b, "{file} differs");
    }
    assert_eq!(strip_volatile(manifest(&runs[0])), strip_volatile(manifest(&runs[1])));
    let m = manifest(&runs[0]);
    assert_eq!(m["seed"], 11);
    assert_eq!(m["outputs"].as_array().unwrap().len(), 3);

    // a different seed only changes the seeded resolvent probe
    let other = tmp.path().join("c");
    let o = lab(&["spectrum", "--config", &config, "--seed", "12", "--out", other.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read(other.join("eigenvalues.csv")).unwrap(), fs::read(runs[0].join("eigenvalues.csv")).unwrap());
}

#[test]
fn classify_emits_a_stability_report() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("cls");
    let o = lab(&[
        "classify", "--equation", "gdnls", "--sigma", "2", "--omega", "1", "--c", "-1", "--n", "512", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("stability.json")).unwrap()).unwrap();
    assert_eq!(report["verdict"], "unstable");
    assert_eq!(report["p_count"], 0);
}

#[test]
fn output_root_comes_from_the_environment() {
    let tmp = TempDir::new().unwrap();
    let o = Process::new(BIN)
        .args(["soliton", "--equation", "dnls", "--b", "1", "--omega", "1", "--c", "0.5", "--n", "256"])
        .env("DNLS_LAB_OUT", tmp.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let dir = tmp.path().join("soliton");
    assert!(dir.join("profile.csv").exists());
    assert_eq!(manifest(&dir)["status"], "ok");
}

#[test]
fn evolve_writes_the_invariant_log() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("ev");
    let o = lab(&[
        "evolve", "--equation", "dnls", "--b", "0", "--omega", "1", "--c", "0.5", "--n", "1024", "--t-end", "0.2",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let log = fs::read_to_string(out.join("log.csv")).unwrap();
    assert!(log.starts_with("t,energy,mass,momentum,drift,constraint_defect"));
    let summary: Value = serde_json::from_str(&fs::read_to_string(out.join("evolve.json")).unwrap()).unwrap();
    assert!(summary["max_drift"].as_f64().unwrap() < 1e-6);
    assert!(summary["blow_up"].is_null());
}
