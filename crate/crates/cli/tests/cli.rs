use std::f64::consts::PI;
use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use qudaqc::hamiltonian::{blbq_problem, zz_source};
use qudaqc::{QuditHamiltonian, Schedule, WeylLabel, C64};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qudaqc"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn qudaqc")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qudaqc-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn verify_passes_for_small_dimensions() {
    let o = run(&["verify", "--d", "2,3"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains(" 0 failed"));
}

#[test]
fn verify_writes_report_and_filters() {
    let dir = scratch("verify");
    let out = dir.join("report.json");
    let o = run(&["verify", "--d", "3", "--property", "S3", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let checks = report["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 1);
    assert_eq!(checks[0]["passed"], true);
}

#[test]
fn malformed_dimension_is_a_usage_error() {
    assert_eq!(run(&["verify", "--d", "7"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--d", "x"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--property", "nothing-matches"]).status.code(), Some(2));
}

#[test]
fn compile_builtin_blbq_is_exact() {
    let dir = scratch("compile");
    let out = dir.join("schedule.json");
    let theta = format!("{}", PI / 4.0);
    let o = run(&["compile", "--n", "2", "--theta", &theta, "--no-prune", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let schedule = Schedule::from_json(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!((schedule.d, schedule.n), (3, 2));
    let residual = schedule.certificate_residual(&zz_source(2, 3).unwrap(), &blbq_problem(2, PI / 4.0).unwrap()).unwrap();
    assert!(residual < 1e-8, "residual {residual}");
}

#[test]
fn uncoupled_source_exits_with_three() {
    let dir = scratch("incompatible");
    let mut source = QuditHamiltonian::new(3, 3).unwrap();
    let z = WeylLabel::z_power(3, 1);
    let z2 = WeylLabel::z_power(3, 2);
    source.add_coupling(0, 1, z, z2, C64::new(0.5, 0.0)).unwrap();
    source.add_coupling(0, 1, z2, z, C64::new(0.5, 0.0)).unwrap();
    let path = dir.join("source.json");
    fs::write(&path, source.to_json().unwrap()).unwrap();
    let o = run(&["compile", "--n", "3", "--theta", "0.3", "--source", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn flags_override_config_values() {
    let dir = scratch("override");
    let cfg = dir.join("run.json");
    fs::write(&cfg, r#"{"n": 2, "theta": 0.4, "pruning_factor": 0}"#).unwrap();
    let out = dir.join("s.json");
    let o = run(&["compile", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(Schedule::from_json(&fs::read_to_string(&out).unwrap()).unwrap().n, 2);
    let o = run(&["compile", "--config", cfg.to_str().unwrap(), "--n", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let s = Schedule::from_json(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(s.n, 3);
    assert_eq!(s.metadata.theta, Some(0.4));
}

#[test]
fn bad_config_is_a_usage_error() {
    let dir = scratch("badcfg");
    let cfg = dir.join("run.json");
    fs::write(&cfg, r#"{"n": 2, "no_such_key": 1}"#).unwrap();
    assert_eq!(run(&["compile", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    fs::write(&cfg, r#"{"two_gate_fidelity": 0.0}"#).unwrap();
    assert_eq!(run(&["sweep", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn sweep_is_deterministic_and_dumps_schedules() {
    let dir = scratch("sweep");
    let a = dir.join("a.csv");
    let b = dir.join("b.csv");
    let dump = dir.join("schedules");
    let args = |out: &PathBuf| vec!["sweep".to_string(), "--n".into(), "2".into(), "--points".into(), "3".into(), "--out".into(), out.to_str().unwrap().into()];
    let mut first = args(&a);
    first.extend(["--dump-dir".to_string(), dump.to_str().unwrap().to_string()]);
    assert_eq!(bin().args(&first).output().unwrap().status.code(), Some(0));
    assert_eq!(bin().args(args(&b)).output().unwrap().status.code(), Some(0));
    let text = fs::read(&a).unwrap();
    assert_eq!(text, fs::read(&b).unwrap());
    let text = String::from_utf8(text).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "theta,t_A,t_A_r,fidelity_bdaqc,fidelity_dqc,gate_count,block_count");
    assert_eq!(lines.len(), 4);
    for k in 0..3 {
        assert!(dump.join(format!("schedule_{k:03}.json")).exists());
    }
}

#[test]
fn simulate_reports_fidelity() {
    let dir = scratch("simulate");
    let sched = dir.join("s.json");
    assert_eq!(run(&["compile", "--n", "2", "--theta", "1.0", "--no-prune", "--out", sched.to_str().unwrap()]).status.code(), Some(0));
    let fid = |args: &[&str]| -> f64 {
        let o = run(args);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
        v["fidelity"].as_f64().unwrap()
    };
    let s = sched.to_str().unwrap();
    let exact = fid(&["simulate", "--schedule", s, "--mode", "sdaqc", "--noiseless"]);
    assert!(exact > 1.0 - 1e-6, "noiseless {exact}");
    let noisy = fid(&["simulate", "--schedule", s, "--mode", "bdaqc"]);
    assert!(noisy < exact && noisy > 0.5);
    let digital = fid(&["simulate", "--n", "2", "--theta", "1.0", "--mode", "digital"]);
    assert!(digital < 1.0 && digital > 0.5);
    assert_eq!(run(&["simulate", "--mode", "bdaqc"]).status.code(), Some(2));
}
