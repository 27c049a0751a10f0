use std::path::Path;
use std::process::Command;

use stpaps_cli::bundled_scenario_dir;
use stpaps_cli::runner::{load_scenario, WeightsFile};

fn stpaps() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stpaps"))
}

fn table2() -> String {
    bundled_scenario_dir().join("table2.json").display().to_string()
}

fn run_into(out: &Path, extra: &[&str]) -> std::process::Output {
    let mut cmd = stpaps();
    cmd.args(["run", "--scenario", &table2(), "--duration", "0.05", "--out"]).arg(out).args(extra);
    cmd.output().unwrap()
}

#[test]
fn bundled_scenarios_load_and_round_trip() {
    let mut names: Vec<_> = std::fs::read_dir(bundled_scenario_dir()).unwrap().map(|e| e.unwrap().path()).collect();
    names.sort();
    assert_eq!(names.len(), 5);
    for path in names {
        let sc = load_scenario(&path).unwrap();
        sc.validate().unwrap();
        let back = stpaps_core::signals::Scenario::from_json(&sc.to_json().unwrap()).unwrap();
        assert_eq!(back, sc, "{}", path.display());
    }
}

#[test]
fn run_writes_outputs_and_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = run_into(d.path(), &["--methods", "stpaps,mvdr1,pmin"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for f in ["cn0_stpaps.csv", "cn0_mvdr1.csv", "cn0_pmin.csv", "suppression.csv", "weights_stpaps.json", "cn0.svg"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        assert_eq!(x, std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let cn0 = std::fs::read_to_string(a.path().join("cn0_stpaps.csv")).unwrap();
    assert!(cn0.starts_with("epoch_ms,cn0_dbhz,lost\n"));
    assert_eq!(cn0.lines().count(), 1 + 2);
}

#[test]
fn seed_changes_the_output() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(run_into(a.path(), &["--methods", "mvdr1"]).status.success());
    assert!(run_into(b.path(), &["--methods", "mvdr1", "--seed", "7"]).status.success());
    let x = std::fs::read(a.path().join("cn0_mvdr1.csv")).unwrap();
    assert_ne!(x, std::fs::read(b.path().join("cn0_mvdr1.csv")).unwrap());
}

#[test]
fn invalid_configs_fail_cleanly() {
    let d = tempfile::tempdir().unwrap();
    for extra in [&["--methods", "nope"][..], &["--duration", "0"], &["--loading", "-1"], &["--m-taps", "0"]] {
        let mut cmd = stpaps();
        cmd.args(["run", "--scenario", &table2(), "--out"]).arg(d.path()).args(extra);
        let out = cmd.output().unwrap();
        assert!(!out.status.success(), "{extra:?}");
        assert!(!out.stderr.is_empty());
    }
    let out = stpaps().args(["run", "--scenario", "/no/such/file.json"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("/no/such/file.json"));
}

#[test]
fn gain_map_from_saved_weights() {
    let d = tempfile::tempdir().unwrap();
    assert!(run_into(d.path(), &["--methods", "stpaps"]).status.success());
    let weights = d.path().join("weights_stpaps.json");
    let w = WeightsFile::load(&weights).unwrap();
    assert_eq!(w.weights.len(), 30);
    let out = stpaps()
        .args(["gain-map", "--phi-step", "30", "--theta-step", "30", "--weights"])
        .arg(&weights)
        .arg("--out")
        .arg(d.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let entries: Vec<String> =
        std::fs::read_dir(d.path()).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    assert!(entries.iter().any(|n| n.starts_with("gain_map") && n.ends_with(".csv")), "{entries:?}");
    assert!(entries.iter().any(|n| n.starts_with("gain_map") && n.ends_with(".svg")), "{entries:?}");
}

#[test]
fn sweep_jnr_csv() {
    let d = tempfile::tempdir().unwrap();
    let out = stpaps()
        .args(["sweep-jnr", "--scenario", &table2(), "--duration", "0.2", "--methods", "mvdr1", "--jnr", "30,50", "--out"])
        .arg(d.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(d.path().join("sweep_jnr.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "jnr_db,method,mean_cn0_dbhz,lost_epochs,epochs");
    assert_eq!(lines.len(), 3);
}
