use std::process::Command;

use hml::atoms::make_smooth_atom;
use hml::{Cube, Grid, MorreyParams};

fn hml() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hml"))
}

#[test]
fn list_and_describe() {
    let out = hml().arg("list").output().unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 13);

    let out = hml().args(["describe", "psido-blowup"]).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("⟨D⟩^m for m>0 is not bounded"));

    let out = hml().args(["describe", "nosuch"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("nosuch"));
}

#[test]
fn run_writes_outputs_and_reports_status() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("hkp.toml");
    std::fs::write(&cfg, "experiment = \"hkp-closedform\"\nseed = 1\n[options]\nk = [1]\neps = [1]\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = hml().env("HML_THREADS", "2").args(["run"]).arg(&cfg).arg("--out").arg(&out_dir).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8(out.stdout).unwrap().contains("[PASS] closed_form"));
    assert!(out_dir.join("results.json").is_file());
    assert!(out_dir.join("cases.csv").is_file());

    // a failing check exits with status 1
    std::fs::write(&cfg, "experiment = \"hkp-closedform\"\nseed = 1\n[options]\nk = [1]\neps = [1]\n[tolerances]\ngrowth = -1.0\n").unwrap();
    let out = hml().args(["run"]).arg(&cfg).arg("--out").arg(&out_dir).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn invalid_config_and_thread_count_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "experiment = \"morrey-scaling\"\nseed = 1\n[grid]\nsamples = 1000\n").unwrap();
    let out = hml().args(["run"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("grid.samples"));

    let out = hml().env("HML_THREADS", "0").arg("list").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_atom_accepts_atoms_and_rejects_oversized_ones() {
    let dir = tempfile::tempdir().unwrap();
    let g = Grid::new(1, 4.0, 512).unwrap();
    let p = MorreyParams::new(0.5, 1.0).unwrap();
    let mut a = make_smooth_atom(&g, &p, &Cube::from_corner(&[0.0], 0.5).unwrap(), 4).unwrap();
    let good = dir.path().join("good.json");
    a.save(&good).unwrap();
    let out = hml().args(["verify-atom"]).arg(&good).output().unwrap();
    assert!(out.status.success());
    let cert: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(cert["passed"], serde_json::Value::Bool(true));

    a.data = a.data.scale_real(3.0);
    let bad = dir.path().join("bad.json");
    a.save(&bad).unwrap();
    let out = hml().args(["verify-atom"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}
