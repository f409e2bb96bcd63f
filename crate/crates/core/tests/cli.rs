use std::path::Path;
use std::process::Command;

fn rement(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_rement")).args(args).output().expect("binary runs")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn unknown_preset_exits_with_config_code() {
    let out = rement(&["sweep", "--preset", "nope"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("preset"));
}

#[test]
fn bad_config_field_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg: serde_json::Value =
        serde_json::from_str(include_str!("../configs/ideal.json")).unwrap();
    cfg["system"]["eta"] = serde_json::json!(1.5);
    let path = dir.path().join("bad.json");
    std::fs::write(&path, cfg.to_string()).unwrap();
    let out = rement(&["gain", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("system.eta"));
}

#[test]
fn unknown_config_key_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg: serde_json::Value =
        serde_json::from_str(include_str!("../configs/ideal.json")).unwrap();
    cfg["drive"]["epsilon"] = serde_json::json!(1.0);
    let path = dir.path().join("bad.json");
    std::fs::write(&path, cfg.to_string()).unwrap();
    assert_eq!(rement(&["cavity", "--config", path.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn trajectory_is_reproducible_and_filterable() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for d in [&a, &b] {
        let out = rement(&["trajectory", "--preset", "ideal", "--traj", "5", "--seed", "11", "--out", d.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(std::fs::read(a.join("record.csv")).unwrap(), std::fs::read(b.join("record.csv")).unwrap());
    let manifest = json(&a.join("manifest.json"));
    assert_eq!(manifest["base_seed"], 11);
    assert_eq!(manifest["trajectories"][0], 5);

    let f = dir.path().join("f");
    let out = rement(&[
        "filter",
        "--preset",
        "ideal",
        "--record",
        a.join("record.csv").to_str().unwrap(),
        "--out",
        f.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s1 = json(&a.join("summary.json"));
    let s2 = json(&f.join("summary.json"));
    let gap = (s1["i_m"].as_f64().unwrap() - s2["i_m"].as_f64().unwrap()).abs();
    assert!(gap < 1e-9, "{gap}");
}

#[test]
fn malformed_record_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let rec = dir.path().join("r.csv");
    std::fs::write(&rec, "t_us,dI_r,dQ_r\n0,1,oops\n").unwrap();
    let out = rement(&["filter", "--preset", "ideal", "--record", rec.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn small_ensemble_and_sweep_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = rement(&["ensemble", "--preset", "ideal", "--traj", "40", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["trajectories.csv", "histogram_I.csv", "histogram_Q.csv", "ensemble.json", "manifest.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let e = json(&dir.path().join("ensemble.json"));
    assert_eq!(e["n_traj"], 40);
    assert_eq!(e["complete"], true);

    let out = rement(&["sweep", "--preset", "realistic", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let sweep = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 142);
}

#[test]
fn most_probable_cli() {
    let dir = tempfile::tempdir().unwrap();
    let out = rement(&["mostprobable", "--preset", "ideal", "--q-target", "1.5", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s = json(&dir.path().join("summary.json"));
    assert!((s["q_m"].as_f64().unwrap() - 1.5).abs() < 1e-9);
    assert_eq!(s["zz_monotone"], true);
}
