use std::path::Path;
use std::process::{Command, Output};

fn cmc(args: &[&str], dir: &Path) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_cmc")).args(args).current_dir(dir).output().unwrap();
    assert!(out.status.success(), "cmc {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn gen_arch_and_patch_plan() {
    let dir = tempfile::tempdir().unwrap();
    let map = json(&cmc(&["gen-arch", "--arch", "tokyo"], dir.path()));
    assert_eq!(map["num_qubits"], 20);
    let plan = json(&cmc(&["patch-plan", "--arch", "grid:3x3", "-k", "1"], dir.path()));
    let patches: usize = plan["groups"].as_array().unwrap().iter().map(|g| g.as_array().unwrap().len()).sum();
    assert_eq!(patches, 12);
}

#[test]
fn calibrate_then_mitigate_and_err_map() {
    let dir = tempfile::tempdir().unwrap();
    cmc(&["calibrate", "--arch", "linear:3", "--shots", "80000", "--seed", "4", "--out", "store.json"], dir.path());
    let store: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("store.json")).unwrap()).unwrap();
    assert_eq!(store["version"], 1);

    std::fs::write(dir.path().join("counts.json"), r#"{"000": 900, "111": 80, "010": 20}"#).unwrap();
    let d = json(&cmc(&["mitigate", "--store", "store.json", "--counts", "counts.json"], dir.path()));
    let total: f64 = d["probabilities"].as_object().unwrap().values().map(|v| v.as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);

    let sub = json(&cmc(
        &["mitigate", "--store", "store.json", "--counts", "counts.json", "--measured", "0,1,2"],
        dir.path(),
    ));
    assert_eq!(sub, d);

    let report = json(&cmc(&["err-map", "--counts", "store.json"], dir.path()));
    assert!(report["err_map"]["edges"].is_array());
}

#[test]
fn bench_overrides_and_json_lines() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("cfg.json"),
        r#"{"architectures": ["grid:2x2"], "noise": {"kind": "uniform", "p01": 0.02, "p10": 0.05},
            "methods": [{"method": "bare"}, {"method": "cmc"}], "trials": 10, "seed": 1}"#,
    )
    .unwrap();
    let out = cmc(
        &["bench", "--config", "cfg.json", "--trials", "2", "--shots", "4000", "--format", "json"],
        dir.path(),
    );
    let lines: Vec<serde_json::Value> =
        String::from_utf8(out.stdout).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 4);
    assert!(lines.iter().all(|r| r["error"].is_null()));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mean one-norm"));
}

#[test]
fn bench_without_config_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_cmc")).arg("bench").current_dir(dir.path()).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn x_chain_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = cmc(&["x-chain", "--depth", "4", "--shots", "500"], dir.path());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.starts_with("depth,ideal,error_rate,expected,sigma"));
}
