use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

use psi_lab::cli::RunConfig;
use psi_lab::seminorm::y_norm;
use psi_lab::transform::CoeffArray;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_psi-lab"));
    c.env_remove("PSI_LAB_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn psi-lab")
}

fn run_json(args: &[&str]) -> (i32, Value) {
    let out = run(args);
    let code = out.status.code().unwrap();
    let v = serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)));
    (code, v)
}

fn coeffs(v: &Value) -> CoeffArray {
    CoeffArray::from_json_value(&v["result"]).unwrap()
}

#[test]
fn transform_shannon_indicator_is_unit_vector() {
    let (code, v) = run_json(&["transform", "--bell", "shannon", "--input", "indicator12", "--jmin", "-2", "--jmax", "2", "--kmax", "8"]);
    assert_eq!(code, 0);
    let c = coeffs(&v);
    for idx in c.window.indices() {
        let z = c.get(idx.j, idx.k).unwrap();
        let target = if idx.j == 0 && idx.k == 0 { 1.0 } else { 0.0 };
        assert!((z.re - target).abs() < 1e-10 && z.im.abs() < 1e-10, "{idx:?}: {z}");
    }
    assert_eq!(c.to_json_value().unwrap(), v["result"]);
}

#[test]
fn transform_meyer_bump_has_finite_y_norm() {
    let (code, v) = run_json(&["transform", "--bell", "meyer", "--input", "bump12", "--kmax", "64"]);
    assert_eq!(code, 0);
    let c = coeffs(&v);
    assert_eq!(c.window.k_max, 64);
    let y = y_norm(&c, 0.0, 4);
    assert!(y.is_finite() && y > 0.0);
}

#[test]
fn usage_errors_exit_3() {
    assert_eq!(run(&["transform", "--input", "bump12", "--jmin", "3", "--jmax", "1"]).status.code(), Some(3));
    let out = run(&["transform", "--input", "no-such-entry"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no-such-entry"));
    assert_eq!(run(&["gram", "--bogus"]).status.code(), Some(3));
    assert_eq!(run(&["verify", "--lemma", "isoXY"]).status.code(), Some(3));
    assert_eq!(run(&["transform", "--input", "bump12", "--tol", "-1"]).status.code(), Some(3));
}

#[test]
fn config_file_fields_are_checked() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    fs::write(&p, r#"{"windw": {"jmin": 0}}"#).unwrap();
    let out = run(&["transform", "--input", "bump12", "--config", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("windw"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("run.json");
    fs::write(&p, r#"{"bell": {"kind": "shannon"}, "window": {"jmin": -1, "jmax": 1, "kmax": 4}, "tol": 1e-9}"#).unwrap();
    let (code, v) = run_json(&["transform", "--input", "bump12", "--config", p.to_str().unwrap(), "--kmax", "6"]);
    assert_eq!(code, 0);
    let cfg: RunConfig = serde_json::from_value(v["config"].clone()).unwrap();
    assert_eq!((cfg.window.j_min, cfg.window.j_max, cfg.window.k_max), (-1, 1, 6));
    assert_eq!(cfg.tol, 1e-9);
    assert_eq!(v["result"]["bell_id"], "shannon");
}

#[test]
fn gram_shannon_is_identity() {
    let (code, v) = run_json(&["gram", "--bell", "shannon", "--jmin", "-4", "--jmax", "4", "--kmax", "16"]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["dim"], 9 * 33);
    assert!(v["result"]["max_off_diagonal"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn verify_lemma2_meyer_has_margin() {
    let (code, v) = run_json(&["verify", "--lemma", "2", "--n", "0", "--bell", "meyer"]);
    assert_eq!(code, 0);
    assert!(v["result"]["margin"].as_f64().unwrap() > 0.0);
    assert_eq!(v["command"]["lemma"], "2");
}

#[test]
fn verify_duality_refuses_meyer() {
    let out = run(&["verify", "--lemma", "duality", "--bell", "meyer"]);
    assert_eq!(out.status.code(), Some(6));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["result"]["status"], "refused");
}

#[test]
fn classify_chirp_is_om_not_oc() {
    let (code, v) = run_json(&["classify", "--bell", "meyer", "--input", "sinx2"]);
    assert_eq!(code, 0);
    let flags: Vec<&str> = v["result"]["flags"].as_array().unwrap().iter().map(|f| f.as_str().unwrap()).collect();
    let unprimed: Vec<&str> = flags.iter().copied().filter(|f| !f.ends_with('\'')).collect();
    assert_eq!(unprimed, ["O_M", "E"]);
    assert_eq!(v["result"]["coherent"], true);
}

#[test]
fn classify_window_limited_chirp_warns() {
    // row j = 4 carries mass beyond kmax/2
    let out = run(&["classify", "--input", "sinx2", "--jmax", "4"]);
    assert_eq!(out.status.code(), Some(2));
}

fn same_bytes(a: &Path, b: &Path) -> bool {
    fs::read(a).unwrap() == fs::read(b).unwrap()
}

#[test]
fn outputs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().join("out.json");
    let o_s = o.to_str().unwrap();
    let copy = dir.path().join("first.json");
    for args in [
        vec!["classify", "--input", "schwartz"],
        vec!["transform", "--input", "expx", "--format", "csv"],
        vec!["gram", "--bell", "meyer", "--jmin", "-1", "--jmax", "1", "--kmax", "4", "--format", "csv"],
    ] {
        let mut a = args.clone();
        a.extend(["--threads", "1", "-o", o_s]);
        let status = run(&a).status;
        assert!(matches!(status.code(), Some(0 | 2)));
        fs::copy(&o, &copy).unwrap();
        let mut b = args.clone();
        b.extend(["-o", o_s]);
        bin().args(&b).env("PSI_LAB_THREADS", "4").status().unwrap();
        assert!(same_bytes(&o, &copy), "{args:?}");
    }
}

#[test]
fn csv_output_carries_config_line() {
    let out = run(&["transform", "--bell", "shannon", "--input", "indicator12", "--jmin", "0", "--jmax", "0", "--kmax", "1", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let head: Value = serde_json::from_str(lines.next().unwrap().strip_prefix("# ").unwrap()).unwrap();
    let cfg: RunConfig = serde_json::from_value(head["config"].clone()).unwrap();
    assert_eq!(cfg.window.k_max, 1);
    assert_eq!(lines.next(), Some("j,k,re,im,abs"));
    assert_eq!(lines.count(), 3);
}

#[test]
fn design_profile_feeds_back_as_bell() {
    let dir = tempfile::tempdir().unwrap();
    let prof = dir.path().join("profile.json");
    let (code, v) = run_json(&["design", "--max-iters", "200", "--profile-out", prof.to_str().unwrap()]);
    assert_eq!(code, 0, "{}", v["result"]["explanation"]);
    let f0 = v["result"]["initial_objective"].as_f64().unwrap();
    let f1 = v["result"]["final_objective"].as_f64().unwrap();
    assert!(f0 / f1 >= 10.0);
    let out = run(&["transform", "--bell", "spline-file", "--profile", prof.to_str().unwrap(), "--input", "bump12", "--jmin", "0", "--jmax", "1", "--kmax", "4"]);
    assert!(matches!(out.status.code(), Some(0 | 2)));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["config"]["bell"]["kind"], "spline-file");
}

#[test]
fn design_refuses_narrow_support() {
    let (code, v) = run_json(&["design", "--support-lo", "1", "--support-hi", "3.5"]);
    assert_eq!(code, 6);
    assert_eq!(v["result"]["status"], "infeasible-support");
}

#[test]
fn reconstruct_shannon_indicator() {
    let (code, v) = run_json(&["reconstruct", "--bell", "shannon", "--input", "indicator12", "--samples", "9"]);
    assert_eq!(code, 0);
    assert!(v["result"]["l2_error"]["value"].as_f64().unwrap() <= 1e-10);
    assert_eq!(v["result"]["curves"]["x"].as_array().unwrap().len(), 9);
}

#[test]
fn samples_file_input() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("tri.csv");
    fs::write(&p, "x,re\n1.0,0.0\n1.5,0.5\n2.0,0.0\n").unwrap();
    let (code, v) = run_json(&["transform", "--bell", "shannon", "--input", p.to_str().unwrap(), "--jmin", "0", "--jmax", "0", "--kmax", "2"]);
    assert_eq!(code, 0);
    let c = coeffs(&v);
    // mean of the tent over [1,2]
    assert!((c.get(0, 0).unwrap().re - 0.25).abs() < 1e-12);
}

#[test]
fn corpus_manifest_lists_entries() {
    let (code, v) = run_json(&["corpus"]);
    assert_eq!(code, 0);
    let ids: Vec<&str> = v["result"].as_array().unwrap().iter().map(|e| e["id"].as_str().unwrap()).collect();
    assert_eq!(ids, psi_lab::corpus::ids());
}
