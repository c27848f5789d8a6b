use serde_json::Value;
use std::fs;
use std::process::Command;

fn run(args: &[&str]) -> (i32, Value, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_fractal-zeta")).args(args).output().expect("spawn");
    let stdout = String::from_utf8(out.stdout).unwrap();
    let json = serde_json::from_str(&stdout).unwrap_or(Value::Null);
    (out.status.code().unwrap(), json, String::from_utf8(out.stderr).unwrap())
}

#[test]
fn build_writes_edge_lists_and_descriptors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, json, _) = run(&["build", "--family", "gasket", "--levels", "4", "--out", out]);
    assert_eq!(code, 0);
    assert_eq!(json["schema"], 1);
    let levels = json["levels"].as_array().unwrap();
    assert_eq!(levels.len(), 4);
    let vertices: Vec<u64> = levels.iter().map(|l| l["V"].as_u64().unwrap()).collect();
    assert_eq!(vertices, vec![3, 6, 15, 42]);
    assert_eq!(levels[1]["eps"], "1/2");
    assert!(levels[3]["eps"].is_null());
    for n in 1..=4 {
        assert!(dir.path().join(format!("level_{n}.edges")).exists());
    }
    let saved: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(saved, json);
}

#[test]
fn build_single_square_and_rejects_huge_levels() {
    let (code, json, _) = run(&["build", "--family", "vicsek", "--levels", "1"]);
    assert_eq!(code, 0);
    assert_eq!(json["levels"][0]["V"], 4);
    assert_eq!(json["levels"][0]["E"], 4);
    let (code, _, err) = run(&["build", "--family", "gasket", "--levels", "40"]);
    assert_eq!(code, 2);
    assert!(err.contains("predicted"), "{err}");
}

#[test]
fn unknown_family_is_a_usage_error() {
    let (code, _, err) = run(&["build", "--family", "koch"]);
    assert_ne!(code, 0);
    assert_ne!(code, 2);
    assert!(err.contains("unknown family"), "{err}");
}

#[test]
fn counts_agree_with_oracle_and_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let args = ["counts", "--family", "gasket", "--levels", "5", "--order", "8", "--out", out];
    let (code, json, _) = run(&args);
    assert_eq!(code, 0);
    assert_eq!(json["oracle"]["disagreements"], 0);
    let first = fs::read_to_string(dir.path().join("counts.csv")).unwrap();
    assert!(first.starts_with("m,level,tr_Am_num,tr_Am_den,t_m,N_m,err_m\n"));
    let (code, _, _) = run(&args);
    assert_eq!(code, 0);
    assert_eq!(fs::read_to_string(dir.path().join("counts.csv")).unwrap(), first);
}

#[test]
fn counts_at_order_two_vanish() {
    let (code, json, _) = run(&["counts", "--family", "gasket", "--levels", "4", "--order", "2", "--mode", "float"]);
    assert_eq!(code, 0);
    let rows = json["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r["N_m"].as_f64() == Some(0.0)));
}

#[test]
fn counts_flag_a_truncated_oracle() {
    let (code, json, _) = run(&["counts", "--family", "carpet", "--levels", "3", "--order", "8", "--budget", "2000"]);
    assert_eq!(code, 2);
    assert!(json["oracle"]["truncated"].is_object(), "{json}");
    assert_eq!(json["rows"].as_array().unwrap().len(), 8);
}

#[test]
fn order_above_cap_is_rejected() {
    let (code, _, _) = run(&["counts", "--family", "gasket", "--order", "65"]);
    assert_eq!(code, 2);
}

#[test]
fn zeta_methods_agree_and_reject_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.txt");
    fs::write(&grid, "# points\n0,0\n0.05,0\n\n0.3,0\n").unwrap();
    let (code, json, _) = run(&["zeta", "--family", "gasket", "--levels", "5", "--grid", grid.to_str().unwrap()]);
    assert_eq!(code, 2);
    let points = json["points"].as_array().unwrap();
    assert_eq!(points.len(), 3);
    for e in points[0]["evaluations"].as_array().unwrap() {
        assert_eq!(e["value"][0], 1.0);
        assert_eq!(e["value"][1].as_f64().unwrap().abs(), 0.0);
    }
    assert_eq!(points[1]["evaluations"].as_array().unwrap().len(), 4);
    assert!(points[1]["max_pairwise_delta"].as_f64().unwrap() < 1e-3);
    let methods: Vec<&str> = json["rejections"].as_array().unwrap().iter().map(|r| r["method"].as_str().unwrap()).collect();
    assert!(methods.contains(&"series") && methods.contains(&"det_formula") && methods.contains(&"finite_approx"));
}

#[test]
fn funceq_residuals_on_gasket_and_rejection_elsewhere() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, json, _) = run(&["funceq", "--family", "gasket", "--levels", "6", "--out", out]);
    assert_eq!(code, 0);
    assert_eq!(json["q"], 3);
    assert_eq!(json["rows"].as_array().unwrap().len(), 8);
    let csv = fs::read_to_string(dir.path().join("residuals.csv")).unwrap();
    assert!(csv.starts_with("u_re,u_im,lambda_residual,xi_residual,Xi_residual,tolerance\n"));
    let (code, _, err) = run(&["funceq", "--family", "vicsek", "--levels", "4"]);
    assert_eq!(code, 2);
    assert!(err.contains("not essentially regular"), "{err}");
}

#[test]
fn funceq_skips_points_outside_the_domain() {
    let (code, json, _) = run(&["funceq", "--family", "gasket", "--levels", "5", "--u", "0.5,0", "--u", "0.1,0.1"]);
    assert_eq!(code, 2);
    assert_eq!(json["rows"].as_array().unwrap().len(), 1);
    assert_eq!(json["rejections"].as_array().unwrap().len(), 1);
}

#[test]
fn converge_gap_shrinks_and_guard_rejects() {
    let (code, json, _) = run(&["converge", "--family", "gasket", "--levels", "2..6", "--u", "0.05"]);
    assert_eq!(code, 0);
    assert_eq!(json["points"][0]["final_below_first"], true);
    let (code, json, _) = run(&["converge", "--family", "gasket", "--levels", "2..4", "--u", "0.2"]);
    assert_eq!(code, 2);
    assert_eq!(json["rejections"].as_array().unwrap().len(), 1);
}

#[test]
fn oracle_passes_on_small_levels() {
    let (code, json, _) = run(&["oracle", "--family", "vicsek", "--levels", "1..2", "--order", "6"]);
    assert_eq!(code, 0);
    assert_eq!(json["disagreements"], 0);
}
