use std::path::PathBuf;
use std::process::{Command, Output};

use elliptic_gt::rmatrix::{b_bar, rbar};
use elliptic_gt::{Complex64, DynamicalState, EllipticParams};
use serde_json::Value;

fn ellgt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ellgt")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn complex(v: &Value) -> Complex64 {
    Complex64::new(v[0].as_f64().unwrap(), v[1].as_f64().unwrap())
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ellgt-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

/// Rows of a table CSV as `(first key, second key, value, all fields)`, with
/// the value read from the `re` and `im` columns.
fn csv_cells(text: &str) -> Vec<(String, String, Complex64, Vec<String>)> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let (re, im) = (col("re"), col("im"));
    lines
        .map(|line| {
            let f: Vec<String> = line.split(',').map(str::to_string).collect();
            let v = Complex64::new(f[re].parse().unwrap(), f[im].parse().unwrap());
            (f[0].clone(), f[1].clone(), v, f)
        })
        .collect()
}

#[test]
fn rmat_matches_the_library() {
    let out = ellgt(&["rmat", "--N", "2", "--q", "0.5", "--r", "3", "--u", "0.2", "--P", "0.7"]);
    assert!(out.status.success());
    let v = json(&out);
    let rows = v["entries"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    let params = EllipticParams::real(0.5, 3.0, 2).unwrap();
    let state = DynamicalState::new(vec![Complex64::new(0.7, 0.0), Complex64::new(0.0, 0.0)]);
    let want = rbar(Complex64::new(0.2, 0.0), &state, &params).unwrap().entries;
    for (r, row) in rows.iter().enumerate() {
        for (c, x) in row.as_array().unwrap().iter().enumerate() {
            assert_eq!(complex(x), want[(r, c)], "entry ({r}, {c})");
        }
    }
}

#[test]
fn rmat_at_zero_is_the_permutation() {
    let v = json(&ellgt(&["rmat", "--u", "0", "--P", "0.7"]));
    let perm = [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]];
    for (r, row) in v["entries"].as_array().unwrap().iter().enumerate() {
        for (c, x) in row.as_array().unwrap().iter().enumerate() {
            assert_eq!(complex(x), Complex64::new(perm[r][c] as f64, 0.0));
        }
    }
}

#[test]
fn rmat_dybe_table_is_below_tolerance() {
    let out = ellgt(&["rmat", "--check", "dybe", "--samples", "100"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let rows: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(rows.len(), 100);
    assert!(rows.iter().all(|&r| r < 1e-8));
}

#[test]
fn weights_table_is_triangular_with_flagged_zeros() {
    let z = "0.31+0.12i 0.13-0.21i -0.27+0.05i";
    let out = ellgt(&["weights", "--lambda", "2,1", "--variant", "tilde", "--z", z, "--P", "0.37+0.11i -0.19+0.23i"]);
    assert!(out.status.success());
    let cells = csv_cells(&stdout(&out));
    assert_eq!(cells.len(), 9);
    for (i, j, v, fields) in &cells {
        if fields[5] == "true" {
            assert_eq!(*v, Complex64::new(0.0, 0.0), "cell ({i}, {j})");
        }
    }
    let flagged = cells.iter().filter(|c| c.3[5] == "true").count();
    assert_eq!(flagged, 3);
    // Independent entries of the three-site table: the last row is the unit
    // vector and the middle diagonal entry is `b̄(u_2 − u_1)`.
    let params = EllipticParams::real(0.5, 3.0, 2).unwrap();
    let u1 = Complex64::new(0.31, 0.12);
    let u2 = Complex64::new(0.13, -0.21);
    let get = |i: &str, j: &str| cells.iter().find(|c| c.0 == i && c.1 == j).unwrap().2;
    assert!((get("211", "211") - 1.0).norm() < 1e-12);
    assert!((get("121", "121") - b_bar(&params, u2 - u1).unwrap()).norm() < 1e-12);
}

#[test]
fn orthogonality_grid_is_the_identity() {
    let out = ellgt(&["weights", "--lambda", "2,1,1", "--table", "orthogonality"]);
    assert!(out.status.success());
    for (j, k, v, _) in csv_cells(&stdout(&out)) {
        let want = if j == k { 1.0 } else { 0.0 };
        assert!((v - want).norm() < 1e-8, "({j}, {k}) = {v}");
    }
}

#[test]
fn gtbasis_agrees_with_weights() {
    let out = ellgt(&["gtbasis", "--lambda", "2,1,1", "--check"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout(&out).lines().count(), 1 + 144);
}

#[test]
fn shuffle_product_closes() {
    let v = json(&ellgt(&["shuffle", "--left", "21", "--right", "1"]));
    assert!(v["closure_residual"].as_f64().unwrap() < 1e-8);
    assert_eq!(v["basis"].as_array().unwrap().len(), 3);
}

#[test]
fn verify_report_schema_and_determinism() {
    let args = ["verify", "--suite", "theta,rmatrix", "--samples", "20"];
    let a = ellgt(&args);
    let b = ellgt(&[&args[..], &["--workers", "1"]].concat());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    for key in ["suite", "version", "config_digest", "seed", "max_residual", "pass", "cases"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    let case = &v["cases"][0];
    for key in ["name", "paper_ref", "residual", "pass"] {
        assert!(case.get(key).is_some(), "missing case field {key}");
    }
    assert_eq!(v["suite"], "theta,rmatrix");
}

#[test]
fn injected_fault_fails_dybe() {
    let out = ellgt(&["verify", "--suite", "rmatrix", "--samples", "10", "--inject-fault", "negate-cbar"]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["pass"], false);
    let failing: Vec<&str> =
        v["cases"].as_array().unwrap().iter().filter(|c| c["pass"] == false).map(|c| c["name"].as_str().unwrap()).collect();
    assert!(!failing.is_empty() && failing.iter().all(|n| n.starts_with("DYBE")), "{failing:?}");
}

#[test]
fn worked_example_run() {
    let out = ellgt(&["verify", "--suite", "gt", "--lambda", "2,2,1", "--n", "5", "--samples", "10"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    let worked: Vec<&Value> =
        v["cases"].as_array().unwrap().iter().filter(|c| c["name"].as_str().unwrap().starts_with("worked example")).collect();
    assert_eq!(worked.len(), 3);
    assert!(worked.iter().all(|c| c["pass"] == true));
}

#[test]
fn flags_override_the_config_file() {
    let path = scratch("run.cfg");
    std::fs::write(&path, "seed = 5\nsamples = 7\nsuite = theta\n").unwrap();
    let cfg = path.to_str().unwrap();
    let from_file = json(&ellgt(&["verify", "--config", cfg]));
    let from_flags = json(&ellgt(&["verify", "--suite", "theta", "--seed", "5", "--samples", "7"]));
    assert_eq!(from_file["config_digest"], from_flags["config_digest"]);
    let overridden = json(&ellgt(&["verify", "--config", cfg, "--seed", "6"]));
    assert_eq!(overridden["seed"], 6);
    assert_ne!(overridden["config_digest"], from_file["config_digest"]);
}

#[test]
fn config_errors_exit_with_two() {
    let path = scratch("bad.cfg");
    std::fs::write(&path, "colour = 3\n").unwrap();
    assert_eq!(ellgt(&["verify", "--config", path.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(ellgt(&["weights", "--lambda", "2,1", "--n", "4"]).status.code(), Some(2));
}
