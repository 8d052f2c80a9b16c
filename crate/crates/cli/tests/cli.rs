use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn plateau(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plateau")).args(args).output().unwrap()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)))
}

fn problem(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("problems").join(name)
}

fn strip(v: &mut Value) {
    plateau_core::io::strip_timing(v);
}

#[test]
fn grid_level_two_has_sixteen_faces() {
    let out = plateau(&["grid", "--bbox", "0,0,1,1", "--level", "2"]);
    assert!(out.status.success());
    let v = report(&out);
    assert_eq!(v["counts"], serde_json::json!([25, 40, 16]));
}

#[test]
fn cube_bottom_optima_agree() {
    let p = problem("cube_bottom.json");
    let out = plateau(&["compare", "--problem", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = report(&out);
    assert_eq!(v["result"]["size_side"]["value"], 1.0);
    assert_eq!(v["result"]["set_side"]["value"], 1.0);
    assert_eq!(v["result"]["equal"], true);
}

#[test]
fn slab_loop_optima_agree() {
    let p = problem("slab_loop.json");
    let v = report(&plateau(&["compare", "--problem", p.to_str().unwrap()]));
    assert_eq!(v["result"]["size_side"]["value"], 2.0);
    assert_eq!(v["result"]["set_side"]["value"], 2.0);
}

#[test]
fn reruns_are_identical_up_to_timing() {
    let p = problem("cube_bottom.json");
    let mut a = report(&plateau(&["compare", "--problem", p.to_str().unwrap()]));
    let mut b = report(&plateau(&["compare", "--problem", p.to_str().unwrap(), "--sequential"]));
    strip(&mut a);
    strip(&mut b);
    assert_eq!(a, b);
}

#[test]
fn mass_size_suite_passes() {
    let out = plateau(&["verify", "le-MS", "--trials", "1000", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = report(&out);
    assert_eq!(v["suites"][0]["violations"], 0);
    assert_eq!(v["suites"][0]["passed"], true);
}

#[test]
fn schema_errors_exit_two_with_a_path() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(
        &p,
        r#"{"version":1,"complex":{"grid":{"bbox":[[0,0],[1,1]],"level":1,"lvl":2}},"group":{"kind":"Z"},"d":1,
           "condition":{"kind":"cycle-boundary","chain":{"dim":0}}}"#,
    )
    .unwrap();
    let out = plateau(&["minsize", "--problem", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("complex.grid") && err.contains("lvl"), "{err}");
    assert_eq!(plateau(&["grid", "--level", "1"]).status.code(), Some(2));
}

#[test]
fn infeasible_conditions_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("point.json");
    std::fs::write(
        &p,
        r#"{"version":1,"complex":{"grid":{"bbox":[[0,0],[1,1]],"level":1}},"group":{"kind":"Z"},"d":1,
           "condition":{"kind":"cycle-boundary","chain":{"dim":0,"coeffs":[[0,1]]}}}"#,
    )
    .unwrap();
    assert_eq!(plateau(&["minsize", "--problem", p.to_str().unwrap()]).status.code(), Some(3));
}

#[test]
fn deform_writes_overlay_and_data() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("loop.json");
    std::fs::write(&input, r#"{"polylines":[{"points":[[0.1,0.2],[0.8,0.3],[0.6,0.9]],"closed":true}]}"#).unwrap();
    let svg = dir.path().join("fig/overlay.svg");
    let out = plateau(&[
        "deform",
        "--bbox",
        "0,0,1,1",
        "--level",
        "3",
        "--input",
        input.to_str().unwrap(),
        "--seed",
        "4",
        "--svg",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = report(&out);
    assert_eq!(v["certificate"]["identity_holds"], true);
    assert!(std::fs::read_to_string(&svg).unwrap().contains("<svg"));
    let csv = std::fs::read_to_string(svg.with_extension("csv")).unwrap();
    assert_eq!(csv.lines().count(), v["output"]["coeffs"].as_array().unwrap().len() + 1);
}

#[test]
fn phi_of_unit_square_is_its_area() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("sq.json");
    std::fs::write(&p, r#"{"pieces":[{"vertices":[[0,0],[1,0],[1,1],[0,1]],"dim":2}]}"#).unwrap();
    let v = report(&plateau(&["phi", "--set", p.to_str().unwrap()]));
    assert!((v["value"].as_f64().unwrap() - 1.0).abs() <= 1e-12);
}

#[test]
fn homology_of_a_grid_is_connected() {
    let v = report(&plateau(&["homology", "--bbox", "0,0,1,1", "--level", "2", "--dim", "0", "--group", "Z2"]));
    assert_eq!(v["free_rank"], 1);
    let v = report(&plateau(&["homology", "--bbox", "0,0,1,1", "--level", "2", "--dim", "1"]));
    assert_eq!(v["free_rank"], 0);
}
