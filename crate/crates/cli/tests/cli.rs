use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pathparam")).args(args).arg("--out-dir").arg(dir).output().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let k = lines.next().unwrap().split(',').position(|c| c == name).unwrap();
    lines.map(|l| l.split(',').nth(k).unwrap().parse().unwrap()).collect()
}

#[test]
fn frames_flag_the_sinusoid_inflection() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["frames", "--curve", "sin2d"]);
    assert!(out.status.success());
    let s = json(&dir.path().join("frames_summary.json"));
    assert!(!s["fsf"]["flips_at"].as_array().unwrap().is_empty() || !s["fsf"]["singular_at"].as_array().unwrap().is_empty());
    assert!(s["ptf"]["singular_at"].as_array().unwrap().is_empty());
    assert!(s["ptf"]["flips_at"].as_array().unwrap().is_empty());
    assert!(dir.path().join("fsf.csv").exists() && dir.path().join("ptf.csv").exists());
}

#[test]
fn frames_on_a_line_do_not_rotate() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(dir.path(), &["frames", "--curve", "line", "--grid", "50"]).status.success());
    let ptf = dir.path().join("ptf.csv");
    for name in ["omega_x", "omega_y", "omega_z"] {
        assert!(column(&ptf, name).iter().all(|v| *v == 0.0));
    }
    assert_eq!(column(&ptf, "theta").len(), 51);
}

#[test]
fn coil_ptf_is_slower_than_fsf() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(dir.path(), &["frames", "--curve", "coil3d", "--format", "json"]).status.success());
    let s = json(&dir.path().join("frames_summary.json"));
    assert!(s["ptf"]["max_omega"].as_f64().unwrap() < s["fsf"]["max_omega"].as_f64().unwrap());
    let t = json(&dir.path().join("ptf.json"));
    assert_eq!(t["rows"].as_array().unwrap().len(), 1001);
}

#[test]
fn continuity_single_class() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["continuity", "--class", "2"]);
    assert!(out.status.success());
    let s = json(&dir.path().join("continuity_summary.json"));
    assert_eq!(s["rows"][0]["verdicts"], serde_json::json!(["continuous", "discontinuous", "discontinuous"]));
    assert!(dir.path().join("continuity_c2.csv").exists());
    assert!(!dir.path().join("continuity_c3.csv").exists());
}

#[test]
fn odd_grid_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["continuity", "--grid", "999"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn projection_of_on_path_points_has_no_offset() {
    let dir = tempfile::tempdir().unwrap();
    let traj = dir.path().join("circle.csv");
    let mut text = String::from("t,x,y\n");
    for k in 0..40 {
        let th = 0.1 + 6.0 * k as f64 / 39.0;
        text += &format!("{},{},{}\n", 0.1 * k as f64, th.cos(), th.sin());
    }
    fs::write(&traj, text).unwrap();
    let out = run(dir.path(), &["project", "--curve", "circle", "--traj", traj.to_str().unwrap(), "--tol", "1e-8"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = dir.path().join("projection.csv");
    assert!(column(&csv, "eta1").iter().chain(column(&csv, "eta2").iter()).all(|v| v.abs() < 1e-8));
    assert_eq!(column(&csv, "t").len(), 40);
}

#[test]
fn walls_give_a_constant_corridor() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = dir.path().join("walls.csv");
    let mut text = String::new();
    for k in 0..=20 {
        let x = k as f64 / 20.0;
        text += &format!("{x},0.25,0\n{x},-0.25,0\n");
    }
    fs::write(&cloud, text).unwrap();
    let out = run(dir.path(), &["corridor", "--cloud", cloud.to_str().unwrap(), "--degree", "0"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let samples = dir.path().join("corridor_samples.csv");
    let lo = column(&samples, "eta1_low");
    let hi = column(&samples, "eta1_high");
    assert!(lo.iter().all(|v| (v + 0.25).abs() < 1e-9), "{lo:?}");
    assert!(hi.iter().all(|v| (v - 0.25).abs() < 1e-9), "{hi:?}");
}

#[test]
fn planar_corridor_feeds_the_planner() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = dir.path().join("gap.json");
    let mut pts = Vec::new();
    for k in 0..=10 {
        let x = k as f64 / 10.0;
        let y = 1.0 + 0.5 * (std::f64::consts::TAU * x).sin();
        pts.push(format!("[{x},{}]", y + 0.3));
        pts.push(format!("[{x},{}]", y - 0.3));
    }
    fs::write(&cloud, format!("[{}]", pts.join(","))).unwrap();
    let out =
        run(dir.path(), &["corridor", "--curve", "sin", "--planar", "--degree", "2", "--cloud", cloud.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let corridor = dir.path().join("corridor.json");
    let out = run(dir.path(), &["plan", "--corridor", corridor.to_str().unwrap(), "-N", "20"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("revalidation: max violation"));
    let s = json(&dir.path().join("plan_summary.json"));
    assert!(s["converged"].as_bool().unwrap());
    assert!(s["revalidation"]["max_violation"].as_f64().unwrap() <= 1e-5);
    let speed = column(&dir.path().join("trajectory.csv"), "theta1_dot");
    assert!(speed.iter().all(|v| v.abs() <= 1.0 + 1e-6));
}

#[test]
fn unconverged_plans_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["plan", "--halfwidth", "0.1", "-N", "20", "--max-outer", "1"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
    let out = run(dir.path(), &["plan", "--halfwidth", "0.1", "-N", "20", "--max-outer", "1", "--keep-unconverged"]);
    assert!(out.status.success());
    assert!(!json(&dir.path().join("plan_summary.json"))["converged"].as_bool().unwrap());
}

#[test]
fn exit_codes_separate_usage_and_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["frames", "--curve", "nope"]).status.code(), Some(1));
    assert_eq!(run(dir.path(), &["bogus"]).status.code(), Some(1));
    assert_eq!(run(dir.path(), &["project", "--traj", "/nonexistent.csv"]).status.code(), Some(2));
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "x,y\n1,2\nfoo,3\n").unwrap();
    assert_eq!(run(dir.path(), &["frames", "--curve-file", bad.to_str().unwrap()]).status.code(), Some(2));
    let files: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(files, vec![std::ffi::OsString::from("bad.csv")]);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        assert!(run(dir.path(), &["frames", "--curve", "coil3d", "--grid", "200"]).status.success());
    }
    for name in ["fsf.csv", "ptf.csv", "frames_summary.json"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}
