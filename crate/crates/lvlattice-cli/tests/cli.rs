use serde_json::Value;
use std::fs;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lvlattice"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn binary")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn classify_matches_known_class() {
    let out = run(&["classify", "--N", "3", "--L", "11"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["m"], 3);
    assert_eq!(v["n1"], 2);
    assert_eq!(v["n2"], 3);
    assert_eq!(v["g"], 5);
    assert_eq!(v["n_H"], 5);
    assert_eq!(v["n0"], 1);
}

#[test]
fn classify_rejects_short_period() {
    let out = run(&["classify", "--N", "2", "--L", "2"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("period"), "stderr: {}", err);
    assert!(out.stdout.is_empty());
}

#[test]
fn table_rows_are_frozen() {
    let out = run(&["table", "--N", "2", "--Lmin", "3", "--Lmax", "8"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    let rows: Vec<(u64, u64)> = v["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| (r["l"].as_u64().unwrap(), r["g"].as_u64().unwrap()))
        .collect();
    assert_eq!(rows, vec![(3, 1), (4, 1), (5, 2), (6, 2), (7, 3), (8, 3)]);

    let out = run(&["table", "--N", "3", "--Lmin", "5", "--Lmax", "10"]);
    let v = stdout_json(&out);
    let rows: Vec<(u64, u64)> = v["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| (r["l"].as_u64().unwrap(), r["g"].as_u64().unwrap()))
        .collect();
    assert_eq!(rows, vec![(5, 2), (6, 1), (7, 3), (8, 3), (9, 3), (10, 4)]);
}

#[test]
fn verify_center_counts_generators() {
    let out = run(&["verify", "center", "--N", "3", "--L", "6"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["pass"], true);
    let detail = v["checks"][0]["detail"].as_str().unwrap();
    assert!(detail.contains("4 elements"), "detail: {}", detail);
}

#[test]
fn verify_rejects_unknown_suite() {
    let out = run(&["verify", "bogus", "--N", "2", "--L", "5"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("invalid value 'bogus'"), "stderr: {}", err);
    assert!(err.contains("possible values"), "stderr: {}", err);
}

#[test]
fn exact_checks_refuse_beyond_their_caps() {
    // the full product relation outgrows memory at size 2 past period 14,
    // and the involution battery outgrows patience past 19; both refuse
    // instead of attempting, as does the certificate that needs them
    let cases: [(&[&str], &str); 3] = [
        (&["verify", "rtt", "--N", "2", "--L", "20"], "product relation cap 14"),
        (&["verify", "involution", "--N", "2", "--L", "20"], "involution cap 19"),
        (&["certify", "--N", "2", "--L", "20"], "involution cap 19"),
    ];
    for (args, cap) in cases {
        let out = run(args);
        assert!(!out.status.success(), "{:?} should refuse", args);
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(cap), "{:?} stderr: {}", args, err);
    }
}

#[test]
fn certify_small_lattice_passes() {
    let out = run(&["certify", "--N", "3", "--L", "9"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["pass"], true);
    assert_eq!(v["genus"], 3);
    assert_eq!(v["n_H"], 3);
    assert_eq!(v["n0"], 3);
    assert_eq!(v["identity"], "g = n_H = (L - n0)/2 = 3");
}

#[test]
fn simulate_is_deterministic_and_conservative() {
    let dir = std::env::temp_dir();
    let p1 = dir.join("lvlattice_sim_a.csv");
    let p2 = dir.join("lvlattice_sim_b.csv");
    let args = |p: &std::path::Path| {
        vec![
            "simulate".into(),
            "--N".into(),
            "2".into(),
            "--L".into(),
            "5".into(),
            "--t-end".into(),
            "0.5".into(),
            "--seed".into(),
            "3".into(),
            "--out".into(),
            p.display().to_string(),
        ]
    };
    let a = bin().args(args(&p1)).output().unwrap();
    let b = bin().args(args(&p2)).output().unwrap();
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
    let csv1 = fs::read(&p1).unwrap();
    let csv2 = fs::read(&p2).unwrap();
    assert_eq!(csv1, csv2);
    let head = String::from_utf8_lossy(&csv1);
    assert!(head.starts_with("t,V1,V2,V3,V4,V5,H1,H2\n"), "header: {}", &head[..40]);
    let v = stdout_json(&a);
    let worst: f64 = v["worst_drift"].as_str().unwrap().parse().unwrap();
    assert!(worst < 1e-10, "drift {}", worst);
    fs::remove_file(p1).ok();
    fs::remove_file(p2).ok();
}

#[test]
fn simulate_reads_init_file() {
    let dir = std::env::temp_dir();
    let init = dir.join("lvlattice_init.json");
    let csv = dir.join("lvlattice_sim_init.csv");
    fs::write(&init, "{\"V\": [\"1\", 2, 3, \"4\"]}").unwrap();
    let out = run(&[
        "simulate",
        "--N",
        "2",
        "--L",
        "4",
        "--t-end",
        "0.1",
        "--init",
        init.to_str().unwrap(),
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let body = fs::read_to_string(&csv).unwrap();
    let first = body.lines().nth(1).unwrap();
    assert!(first.starts_with("0,1,2,3,4,"), "row: {}", first);
    fs::remove_file(init).ok();
    fs::remove_file(csv).ok();
}

#[test]
fn simulate_rejects_wrong_init_length() {
    let dir = std::env::temp_dir();
    let init = dir.join("lvlattice_init_short.json");
    let csv = dir.join("lvlattice_sim_short.csv");
    fs::write(&init, "{\"V\": [1, 2, 3]}").unwrap();
    let out = run(&[
        "simulate",
        "--N",
        "2",
        "--L",
        "5",
        "--init",
        init.to_str().unwrap(),
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("3 values for period 5"), "stderr: {}", err);
    fs::remove_file(init).ok();
}

#[test]
fn divisor_stays_on_curve_and_repeats() {
    let dir = std::env::temp_dir();
    let p1 = dir.join("lvlattice_div_a.csv");
    let p2 = dir.join("lvlattice_div_b.csv");
    let args = |p: &std::path::Path| {
        vec![
            "divisor".into(),
            "--N".into(),
            "2".into(),
            "--L".into(),
            "6".into(),
            "--t-end".into(),
            "0.5".into(),
            "--seed".into(),
            "3".into(),
            "--out".into(),
            p.display().to_string(),
        ]
    };
    let a = bin().args(args(&p1)).output().unwrap();
    let b = bin().args(args(&p2)).output().unwrap();
    assert!(a.status.success(), "stderr: {}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(fs::read(&p1).unwrap(), fs::read(&p2).unwrap());
    let body = fs::read_to_string(&p1).unwrap();
    assert!(
        body.starts_with("t,re_z1,im_z1,re_w1,im_w1,re_z2,im_z2,re_w2,im_w2\n"),
        "header: {}",
        body.lines().next().unwrap()
    );
    let v = stdout_json(&a);
    assert_eq!(v["genus"], 2);
    assert_eq!(v["samples"], 501);
    assert_eq!(v["truncated"], Value::Null);
    let on_curve: f64 = v["on_curve_worst"].as_str().unwrap().parse().unwrap();
    assert!(on_curve < 1e-9, "on_curve {}", on_curve);
    assert!(v["theta_flagged"].as_array().unwrap().is_empty());
    fs::remove_file(p1).ok();
    fs::remove_file(p2).ok();
}
