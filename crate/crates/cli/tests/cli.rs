use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn tmp(name: &str, contents: &str) -> String {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&path, contents).unwrap();
    path.to_str().unwrap().to_string()
}

fn perron(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_perron"))
        .args(args)
        .output()
        .unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", stderr(out));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn row_sum_bounds_from_csv() {
    let m = tmp("m.csv", "1,2\n3,4\n");
    let v = json(&perron(&[
        "bounds",
        "--kernel",
        &m,
        "--test-kernel",
        "identity",
    ]));
    assert_eq!(
        (v["lower"].as_f64(), v["upper"].as_f64()),
        (Some(3.0), Some(7.0))
    );
    let text = String::from_utf8(perron(&["bounds", "--kernel", &m]).stdout).unwrap();
    assert!(
        text.starts_with("{\n  \"lower\": 3.0,\n  \"upper\": 7.0,"),
        "{text}"
    );
}

#[test]
fn power_and_file_test_kernels() {
    let m = tmp("m2.csv", "1,2\n3,4\n");
    let v = json(&perron(&[
        "bounds",
        "--kernel",
        &m,
        "--test-kernel",
        "power:1",
    ]));
    assert!((v["lower"].as_f64().unwrap() - 37.0 / 7.0).abs() < 1e-12);
    assert_eq!(v["m"], 1);
    let l = tmp("l.json", r#"{"n": 2, "entries": [[1, 0], [0, 1]]}"#);
    let v = json(&perron(&[
        "bounds",
        "--kernel",
        &m,
        "--test-kernel",
        &format!("file:{l}"),
    ]));
    assert_eq!(v["upper"].as_f64(), Some(7.0));
}

#[test]
fn negative_entry_is_a_hypothesis_violation() {
    let m = tmp("neg.csv", "1,-2\n3,4\n");
    let out = perron(&["bounds", "--kernel", &m, "--test-kernel", "identity"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(
        stderr(&out),
        "hypothesis violation: K not non-negative at (0,1)\n"
    );
    assert!(out.stdout.is_empty());
}

#[test]
fn nonpositive_test_row_sum_exits_2() {
    let m = tmp("k.csv", "1,2\n3,4\n");
    let l = tmp("bad_l.csv", "1,0\n1,-1\n");
    let out = perron(&[
        "bounds",
        "--kernel",
        &m,
        "--test-kernel",
        &format!("file:{l}"),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("hypothesis violation: R L"));
}

#[test]
fn io_and_parse_errors_exit_1() {
    let out = perron(&["bounds", "--kernel", "/nonexistent/k.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr(&out).lines().count(), 1);

    let bad = tmp("bad.csv", "1,2\n3,x\n");
    assert_eq!(perron(&["oracle", "--kernel", &bad]).status.code(), Some(1));
    assert_eq!(
        perron(&["refine", "--kernel", &bad, "--m-max", "0"])
            .status
            .code(),
        Some(1)
    );
    let out = perron(&["bogus"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr(&out).lines().count(), 1);
}

#[test]
fn no_root_and_unstable_exit_codes() {
    let drain = tmp("drain.json", r#"{"P": [[1]], "s": [-1]}"#);
    assert_eq!(
        perron(&["decay-rate", "--source", &drain]).status.code(),
        Some(3)
    );
    let unstable = tmp(
        "unstable.json",
        r#"{"P": [[0.5, 0.5], [0.5, 0.5]], "s": [2, -1]}"#,
    );
    let out = perron(&["decay-rate", "--source", &unstable]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("unstable system"));
}

#[test]
fn oracle_no_convergence_exits_3() {
    let m = tmp("slow.csv", "0.999,0.001\n0.001,0.5\n");
    let out = perron(&[
        "oracle",
        "--kernel",
        &m,
        "--tol",
        "1e-15",
        "--max-iter",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).starts_with("no convergence"));
}

#[test]
fn fubini_guard_and_override() {
    let f = tmp("f.json", r#"{"family": "f_example"}"#);
    let g = tmp("g.json", r#"{"family": "g_example", "signed": true}"#);
    let base = [
        "bounds", "--kernel", &f, "--grid-n", "50", "--panels", "1024",
    ];
    let file = format!("file:{g}");
    let out = perron(&[&base[..], &["--test-kernel", &file]].concat());
    assert_eq!(out.status.code(), Some(2));
    let v = json(&perron(
        &[
            &base[..],
            &["--test-kernel", &file, "--allow-fubini-violation"],
        ]
        .concat(),
    ));
    assert!((v["lower"].as_f64().unwrap() + 1.0).abs() < 5e-2);
    assert!(v["notes"][0].as_str().unwrap().starts_with("warning"));

    let v = json(&perron(&[
        "check-fubini",
        "--kernel",
        &f,
        "--test-kernel",
        &g,
    ]));
    assert_eq!(v["divergent"], true);
}

#[test]
fn counterexample_small() {
    let v = json(&perron(&["counterexample", "--sizes", "100,1000"]));
    assert!((v["bounds_lower"].as_f64().unwrap() + 1.0).abs() < 5e-2);
    assert!((v["rho_F"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    assert_eq!(
        perron(&["counterexample", "--sizes", "1000,100"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn discretize_csv_and_study() {
    let r1 = tmp(
        "r1.json",
        r#"{"family": "rank_one", "params": {"a": {"kind": "affine", "beta": 1}, "b": {"kind": "affine", "beta": 1}}}"#,
    );
    // nodes 1/4, 3/4 with weight 1/2: entry (i, j) = (1 + x_i)(1 + x_j) / 2
    let out = perron(&[
        "discretize",
        "--kernel",
        &r1,
        "--grid-n",
        "2",
        "--format",
        "csv",
    ]);
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "0.78125,1.09375\n1.09375,1.53125\n"
    );
    let out = perron(&[
        "discretize",
        "--kernel",
        &r1,
        "--sizes",
        "25,50",
        "--format",
        "csv",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("size,value,delta\n25,"), "{text}");
    let m = tmp("m3.csv", "1,2\n3,4\n");
    assert_eq!(
        perron(&["bounds", "--kernel", &m, "--format", "csv"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn table_and_output_file() {
    let m = tmp("m4.csv", "1,2\n3,4\n");
    let out = perron(&["bounds", "--kernel", &m, "--format", "table"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("lower "), "{text}");
    let dest = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("report.json");
    let out = perron(&["refine", "--kernel", &m, "--output", dest.to_str().unwrap()]);
    assert!(out.status.success() && out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(dest).unwrap()).unwrap();
    assert!(v["reports"].as_array().unwrap().len() > 2);
}

#[test]
fn decay_rate_bounds_mode() {
    let src = tmp(
        "src.json",
        r#"{"P": [[0.9, 0.1], [0.1, 0.9]], "s": [1, -2]}"#,
    );
    let v = json(&perron(&[
        "decay-rate",
        "--source",
        &src,
        "--theta",
        "0.03",
        "--m",
        "6",
    ]));
    assert!(v["upper"].as_f64().unwrap() < 1.0);
    let v = json(&perron(&[
        "decay-rate",
        "--source",
        &src,
        "--theta",
        "0",
        "--m",
        "3",
    ]));
    assert_eq!(
        (v["lower"].as_f64(), v["upper"].as_f64()),
        (Some(1.0), Some(1.0))
    );
}
