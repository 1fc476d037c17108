use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn sieved(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sieved"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = sieved(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    sieved(args).status.code().expect("exit code")
}

/// Data rows of a CSV artifact, without manifest comments and header.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn bands_match_quadratic_edges() {
    let text = stdout(&["bands", "--lambda", "4", "--k", "2"]);
    let r = rows(&text);
    assert_eq!(r.len(), 2);
    let s8 = 8f64.sqrt();
    let expect = [(2.0 - s8, 0.0), (4.0, 2.0 + s8)];
    for (row, (lo, hi)) in r.iter().zip(expect) {
        assert!(
            (num(&row[0]) - lo).abs() < 1e-9 && (num(&row[1]) - hi).abs() < 1e-9,
            "{row:?}"
        );
    }
    assert!(text.contains("# command: bands\n# lambda: 4.0\n# ell: 1\n# k: 2\n"));
}

#[test]
fn free_cover_is_one_band() {
    let text = stdout(&["cover", "--lambda", "0", "--k", "5", "--format", "json"]);
    let v: Value = serde_json::from_str(&text).unwrap();
    let bands = v["result"]["bands"].as_array().unwrap();
    assert_eq!(bands.len(), 1);
    assert!((bands[0][0].as_f64().unwrap() + 2.0).abs() < 1e-9);
    assert!((bands[0][1].as_f64().unwrap() - 2.0).abs() < 1e-9);
    assert_eq!(v["manifest"]["command"], "cover");
    assert!((v["manifest"]["measure"].as_f64().unwrap() - 4.0).abs() < 1e-8);
}

#[test]
fn consecutive_covers_nest() {
    let get = |k: &str| -> Vec<(f64, f64)> {
        rows(&stdout(&[
            "cover", "--lambda", "3", "--ell", "2", "--k", k, "--tol", "1e-12",
        ]))
        .iter()
        .map(|r| (num(&r[0]), num(&r[1])))
        .collect()
    };
    let (outer, inner) = (get("6"), get("7"));
    for (lo, hi) in inner {
        assert!(
            outer
                .iter()
                .any(|&(a, b)| a - 2e-12 <= lo && hi <= b + 2e-12),
            "[{lo}, {hi}]"
        );
    }
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(
        code(&["bands", "--lambda", "4", "--ell", "0", "--k", "2"]),
        2
    );
    assert_eq!(code(&["bands", "--lambda", "-1", "--k", "2"]), 2);
    assert_eq!(code(&["lyapunov", "--lambda", "1", "--grid", "0:1"]), 2);
    assert_eq!(code(&["lyapunov", "--lambda", "1", "--grid", "1:0:5"]), 2);
    assert_eq!(
        code(&[
            "dimension",
            "--lambda",
            "1",
            "--k",
            "3",
            "--eps-min",
            "1",
            "--eps-max",
            "0.1"
        ]),
        2
    );
    assert_eq!(
        code(&[
            "dimension",
            "--lambda",
            "1",
            "--k",
            "3",
            "--window",
            "50:60"
        ]),
        2
    );
    assert_eq!(code(&["frobnicate"]), 2);
}

#[test]
fn resource_limits_exit_4() {
    assert_eq!(
        code(&["oracle-check", "--lambda", "4", "--size", "1000000000000"]),
        4
    );
    assert_eq!(code(&["bands", "--lambda", "4", "--k", "40"]), 4);
}

#[test]
fn special_energy_tables() {
    let r = rows(&stdout(&[
        "special-energies",
        "--lambda",
        "3",
        "--ell",
        "2",
    ]));
    assert_eq!(r.len(), 1);
    assert!(num(&r[0][1]).abs() < 1e-15);
    assert!(num(&r[0][2]).abs() < 1e-10);
    assert!((num(&r[0][3]).abs() - 1.0).abs() < 1e-10);
    assert_eq!(r[0][4], "in_cover");
    assert!(rows(&stdout(&[
        "special-energies",
        "--lambda",
        "3",
        "--ell",
        "1"
    ]))
    .is_empty());
    let five = rows(&stdout(&[
        "special-energies",
        "--lambda",
        "8",
        "--ell",
        "5",
    ]));
    assert_eq!(five.len(), 4);
    assert!(five.iter().all(|r| r[4] == "in_cover"));
}

#[test]
fn free_lyapunov_matches_log_xi() {
    let r = rows(&stdout(&[
        "lyapunov", "--lambda", "0", "--grid", "2.5:8:12", "--k", "25",
    ]));
    assert_eq!(r.len(), 12);
    for row in r {
        let e = num(&row[0]);
        let xi = 0.5 * (e + (e * e - 4.0).sqrt());
        assert!((num(&row[1]) - xi.ln()).abs() < 1e-3, "{row:?}");
    }
}

#[test]
fn oracle_free_operator_is_consistent() {
    let text = stdout(&[
        "oracle-check",
        "--lambda",
        "0",
        "--size",
        "300",
        "--k",
        "6",
        "--format",
        "json",
    ]);
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["result"]["fraction_inside"].as_f64(), Some(1.0));
    assert_eq!(v["result"]["flagged"], false);
    assert_eq!(v["manifest"]["size"], 300);
}

#[test]
fn free_dimension_is_one() {
    let text = stdout(&["dimension", "--lambda", "0", "--k", "5", "--format", "json"]);
    let v: Value = serde_json::from_str(&text).unwrap();
    let slope = v["result"]["slope"].as_f64().unwrap();
    assert!((slope - 1.0).abs() < 0.05, "{slope}");
}

#[test]
fn output_independent_of_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let run = |workers: &str, name: &str| {
        let path = dir.path().join(name);
        let p = path.to_str().unwrap();
        stdout(&[
            "--workers",
            workers,
            "cover",
            "--lambda",
            "4",
            "--ell",
            "2",
            "--k",
            "9",
            "--format",
            "json",
            "--out",
            p,
        ]);
        fs::read(path).unwrap()
    };
    assert_eq!(run("1", "one.json"), run("4", "four.json"));
}

fn report(dir: &Path, lambda: &str) -> Output {
    sieved(&[
        "report",
        "--lambda",
        lambda,
        "--ells",
        "1,2",
        "--k",
        "9",
        "--out",
        dir.to_str().unwrap(),
    ])
}

#[test]
fn report_resumes_from_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    assert!(report(dir.path(), "5").status.success());
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    let checkpoint = fs::read_to_string(dir.path().join("manifest.json")).unwrap();
    let cp: Value = serde_json::from_str(&checkpoint).unwrap();
    assert_eq!(cp["complete"], true);
    assert_eq!(cp["rows"].as_array().unwrap().len(), 2);
    assert_eq!(rows(&summary).len(), 2);

    // simulate an interruption after the first spacing
    let mut partial = cp.clone();
    partial["complete"] = Value::Bool(false);
    partial["rows"].as_array_mut().unwrap().truncate(1);
    fs::write(
        dir.path().join("manifest.json"),
        serde_json::to_string(&partial).unwrap(),
    )
    .unwrap();
    fs::remove_file(dir.path().join("summary.csv")).unwrap();
    fs::remove_file(dir.path().join("local_ell2.csv")).unwrap();

    assert!(report(dir.path(), "5").status.success());
    assert_eq!(
        fs::read_to_string(dir.path().join("summary.csv")).unwrap(),
        summary
    );
    assert!(dir.path().join("local_ell2.csv").exists());
    assert_eq!(
        fs::read_to_string(dir.path().join("manifest.json")).unwrap(),
        checkpoint
    );

    assert_eq!(report(dir.path(), "4").status.code(), Some(2));
}
