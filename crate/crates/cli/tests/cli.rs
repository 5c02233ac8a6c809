use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn difftk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_difftk"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON report")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("difftk-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

#[test]
fn validate_reports_dependent_mahler_bases() {
    let out = difftk(&["validate", "--case", "2M", "--phi", "2", "--sigma", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["verdict"], "dependent");
    assert_eq!(r["result"]["entries"][0]["witness"], "2^2 = 4^1");
}

#[test]
fn validate_accepts_independent_pair() {
    let out = difftk(&["validate", "--case", "2M", "--phi", "2", "--sigma", "3"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["result"]["independent"], true);
}

#[test]
fn certificate_for_a_shift_coboundary() {
    let out = difftk(&["certificate", "(x+1)/x", "--case", "2S", "--phi", "1", "--sigma", "i"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["verdict"], "certificate");
    assert_eq!(r["result"]["decision"]["certificate"]["b"], "x");
    assert_eq!(r["result"]["verification"]["verdict"], "valid");
}

#[test]
fn certificate_refused_with_divisor_witness() {
    let out = difftk(&["certificate", "(x-1)^2", "--case", "2S", "--phi", "1", "--sigma", "i"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["verdict"], "no_certificate");
}

#[test]
fn root_of_unity_is_invalid_input() {
    let out = difftk(&["solve", "2", "--case", "2Q", "--phi", "1", "--sigma", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("root of unity"));
}

#[test]
fn unknown_subcommand_is_invalid_input() {
    assert_eq!(difftk(&["bogus"]).status.code(), Some(2));
}

#[test]
fn probe_finds_the_inhomogeneous_equation() {
    let args = [
        "relation", "power_sum:2", "--case", "2M", "--phi", "2", "--sigma", "2", "--mode", "probe",
        "--imax", "2", "--deg", "1", "--xdeg", "1", "--order", "60",
    ];
    let out = difftk(&args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert_eq!(r["verdict"], "relation");
    assert_eq!(r["result"]["relation"], "Y1 - Y2 - x");
    assert_eq!(r["result"]["verified_order"], 120);
}

#[test]
fn independence_writes_report_into_new_directory() {
    let dir = scratch("independence");
    let path = dir.join("report.json");
    let p = path.to_str().unwrap();
    let args = [
        "independence", "power_sum:2", "power_sum:3", "--case", "2M", "--phi", "2", "--sigma", "3",
        "--deg", "2", "--xdeg", "2", "--order", "60", "--out", p,
    ];
    let out = difftk(&args);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["verdict"], "no_relation_at_bound");
    assert_eq!(std::fs::read(&path).unwrap(), out.stdout);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn corpus_is_reproducible() {
    let dir = scratch("corpus");
    let run = |tag: &str| {
        let path = dir.join(format!("{tag}.json"));
        let args = [
            "corpus", "power_sum:2", "thue_morse:3", "--case", "2M", "--phi", "2", "--sigma", "3",
            "--order", "30", "--seed", "7", "--out", path.to_str().unwrap(),
        ];
        let out = difftk(&args);
        assert_eq!(out.status.code(), Some(0));
        std::fs::read_to_string(dir.join(format!("{tag}.series.json"))).unwrap()
    };
    assert_eq!(run("a"), run("b"));
    assert!(dir.join("a.equation.json").exists());
    let _ = std::fs::remove_dir_all(&dir);
}
