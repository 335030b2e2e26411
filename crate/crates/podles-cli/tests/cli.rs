//! End-to-end tests of the command-line interface: exit codes, output
//! formats, flag validation, and report determinism.

use std::path::Path;
use std::process::{Command, Output};

fn podles(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_podles"))
        .args(args)
        .env_remove("PODLES_PREC_BITS")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf8 stderr")
}

#[test]
fn verify_passes_and_reports_json() {
    let out = podles(&["verify", "--q", "0.5", "--t", "1", "--lmax2", "21"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let body = stdout(&out);
    assert!(body.starts_with("{\n  \"ctx\""));
    assert!(body.contains("\"id\": \"sphere.rel1\""));
    assert!(body.contains("\"fail\": 0"));
}

#[test]
fn verify_rejects_bad_parameters() {
    let out = podles(&["verify", "--q", "1.5", "--t", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("q must lie in (0,1)"));

    let out = podles(&["verify", "--q", "0.5", "--t", "0", "--lmax2", "3"]);
    assert_eq!(out.status.code(), Some(2));

    let out = podles(&["verify", "--q", "0.5", "--t", "0", "--lmax2", "20"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("parity"));

    let out = podles(&["verify", "--q", "0.5", "--t", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("t must lie in [0,1]"));
}

#[test]
fn verify_is_byte_deterministic() {
    let dir = tempfile::tempdir().expect("tempdir");
    let run = |name: &str| -> Vec<u8> {
        let path = dir.path().join(name);
        let out = podles(&[
            "verify",
            "--q",
            "0.8",
            "--t",
            "0.5",
            "--lmax2",
            "21",
            "--out",
            path.to_str().expect("utf8 path"),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        std::fs::read(&path).expect("report written")
    };
    assert_eq!(run("a.json"), run("b.json"));
}

#[test]
fn index_prints_value_with_bound() {
    let out = podles(&["index", "--q", "0.5", "--t", "0", "--lmax2", "41", "--method", "series"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let body = stdout(&out);
    assert!(body.contains("index (series) = 1.00000000 \u{00b1}"), "{body}");
    assert!(!body.contains("trace"));

    let out = podles(&["index", "--q", "0.5", "--t", "0", "--lmax2", "42", "--N2", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("index (series) = 2.00000000"));
}

#[test]
fn zeta_modes_and_usage_errors() {
    let out = podles(&["zeta", "--q", "0.5", "--t", "0", "--lmax2", "41", "--z", "4"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).starts_with("zeta[1](4) = 4.80822761"));

    let out = podles(&[
        "zeta",
        "--q",
        "0.5",
        "--t",
        "0",
        "--lmax2",
        "21",
        "--residue",
        "1",
        "--elem",
        "(x0 - t)^2/(1+q^2)^2",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).starts_with("residue_1[(x0 - t)^2/(1+q^2)^2] = 4.2666"));

    let out = podles(&["zeta", "--q", "0.5", "--t", "0", "--lmax2", "21"]);
    assert_eq!(out.status.code(), Some(2));

    let out = podles(&[
        "zeta", "--q", "0.5", "--t", "0", "--lmax2", "21", "--residue", "1", "--elem", "x9",
    ]);
    assert_eq!(out.status.code(), Some(2), "unknown identifier is a usage error");

    let out = podles(&[
        "zeta",
        "--q",
        "0.5",
        "--t",
        "0",
        "--lmax2",
        "21",
        "--residue",
        "2",
        "--beta-monomial",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn decay_emits_csv_series() {
    let out = podles(&["decay", "--q", "0.5", "--t", "0.3", "--lmax2", "31"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let body = stdout(&out);
    let mut lines = body.lines();
    assert_eq!(lines.next(), Some("check_id,series,l2,l,norm"));
    let first = lines.next().expect("has rows");
    assert!(first.starts_with("appr.xz,"), "{first}");
    for id in ["bdd.Dx", "first.order", "commutant", "fredholm.Fx", "coeff.pm", "smooth.phi"] {
        assert!(body.contains(id), "missing {id}");
    }
}

#[test]
fn dump_writes_operator_entries() {
    let out = podles(&["dump", "--q", "0.5", "--t", "0.3", "--lmax2", "5", "--op", "gamma"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let body = stdout(&out);
    assert!(body.starts_with("row_l2,row_m2,row_sigma,col_l2,col_m2,col_sigma,re,im\n"));
    assert!(body.contains("1,-1,-1,1,-1,-1,-1.0000000000000000e0"));

    let out = podles(&["dump", "--q", "0.5", "--t", "0.3", "--lmax2", "5", "--elem", "x0"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));

    let out = podles(&["dump", "--q", "0.5", "--t", "0.3", "--lmax2", "5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn precision_env_var_overrides_flag() {
    let path = tempfile::NamedTempFile::new().expect("tempfile");
    let out = Command::new(env!("CARGO_BIN_EXE_podles"))
        .args([
            "verify",
            "--q",
            "0.5",
            "--t",
            "0.3",
            "--lmax2",
            "21",
            "--prec",
            "64",
            "--out",
            path.path().to_str().expect("utf8 path"),
        ])
        .env("PODLES_PREC_BITS", "128")
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let body = std::fs::read_to_string(path.path()).expect("report written");
    assert!(body.contains("\"prec_bits\": 128"), "{body}");
}

#[test]
fn format_mismatch_is_a_usage_error() {
    let out = podles(&["verify", "--q", "0.5", "--t", "0.3", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("json"));
}

#[test]
fn out_flag_suppresses_stdout() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("r.json");
    let out = podles(&[
        "verify",
        "--q",
        "0.5",
        "--t",
        "0.3",
        "--lmax2",
        "21",
        "--out",
        path.to_str().expect("utf8 path"),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).is_empty());
    assert!(Path::new(&path).exists());
}
