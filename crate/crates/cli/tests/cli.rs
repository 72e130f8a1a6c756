//! End-to-end tests of the binary: exit codes, report determinism, dry
//! runs, CSV export, and the prime-table cache.

use std::process::{Command, Output};

fn digitprimes(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_digitprimes"))
        .args(args)
        .env_remove("DIGITPRIMES_CACHE")
        .output()
        .expect("binary runs")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn count_prints_the_number() {
    let out = digitprimes(&["count", "--b", "10", "--k", "2", "--missing-digit", "7"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_str(&out).trim(), "16");
}

#[test]
fn count_digit_sum_class() {
    let out = digitprimes(&["count", "--b", "10", "--k", "2", "--digit-sum", "2,0"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_str(&out).trim(), "13");
}

#[test]
fn usage_error_exits_one() {
    let out = digitprimes(&["count", "--b", "10", "--k", "2"]);
    assert_eq!(out.status.code(), Some(1));

    let out = digitprimes(&["count", "--b", "10", "--k", "2", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));

    // invalid constraint for the base
    let out = digitprimes(&["count", "--b", "10", "--k", "2", "--missing-digit", "11"]);
    assert_eq!(out.status.code(), Some(1));

    // frequencies must be exact rationals, never decimals
    let out = digitprimes(&[
        "fourier",
        "--b",
        "10",
        "--k",
        "2",
        "--missing-digit",
        "7",
        "--theta",
        "0.25",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_exits_zero() {
    let out = digitprimes(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout_str(&out).contains("digitprimes"));
}

#[test]
fn verify_pass_and_fail_exit_codes() {
    let out = digitprimes(&[
        "verify", "linf2", "--b", "10", "--alpha", "1/2", "--k", "6", "--grid", "1009",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout_str(&out));

    // an unreachable cap on the fitted constant must fail with exit 2
    let out = digitprimes(&[
        "verify",
        "l1",
        "--b",
        "10",
        "--k",
        "2",
        "--missing-digit",
        "7",
        "--assert-max-constant",
        "1e-6",
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stdout_str(&out));
}

#[test]
fn dry_run_prints_plan_and_exits_zero() {
    let out = digitprimes(&[
        "estimate",
        "--b",
        "10",
        "--k",
        "7",
        "--missing-digit",
        "7",
        "--weighted",
        "--dry-run",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(v["dry_run"], serde_json::json!(true));
    assert_eq!(v["schema_version"], serde_json::json!(1));
    assert!(v.get("result").is_none());
}

#[test]
fn reports_are_deterministic_modulo_meta() {
    let args = [
        "estimate",
        "--b",
        "10",
        "--k",
        "3",
        "--missing-digit",
        "7",
        "--weighted",
        "--seed",
        "42",
    ];
    let mut canon = Vec::new();
    for _ in 0..2 {
        let out = digitprimes(&args);
        assert_eq!(out.status.code(), Some(0));
        let mut v: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
        v.as_object_mut().unwrap().remove("meta");
        canon.push(serde_json::to_string(&v).unwrap());
    }
    assert_eq!(canon[0], canon[1]);
}

#[test]
fn spectrum_csv_has_header() {
    let out = digitprimes(&[
        "spectrum",
        "--b",
        "10",
        "--k",
        "2",
        "--missing-digit",
        "7",
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_str(&out);
    assert!(text.starts_with("a,re,im,modulus\n"));
    assert_eq!(text.lines().count(), 101);
}

#[test]
fn fourier_reports_value_and_oracle() {
    let out = digitprimes(&[
        "fourier",
        "--b",
        "10",
        "--k",
        "3",
        "--missing-digit",
        "7",
        "--theta",
        "1/4",
        "--check-oracle",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    let diff = v["result"]["abs_difference"].as_f64().unwrap();
    assert!(diff < 1e-9, "product vs oracle differ by {diff}");
}

#[test]
fn arcs_partition_counts() {
    let out = digitprimes(&[
        "arcs",
        "--b",
        "10",
        "--k",
        "3",
        "--threshold",
        "10",
        "--d0",
        "31",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    let major = v["result"]["major_count"].as_u64().unwrap();
    let minor = v["result"]["minor_count"].as_u64().unwrap();
    assert_eq!(major + minor, 1000);
}

#[test]
fn output_file_and_cache_dir() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let cache = dir.path().join("cache");
    let out = Command::new(env!("CARGO_BIN_EXE_digitprimes"))
        .args([
            "count",
            "--b",
            "10",
            "--k",
            "3",
            "--missing-digit",
            "7",
            "--output",
        ])
        .arg(&report)
        .env("DIGITPRIMES_CACHE", &cache)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    // the bare count still lands on stdout
    assert_eq!(stdout_str(&out).trim(), "100");
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["result"]["count"], serde_json::json!(100.0));
    // the sieve got cached under the documented name
    assert!(cache.join("dgpr_1001.bin").exists());

    // second run hits the cache and agrees
    let out2 = Command::new(env!("CARGO_BIN_EXE_digitprimes"))
        .args(["count", "--b", "10", "--k", "3", "--missing-digit", "7"])
        .env("DIGITPRIMES_CACHE", &cache)
        .output()
        .unwrap();
    assert_eq!(stdout_str(&out2).trim(), "100");
}

#[test]
fn report_all_passes() {
    let out = digitprimes(&["report-all", "--b", "10", "--k", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout_str(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(v["result"]["all_checks_passed"], serde_json::json!(true));
    assert_eq!(v["result"]["kappa"]["num"], serde_json::json!(5));
    assert_eq!(v["result"]["kappa"]["den"], serde_json::json!(6));
}
