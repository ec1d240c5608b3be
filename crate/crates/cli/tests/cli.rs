use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn cfg(name: &str) -> String {
    configs().join(name).display().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wiretap")).args(args).output().unwrap()
}

fn report(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(doc["manifest"]["version"].is_string());
    doc["report"].clone()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn missing_files_and_bad_documents_exit_with_two() {
    let dir = std::env::temp_dir().join(format!("wiretap-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let broken = dir.join("broken.json");
    std::fs::write(&broken, "{ \"p_s\": [0.5, ").unwrap();
    let rates = dir.join("rates.json");
    std::fs::write(
        &rates,
        r#"{"case":"case1","n":4,"b":2,"log2_sizes":{"total":2,"bins":1,"subbins":1,"key":0,"keyd":0},"epsilon":2.0,"seed":0,"trials":10}"#,
    )
    .unwrap();

    let missing = run(&["bounds", "--channel", "/nonexistent/channel.json"]);
    assert_eq!(missing.status.code(), Some(2));
    let parse = run(&["bounds", "--channel", broken.to_str().unwrap()]);
    assert_eq!(parse.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&parse.stderr).contains("line"));
    let bad_rates = run(&["simulate", "--channel", &cfg("example_channel.json"), "--scheme", rates.to_str().unwrap()]);
    assert_eq!(bad_rates.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad_rates.stderr).contains("R1 <= RK"));
    let zero_workers = run(&["--workers", "0", "example"]);
    assert_eq!(zero_workers.status.code(), Some(2));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn budget_overflow_exits_with_three() {
    let out = run(&[
        "oracle", "--channel", &cfg("example_channel.json"), "--scheme", &cfg("scheme_example_case3.json"),
        "--budget", "100",
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn csv_output_flattens_the_report() {
    let out = run(&[
        "--format", "csv", "bounds", "--channel", &cfg("example_channel.json"), "--policy", &cfg("policy_uniform.json"),
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("key,value"));
    let row = lines.find(|l| l.starts_with("report.r_csi_2,")).unwrap();
    let v: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert!((v - 0.5310044064107188).abs() < 1e-9);
}

#[test]
fn simulate_matches_the_golden_report() {
    let r = report(&["simulate", "--channel", &cfg("example_channel.json"), "--scheme", &cfg("scheme_example_case3.json")]);
    let golden: Value =
        serde_json::from_str(&std::fs::read_to_string(configs().join("golden/simulate_example_case3.json")).unwrap())
            .unwrap();
    assert_eq!(r, golden);
}

#[test]
fn noiseless_channel_never_errs() {
    let r = report(&["simulate", "--channel", &cfg("noiseless_channel.json"), "--scheme", &cfg("scheme_noiseless.json")]);
    assert_eq!(f(&r["empirical_pe"]), 0.0);
    let o = report(&["oracle", "--channel", &cfg("noiseless_channel.json"), "--scheme", &cfg("scheme_noiseless.json")]);
    assert!(f(&o["rows"][0]["exact_pe"]).abs() < 1e-12);
}

#[test]
fn a_single_key_carries_no_entropy() {
    let r = report(&["oracle", "--channel", &cfg("example_channel.json"), "--scheme", &cfg("scheme_no_key.json")]);
    for k in r["rows"][0]["key_statistics"].as_array().unwrap() {
        assert!(f(&k["key_entropy"]).abs() < 1e-9);
    }
}

#[test]
fn shipped_schemes_pass_the_crosscheck() {
    for (channel, scheme) in [
        ("example_channel.json", "scheme_example_case3.json"),
        ("example_channel.json", "scheme_example_case1.json"),
        ("example_channel.json", "scheme_no_key.json"),
        ("noiseless_channel.json", "scheme_noiseless.json"),
    ] {
        let r = report(&["oracle", "--channel", &cfg(channel), "--scheme", &cfg(scheme)]);
        let row = &r["rows"][0];
        assert_eq!(row["crosscheck"]["agree"], Value::Bool(true), "{scheme}");
        let leak = f(&row["leakage_bits"]);
        assert!(leak >= -1e-12 && leak <= f(&row["message_entropy"]) + 1e-12);
    }
}

#[test]
fn oracle_sweeps_block_lengths() {
    let r = report(&[
        "oracle", "--channel", &cfg("example_channel.json"), "--scheme", &cfg("scheme_example_case3.json"),
        "--sweep-n", "2,4", "--no-crosscheck",
    ]);
    let ns: Vec<u64> = r["rows"].as_array().unwrap().iter().map(|x| x["n"].as_u64().unwrap()).collect();
    assert_eq!(ns, vec![2, 4]);
}

#[test]
fn optimize_reports_known_values() {
    let fig2 = report(&["optimize", "--channel", &cfg("example_channel.json")]);
    assert!((f(&fig2["bound"]["lower_bound"]) - 0.5310044064107188).abs() < 1e-9);
    let cases = fig2["special_cases"].as_array().unwrap();
    assert!(cases.iter().any(|c| c["applicable"] == Value::Bool(true)));

    let same = report(&["optimize", "--channel", &cfg("z_equals_y_channel.json")]);
    assert!(same["bound"]["tightness"].is_string());

    let single = report(&["optimize", "--channel", &cfg("singleton_state_channel.json")]);
    assert!(f(&single["bound"]["lower_bound"]).abs() < 1e-12);
}

#[test]
fn bounds_and_example_tables() {
    let r = report(&["bounds", "--channel", &cfg("example_channel.json"), "--policy", &cfg("policy_uniform.json")]);
    assert!((f(&r["r_csi_1"]) - 0.06200881282143755).abs() < 1e-9);
    let s = report(&[
        "bounds", "--channel", &cfg("singleton_state_channel.json"), "--policy", &cfg("policy_uniform_single_state.json"),
    ]);
    assert_eq!(f(&s["achievable_rate"]), 0.0);
    let e = run(&["example"]);
    assert!(e.status.success(), "{}", String::from_utf8_lossy(&e.stderr));
}
