//! End-to-end checks of the command-line surface.

use std::fs;
use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lci"))
}

fn write_tmp(name: &str, contents: &str) -> PathBuf {
    let path = std::env::temp_dir().join(format!("lci-cli-test-{}-{name}", std::process::id()));
    fs::write(&path, contents).unwrap();
    path
}

#[test]
fn analyze_reports_exact_case_b2() {
    let inst = write_tmp("b2.json", r#"{"pX": ["2/3","1/6","1/6"], "pY": ["1/6","2/3","1/6"]}"#);
    let out = bin().args(["analyze", "--instance"]).arg(&inst).args(["--oracle-r", "15"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["e_max"], "4/15");
    assert_eq!(v["case"], "b2");
    assert_eq!(v["constants"]["s"], "2/15");
    assert!(v["oracle"]["value"].as_f64().unwrap() <= 4.0 / 15.0 + 1e-12);
    fs::remove_file(inst).ok();
}

#[test]
fn lci_subcommand_words_and_random() {
    let out = bin().args(["lci", "--x", "1122", "--y", "1212"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("lci = 3"), "{text}");

    let a = bin().args(["--seed", "7", "lci", "--random", "--n", "12", "--m", "3"]).output().unwrap();
    let b = bin().args(["--seed", "7", "lci", "--random", "--n", "12", "--m", "3"]).output().unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn sample_limit_emits_parseable_csv() {
    let inst = write_tmp("uni.json", r#"{"pX": [0.5, 0.5], "pY": [0.5, 0.5]}"#);
    let csv = std::env::temp_dir().join(format!("lci-cli-test-{}-samples.csv", std::process::id()));
    let out = bin()
        .args(["--seed", "3", "sample-limit", "--instance"])
        .arg(&inst)
        .args(["--reps", "50", "--path-steps", "128", "--grid-r", "8", "--out"])
        .arg(&csv)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    let values: Vec<f64> = text
        .lines()
        .filter(|l| !l.starts_with('#') && *l != "value" && !l.is_empty())
        .map(|l| l.parse().unwrap())
        .collect();
    assert_eq!(values.len(), 50);
    assert!(text.contains("# grid_r: 8"));
    fs::remove_file(inst).ok();
    fs::remove_file(csv).ok();
}

#[test]
fn blocks_subcommand_handles_words_and_instances() {
    let out = bin()
        .args(["blocks", "--alpha", "2,1,2", "--x", "212", "--y", "212", "--m", "2"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("lc_blocks = 3"));

    let inst = write_tmp("blk.json", r#"{"pX": ["1/3","2/3"], "pY": ["1/4","3/4"]}"#);
    let out = bin().args(["blocks", "--alpha", "1,2", "--instance"]).arg(&inst).output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["case"], "a");
    assert_eq!(v["active"], serde_json::json!([2]));
    fs::remove_file(inst).ok();
}

#[test]
fn converge_check_mode_sets_exit_code() {
    let inst = write_tmp("conv.json", r#"{"pX": [0.5, 0.5], "pY": [0.5, 0.5]}"#);
    let out = bin()
        .args(["--seed", "11", "converge", "--instance"])
        .arg(&inst)
        .args([
            "--n-list", "100,5000",
            "--reps", "2000",
            "--limit-reps", "5000",
            "--path-steps", "1024",
            "--grid-r", "16",
            "--check", "--gnuplot",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("# n mean_zn ks_d p_value"), "{text}");
    assert_eq!(text.lines().count(), 3);
    fs::remove_file(inst).ok();
}

#[test]
fn mfunc_prints_value_and_gap() {
    let inst = write_tmp("mf.json", r#"{"pX": ["2/3","1/6","1/6"], "pY": ["1/6","2/3","1/6"]}"#);
    let nu = write_tmp("nu.json", r#"{"nuX": [1.0, 0.0, 0.0], "nuY": [0.0, 1.0, 0.0]}"#);
    let out = bin()
        .args(["mfunc", "--instance"])
        .arg(&inst)
        .arg("--nu")
        .arg(&nu)
        .arg("--oracle")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("m_closed = 0.4"), "{text}");
    assert!(text.contains("m_oracle"), "{text}");
    fs::remove_file(inst).ok();
    fs::remove_file(nu).ok();
}
