//! End-to-end drives of the installed binary: exit-code contract, output
//! shapes, and determinism of the file-producing commands.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_subplanck"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stdout);
    serde_json::from_str(&text).unwrap_or_else(|e| panic!("stdout not JSON ({e}): {text}"))
}

fn fresh_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("subplanck-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

/// Byte-compare every regular file in two directories (same sorted names).
fn assert_dirs_identical(a: &Path, b: &Path) {
    let list = |d: &Path| -> Vec<String> {
        let mut names: Vec<String> = std::fs::read_dir(d)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        names.sort();
        names
    };
    let names = list(a);
    assert_eq!(names, list(b), "directory listings differ");
    for name in names {
        let x = std::fs::read(a.join(&name)).unwrap();
        let y = std::fs::read(b.join(&name)).unwrap();
        assert_eq!(x, y, "file {name} differs between runs");
    }
}

#[test]
fn metric_report_knows_even_cat_numbers() {
    let out = run(&["state", "--family", "cat", "--beta", "2", "--l", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = stdout_json(&out);
    assert_eq!(doc["parity"].as_f64().unwrap(), 1.0);
    let mean = doc["mean_n"].as_f64().unwrap();
    assert!((mean - 4.0 * 4.0f64.tanh()).abs() < 1e-12, "mean_n {mean}");
    assert!(doc["tail_mass"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn out_of_range_label_is_a_validation_error() {
    let out = run(&["state", "--family", "ks_plus", "--beta", "1.2", "--l", "5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = fresh_dir("badcfg");
    let cfg = dir.join("bad.json");
    std::fs::write(&cfg, "{\"thetaa\":0.3}\n").unwrap();
    let out = run(&[
        "state",
        "--config",
        cfg.to_str().unwrap(),
        "--family",
        "cat",
        "--beta",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn fringe_area_decreases_with_additions() {
    let out = run(&["cfa", "--family", "cat", "--beta", "2", "--n-add", "0..2"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = stdout_json(&out);
    let results = doc["results"].as_array().unwrap();
    assert_eq!(results.len(), 3);
    let cfa: Vec<f64> = results.iter().map(|r| r["cfa"].as_f64().unwrap()).collect();
    assert!(cfa[0] > cfa[1] && cfa[1] > cfa[2], "not decreasing: {cfa:?}");
    assert!((cfa[0] - 5.651695772060225).abs() < 1e-9, "cfa[0] {}", cfa[0]);
}

#[test]
fn first_zero_sits_near_an_eighth_turn() {
    let out = run(&[
        "overlap",
        "--family",
        "cat",
        "--beta",
        "2",
        "--dir",
        "1.5707963267948966",
        "--first-zero",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc = stdout_json(&out);
    assert!(!doc["capped"].as_bool().unwrap());
    let radius = doc["radius"].as_f64().unwrap();
    let eighth = std::f64::consts::PI / 8.0;
    assert!((radius - eighth).abs() / eighth < 0.05, "radius {radius}");
}

#[test]
fn oracle_check_is_deterministic() {
    let first = run(&["verify-oracle", "--seed", "7", "--draws", "60"]);
    let second = run(&["verify-oracle", "--seed", "7", "--draws", "60"]);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(second.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout, "oracle report not reproducible");
    let doc = stdout_json(&first);
    assert_eq!(doc["pass"].as_bool(), Some(true));
}

#[test]
fn truncation_gate_flags_then_yields() {
    let flagged = run(&["qfi", "--family", "sq", "--r", "1", "--cutoff", "16"]);
    assert_eq!(flagged.status.code(), Some(3));
    let allowed = run(&[
        "qfi",
        "--family",
        "sq",
        "--r",
        "1",
        "--cutoff",
        "16",
        "--allow-flagged",
    ]);
    assert_eq!(allowed.status.code(), Some(0));
    let doc = stdout_json(&allowed);
    // Honest reporting: the override keeps the fat tail visible.
    assert!(doc["tail_mass"].as_f64().unwrap() > 1e-4);
}

#[test]
fn figure_dataset_rebuilds_byte_identical() {
    let d1 = fresh_dir("fig2a");
    let d2 = fresh_dir("fig2b");
    for d in [&d1, &d2] {
        let out = run(&[
            "figure",
            "fig2",
            "--pair",
            "trgtrgn-1",
            "--n",
            "0,1",
            "--out",
            d.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    }
    assert_dirs_identical(&d1, &d2);

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d1.join("fig2_manifest.json")).unwrap())
            .unwrap();
    let ph = manifest["beta_phase"].as_array().unwrap();
    assert!((ph[0].as_f64().unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    assert!((ph[1].as_f64().unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    let csv = std::fs::read_to_string(d1.join("fig2.csv")).unwrap();
    assert!(csv.starts_with("n,alpha,beta,fq,fidelity\n"), "header: {}", &csv[..40]);

    let _ = std::fs::remove_dir_all(&d1);
    let _ = std::fs::remove_dir_all(&d2);
}

#[test]
fn effective_config_is_echoed_with_hash() {
    let dir = fresh_dir("cfgmerge");
    let cfg = dir.join("cfg.json");
    std::fs::write(&cfg, "{\"spec\":{\"family\":\"cat\",\"beta\":1.0},\"theta\":0.3}\n").unwrap();
    let out_dir = dir.join("run");
    let out = run(&[
        "state",
        "--config",
        cfg.to_str().unwrap(),
        "--beta",
        "2",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap())
            .unwrap();
    // Flag overrides the config field; the rest of the document survives.
    assert_eq!(manifest["config"]["spec"]["beta"].as_f64(), Some(2.0));
    assert_eq!(manifest["config"]["theta"].as_f64(), Some(0.3));
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    let _ = std::fs::remove_dir_all(&dir);
}
