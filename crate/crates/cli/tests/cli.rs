use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn imcf(root: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_imcf"))
        .args(args)
        .env("IMCF_OUTPUT_ROOT", root)
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_column(text: &str, name: &str) -> Vec<f64> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect()
}

#[test]
fn sphere_report_has_zero_mass() {
    let root = tempfile::tempdir().unwrap();
    let out = imcf(root.path(), &["report", "--set", "profile.preset=sphere", "--set", "profile.radius=1.0"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&root.path().join("imcf-output/report.json"));
    assert!(report["mtilde"].as_f64().unwrap().abs() < 1e-8);
    assert!(report["mH"].as_f64().unwrap().abs() < 1e-8);
    assert!(root.path().join("imcf-output/mean_curvature.field").exists());
}

#[test]
fn far_out_p2_graph_has_negative_mtilde() {
    let root = tempfile::tempdir().unwrap();
    let out = imcf(root.path(), &["report", "--set", "profile.s=6.0", "--output-dir", "p2"]);
    assert_eq!(out.status.code(), Some(0));
    let report = read_json(&root.path().join("p2/report.json"));
    assert!(report["mtilde"].as_f64().unwrap() < 0.0);
}

#[test]
fn malformed_config_writes_nothing() {
    let root = tempfile::tempdir().unwrap();
    let config = root.path().join("bad.toml");
    fs::write(&config, "[flow]\ncadense = 0.1\n").unwrap();
    let out = imcf(root.path(), &["report", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("flow") && stderr.contains("cadense"), "{stderr}");
    assert!(!root.path().join("imcf-output").exists());

    fs::write(&config, "dimension = [\n").unwrap();
    assert_eq!(imcf(root.path(), &["report", "--config", config.to_str().unwrap()]).status.code(), Some(2));
    let out = imcf(root.path(), &["flow", "--cadence", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!root.path().join("imcf-output").exists());
}

#[test]
fn sphere_flow_grows_area_exponentially_and_reruns_identically() {
    let root = tempfile::tempdir().unwrap();
    let args = |dir: &'static str| {
        [
            "flow", "--set", "profile.preset=sphere", "--set", "profile.radius=1.0", "--band-limit", "8", "--t-final",
            "2", "--output-dir", dir,
        ]
    };
    assert_eq!(imcf(root.path(), &args("a")).status.code(), Some(0));
    let csv = fs::read_to_string(root.path().join("a/trace.csv")).unwrap();
    let t = csv_column(&csv, "t");
    let area = csv_column(&csv, "area");
    let ratio = area[area.len() - 1] / area[0];
    assert!((t[t.len() - 1] - 2.0).abs() < 1e-12);
    assert!((ratio - 2f64.exp()).abs() < 1e-4, "{ratio}");
    assert!(root.path().join("a/snapshots/profile_0000.field").exists());

    assert_eq!(imcf(root.path(), &args("b")).status.code(), Some(0));
    for name in ["trace.csv", "flow.json", "final_coeffs.json", "snapshots/profile_0040.field"] {
        assert_eq!(
            fs::read(root.path().join("a").join(name)).unwrap(),
            fs::read(root.path().join("b").join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn p2_flow_has_non_decreasing_mtilde() {
    let root = tempfile::tempdir().unwrap();
    let out = imcf(
        root.path(),
        &["flow", "--set", "profile.preset=p2", "--set", "profile.base=3.0", "--set", "profile.epsilon=0.15", "--band-limit", "16", "--t-final", "1"],
    );
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(root.path().join("imcf-output/trace.csv")).unwrap();
    let m = csv_column(&csv, "mtilde");
    assert!(m.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn certification_outcomes() {
    let root = tempfile::tempdir().unwrap();
    let out = imcf(root.path(), &["certify", "--band-limit", "16", "--output-dir", "pass"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report = read_json(&root.path().join("pass/certification.json"));
    assert_eq!(report["passed"], true);
    assert_eq!(report["final"]["roundness"]["verdict"], "non-round");

    let out = imcf(
        root.path(),
        &[
            "certify", "--band-limit", "16", "--output-dir", "span", "--set", "profile.fbar.kind=span", "--set",
            "profile.fbar.coefficients=[1.0, 0.3]", "--set", "profile.search_s0=true",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    let report = read_json(&root.path().join("span/certification.json"));
    assert!(report["failed"].as_str().unwrap().starts_with("(2)"));

    let out = imcf(root.path(), &["certify", "--dimension", "4", "--band-limit", "32", "--output-dir", "four"]);
    assert_eq!(out.status.code(), Some(0));
    let report = read_json(&root.path().join("four/certification.json"));
    assert!(report["final"]["Q"].is_null());
    assert!(report["final"]["q"].as_f64().unwrap() > 0.25 * report["c0"].as_f64().unwrap());

    let out = imcf(root.path(), &["certify", "--set", "profile.preset=sphere", "--set", "profile.radius=1.0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verification_batteries() {
    let root = tempfile::tempdir().unwrap();
    let out = imcf(root.path(), &["verify", "--band-limit", "16"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report = read_json(&root.path().join("imcf-output/verify.json"));
    assert!(report["checks"].as_array().unwrap().len() >= 10);

    let out = imcf(root.path(), &["verify", "--band-limit", "8", "--set", "verify.battery=sphere"]);
    assert_eq!(out.status.code(), Some(0));
    let report = read_json(&root.path().join("imcf-output/verify.json"));
    for check in report["checks"].as_array().unwrap() {
        assert!(check["value"].as_f64().unwrap() < 1e-8, "{check}");
    }

    let out = imcf(root.path(), &["verify", "--dimension", "4", "--mode", "full2d"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unsupported mode"));
}

#[test]
fn ball_model_gap_is_small() {
    let root = tempfile::tempdir().unwrap();
    let out = imcf(root.path(), &["ball-model", "--band-limit", "8", "--set", "profile.preset=sphere", "--set", "profile.radius=1.0"]);
    assert_eq!(out.status.code(), Some(0));
    let report = read_json(&root.path().join("imcf-output/ball_model.json"));
    assert!(report["gap"].as_f64().unwrap() < 1e-2);
}

#[test]
fn printed_config_reloads_to_itself() {
    let root = tempfile::tempdir().unwrap();
    let out = imcf(root.path(), &["report", "--print-config", "--set", "flow.cadence=0.1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("cadence = 0.1"));
    let path = root.path().join("config.toml");
    fs::write(&path, &text).unwrap();
    let again = imcf(root.path(), &["flow", "--print-config", "--config", path.to_str().unwrap()]);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), text);
    assert!(!root.path().join("imcf-output").exists());
}
