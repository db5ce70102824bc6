use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn lpfarm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lpfarm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn config(name: &str) -> String {
    let p: PathBuf =
        Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("../../configs/{name}.toml"));
    p.to_string_lossy().into_owned()
}

/// Data rows of a stamped CSV, header first.
fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(path).unwrap();
    assert!(text.starts_with("# config_hash="));
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn error_record(out: &Output) -> serde_json::Value {
    let line = String::from_utf8_lossy(&out.stderr)
        .lines()
        .find(|l| l.starts_with('{'))
        .expect("JSON error record on stderr")
        .to_string();
    serde_json::from_str(&line).unwrap()
}

#[test]
fn no_arguments_prints_usage_and_fails() {
    let out = lpfarm(&[]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(lpfarm(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn bad_inputs_get_distinct_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out_dir = out_dir.to_str().unwrap();

    let missing = lpfarm(&[
        "simulate",
        "--config",
        "/no/such/file.toml",
        "--out",
        out_dir,
    ]);
    assert_eq!(missing.status.code(), Some(4));
    assert_eq!(error_record(&missing)["exit_code"], 4);

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[leds]\nppe = -1.0\n").unwrap();
    let invalid = lpfarm(&[
        "simulate",
        "--config",
        bad.to_str().unwrap(),
        "--out",
        out_dir,
    ]);
    assert_eq!(invalid.status.code(), Some(3));
    assert_eq!(error_record(&invalid)["error"], "config");
}

#[test]
fn sunpath_spans_the_declination_limits() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("sun.csv");
    let out = lpfarm(&["sunpath", "--out", file.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows = csv_rows(&file);
    let col = rows[0].iter().position(|h| h == "declination_deg").unwrap();
    let dec: Vec<f64> = rows[1..].iter().map(|r| r[col].parse().unwrap()).collect();
    let max = dec.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = dec.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(max > 23.44 && max <= 23.45, "{max}");
    assert!((-23.45..-23.44).contains(&min), "{min}");
}

#[test]
fn simulate_bench_writes_stamped_results() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("bench");
    let out = lpfarm(&[
        "simulate",
        "--config",
        &config("bench"),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for f in ["hourly.csv", "summary.json", "daily_dli.csv"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    assert_eq!(csv_rows(&out_dir.join("hourly.csv")).len(), 8761);

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["meta"]["tool_version"], env!("CARGO_PKG_VERSION"));
    let data = &summary["data"];
    assert_eq!(data["meta"]["calibration"]["status"], "calibrated");
    // 7.38 kWh kg⁻¹ at PPE 2.5; absolute values depend on the crop and HVAC
    // surrogates, so the band is loose.
    let seec = data["kpis"]["seec_kwh_kg"].as_f64().unwrap();
    assert!((seec - 7.38).abs() / 7.38 < 0.15, "SEEC {seec}");
}

#[test]
fn compare_emits_one_row_per_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("cmp");
    let out = lpfarm(&[
        "compare",
        "--config",
        &config("bench"),
        "--out",
        out_dir.to_str().unwrap(),
        "--ppe",
        "2,3",
        "--",
        &config("lp_nl"),
        &config("lp_dim"),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows = csv_rows(&out_dir.join("comparison.csv"));
    assert_eq!(rows.len(), 4);
    let names: Vec<&str> = rows[1..].iter().map(|r| r[0].as_str()).collect();
    assert_eq!(names, ["Bench", "LP_NL", "LP_Dim"]);
    assert_eq!(csv_rows(&out_dir.join("ppe.csv")).len(), 3);
}
