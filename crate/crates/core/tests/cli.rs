use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn covcert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_covcert")).args(args).output().expect("binary runs")
}

fn run_config(text: &str, extra: &[&str]) -> (Output, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.json");
    std::fs::write(&cfg, text).unwrap();
    let out = dir.path().join("out");
    let mut args = vec!["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    (covcert(&args), dir)
}

fn read_report(dir: &tempfile::TempDir) -> serde_json::Value {
    let raw = std::fs::read_to_string(dir.path().join("out/report.json")).unwrap();
    serde_json::from_str(&raw).unwrap()
}

#[test]
fn gaussian_sharpness_csv_matches_json() {
    let text = std::fs::read_to_string(configs_dir().join("gaussian_sharpness.json")).unwrap();
    let (output, dir) = run_config(&text, &[]);
    assert_eq!(output.status.code(), Some(0), "{}", String::from_utf8_lossy(&output.stderr));
    let report = read_report(&dir);
    let pairs = report["pairs"].as_array().unwrap();
    assert_eq!(pairs.len(), 36);

    let mut reader = csv::Reader::from_path(dir.path().join("out/pairs.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 36);
    for (row, pair) in rows.iter().zip(pairs) {
        assert_eq!(row[0].parse::<u64>().unwrap(), pair["i"].as_u64().unwrap());
        assert_eq!(row[1].parse::<u64>().unwrap(), pair["j"].as_u64().unwrap());
        assert_eq!(row[3].parse::<f64>().unwrap(), pair["bound"].as_f64().unwrap());
        assert_eq!(row[4].parse::<f64>().unwrap(), pair["oracle_value"].as_f64().unwrap());
        assert_eq!(&row[6], "pass");
    }
    assert!(report["metadata"]["crate_version"].is_string());
}

#[test]
fn missing_sampler_block_exits_2() {
    let text = std::fs::read_to_string(configs_dir().join("mcmc_check.json")).unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    let mut obj = value.as_object().unwrap().clone();
    obj.remove("sampler");
    let (output, _dir) = run_config(&serde_json::to_string_pretty(&obj).unwrap(), &[]);
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("`sampler`"));
}

#[test]
fn unknown_key_exits_2_with_line() {
    let text = std::fs::read_to_string(configs_dir().join("gaussian_sharpness.json"))
        .unwrap()
        .replace("\"quadratic\": 1.0", "\"quadratic\": 1.0, \"quadratc\": 1.0");
    let (output, _dir) = run_config(&text, &[]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("unknown field") && stderr.contains("line 5"), "{stderr}");
}

#[test]
fn threshold_scan_reports_first_refusal() {
    let text = std::fs::read_to_string(configs_dir().join("threshold_scan.json")).unwrap();
    let (output, dir) = run_config(&text, &[]);
    assert_eq!(output.status.code(), Some(0), "{}", String::from_utf8_lossy(&output.stderr));
    assert_eq!(read_report(&dir)["details"]["first_refused"].as_f64(), Some(0.1));
}

#[test]
fn failed_verification_exits_1() {
    let text = std::fs::read_to_string(configs_dir().join("exponential_certificate.json"))
        .unwrap()
        .replace("\"epsilon\": 0.05", "\"epsilon\": 0.2");
    let (output, dir) = run_config(&text, &[]);
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("failed:"));
    assert_eq!(read_report(&dir)["pass"], serde_json::json!(false));
}

#[test]
fn seed_flag_overrides_config() {
    let text = r#"{
        "kind": "mcmc_check",
        "model": {
            "geometry": {"periodic": {"side_lengths": [4]}},
            "potentials": [{"quadratic": 1.0}],
            "coupling": {"nearest_neighbor": {"epsilon": 0.1}}
        },
        "sampler": {"chains": 4, "steps": 4000, "burn_in": 400, "proposal_std": 1.5, "seed": 1}
    }"#;
    let (_, a) = run_config(text, &["--seed", "99"]);
    let (_, b) = run_config(&text.replace("\"seed\": 1", "\"seed\": 99"), &[]);
    let (_, c) = run_config(text, &[]);
    let strip = |d: &tempfile::TempDir| {
        let mut v = read_report(d);
        let obj = v.as_object_mut().unwrap();
        obj.remove("metadata");
        obj.remove("config");
        v
    };
    assert_eq!(strip(&a), strip(&b));
    assert_ne!(strip(&a), strip(&c));
    assert_eq!(read_report(&a)["config"]["sampler"]["seed"], 99);
}

#[test]
fn unreadable_config_exits_2() {
    let output = covcert(&["--config", "/nonexistent/config.json"]);
    assert_eq!(output.status.code(), Some(2));
}
