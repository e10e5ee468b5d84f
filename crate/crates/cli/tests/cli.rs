//! Runs the built binary end to end in scratch directories.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn causim(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_causim"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .env_remove("CAUSIM_OUT")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = causim(dir, args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{args:?}\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(dir: &Path, name: &str) -> Value {
    let text = std::fs::read_to_string(dir.join(format!("{name}.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn csv_header(dir: &Path, name: &str) -> String {
    let text = std::fs::read_to_string(dir.join(format!("{name}.csv"))).unwrap();
    text.lines().next().unwrap().to_string()
}

#[test]
fn bell_pair_matches_cos_two_delta() {
    let dir = TempDir::new().unwrap();
    let stdout = ok(dir.path(), &["bell", "--angle-a", "0", "--angle-b", "30", "--trials", "20000", "--seed", "7"]);
    assert!(stdout.contains("E = "), "{stdout}");
    let doc = json(dir.path(), "bell");
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["command"], "bell");
    assert_eq!(doc["params"]["seed"], 7);
    let e = doc["result"]["correlation"].as_f64().unwrap();
    let se = doc["result"]["correlation_se"].as_f64().unwrap();
    assert!((e - 0.5).abs() < 4.0 * se, "E = {e}");
    assert!((doc["result"]["expected_correlation"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(
        csv_header(dir.path(), "bell"),
        "pair,angle_x,angle_y,trials,n_pp,n_pm,n_mp,n_mm,correlation,correlation_se,p_same"
    );
}

#[test]
fn same_invocation_gives_identical_bytes() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let args = ["bell", "--angle-a", "10", "--angle-b", "70", "--trials", "3000", "--seed", "11", "--runtime", "refined", "--scheduler", "randomized"];
    ok(a.path(), &args);
    ok(b.path(), &args);
    for file in ["bell.json", "bell.csv"] {
        assert_eq!(std::fs::read(a.path().join(file)).unwrap(), std::fs::read(b.path().join(file)).unwrap(), "{file}");
    }
}

#[test]
fn bell_scan_violates_and_lhv_does_not() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["bell", "--angles", "0,30,60", "--trials", "20000", "--seed", "3", "--form", "identical"]);
    let doc = json(dir.path(), "bell");
    let margin = doc["result"]["margin"].as_f64().unwrap();
    let se = doc["result"]["margin_se"].as_f64().unwrap();
    assert!((margin + 0.5).abs() < 4.0 * se, "margin {margin}");
    assert_eq!(doc["result"]["lhv"]["admissible_max"], 0.0);
    assert_eq!(std::fs::read_to_string(dir.path().join("bell.csv")).unwrap().lines().count(), 4);

    let stdout = ok(dir.path(), &["lhv", "--angles", "0,30,60", "--form", "identical"]);
    assert!(stdout.contains("-0.5000"), "{stdout}");
    let doc = json(dir.path(), "lhv");
    assert_eq!(doc["result"]["strategies"], 64);
    assert_eq!(doc["result"]["admissible"], 8);
    assert_eq!(doc["result"]["admissible_max"], 0.0);
    assert!((doc["result"]["model_margin"].as_f64().unwrap() + 0.5).abs() < 1e-12);
    let csv = std::fs::read_to_string(dir.path().join("lhv.csv")).unwrap();
    assert_eq!(csv.lines().count(), 65);
    assert_eq!(csv_header(dir.path(), "lhv"), "a_at_a,a_at_b,a_at_c,b_at_a,b_at_b,b_at_c,admissible,functional");
}

#[test]
fn double_slit_marker_removes_fringes() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["doubleslit", "--marker", "off", "--trials", "5000", "--seed", "1"]);
    let off = json(dir.path(), "doubleslit");
    ok(dir.path(), &["doubleslit", "--marker", "on", "--trials", "5000", "--seed", "1"]);
    let on = json(dir.path(), "doubleslit");
    assert_eq!(off["params"]["marker"], false);
    assert_eq!(on["params"]["marker"], true);
    assert!(off["result"]["visibility"].as_f64().unwrap() > 0.9);
    assert!(on["result"]["visibility"].as_f64().unwrap() < 0.1);
    assert_eq!(csv_header(dir.path(), "doubleslit"), "cell,y,count,frequency,expected");
}

#[test]
fn wave_translates_exactly_at_courant_one() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["wave", "--cells", "120", "--steps", "240", "--courant", "1", "--init", "gaussian"]);
    let doc = json(dir.path(), "wave");
    assert!(doc["result"]["translation_error"]["max"].as_f64().unwrap() < 1e-6);
    assert_eq!(csv_header(dir.path(), "wave"), "t,cell,value");

    ok(dir.path(), &["wave", "--init", "sine", "--courant", "0.5", "--steps", "1000"]);
    let doc = json(dir.path(), "wave");
    assert!(doc["result"]["energy_max_relative_drift"].as_f64().unwrap() < 0.01);
}

#[test]
fn pendulum_anti_phase() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["pendulum", "--mode", "anti-phase", "--k", "0.5", "--m", "1", "--omega", "1", "--steps", "10000"]);
    let doc = json(dir.path(), "pendulum");
    assert!(doc["result"]["local_deviation"].as_f64().unwrap() < 1e-3);
    assert!((doc["result"]["omega_prime"].as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-12);
    assert_eq!(csv_header(dir.path(), "pendulum"), "t,local_a,local_b,closed_a,closed_b,normal_a,normal_b");
}

#[test]
fn analyze_reports_pendulum_non_locality() {
    let dir = TempDir::new().unwrap();
    let spec = concat!(env!("CARGO_MANIFEST_DIR"), "/../../specs/pendulum.model");
    let stdout = ok(dir.path(), &["analyze", spec]);
    assert!(stdout.contains("NonLocal"), "{stdout}");
    let doc = json(dir.path(), "analyze");
    assert_eq!(doc["result"]["class"], "NonLocal");
    for law in doc["result"]["laws"].as_array().unwrap() {
        assert_eq!(law["offenders"], serde_json::json!(["global(ma.x)", "global(mb.x)"]));
    }
    assert_eq!(csv_header(dir.path(), "analyze"), "law,class,offenders");

    ok(dir.path(), &["analyze", "wave-ca"]);
    assert_eq!(json(dir.path(), "analyze")["result"]["class"], "SpacePointLocal");
}

#[test]
fn usage_and_config_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    for args in [
        &["frobnicate"][..],
        &["bell", "--no-such-flag"],
        &["bell", "--runtime", "quantum"],
        &[],
        &["bell", "--trials", "0"],
        &["bell", "--angles", "0,30"],
        &["wave", "--courant", "1.5"],
        &["pendulum", "--m", "0"],
        &["analyze", "/no/such/file.model"],
    ] {
        let out = causim(dir.path(), args);
        assert_eq!(out.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stderr.is_empty());
    }
    let bad = dir.path().join("bad.model");
    std::fs::write(&bad, "model m\nlaw l { reads: cell(0) }\n").unwrap();
    assert_eq!(causim(dir.path(), &["analyze", bad.to_str().unwrap()]).status.code(), Some(1));
    assert!(!dir.path().join("bell.json").exists());
}

#[test]
fn config_supplies_defaults_and_flags_win() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "seed = 5\n[experiment]\nangle_b = 90.0\ntrials = 400\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    ok(dir.path(), &["--config", cfg, "bell"]);
    let doc = json(dir.path(), "bell");
    assert_eq!(doc["params"]["seed"], 5);
    assert_eq!(doc["params"]["trials"], 400);
    // Orthogonal settings never agree.
    assert_eq!(doc["result"]["p_same"], 0.0);

    ok(dir.path(), &["bell", "--config", cfg, "--angle-b", "0", "--seed", "6"]);
    let doc = json(dir.path(), "bell");
    assert_eq!(doc["params"]["seed"], 6);
    assert_eq!(doc["result"]["p_same"], 1.0);

    let typo = dir.path().join("typo.toml");
    std::fs::write(&typo, "[experiment]\ntrails = 10\n").unwrap();
    let out = causim(dir.path(), &["--config", typo.to_str().unwrap(), "bell"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("trails"));

    let bundled = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/bell-pair.toml");
    ok(dir.path(), &["--config", bundled, "bell", "--trials", "200"]);
    assert_eq!(json(dir.path(), "bell")["params"]["seed"], 7);
}

#[test]
fn output_directory_from_environment() {
    let dir = TempDir::new().unwrap();
    let target = dir.path().join("nested/out");
    let out = Command::new(env!("CARGO_BIN_EXE_causim"))
        .args(["lhv"])
        .env("CAUSIM_OUT", &target)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(target.join("lhv.json").exists());
    assert!(target.join("lhv.csv").exists());
}

#[test]
fn bundled_configs_run() {
    let dir = TempDir::new().unwrap();
    let path = |name: &str| format!("{}/../../configs/{name}", env!("CARGO_MANIFEST_DIR"));
    ok(dir.path(), &["--config", &path("bell-scan.toml"), "bell", "--trials", "500"]);
    assert_eq!(json(dir.path(), "bell")["params"]["angles"], serde_json::json!([0.0, 30.0, 60.0]));
    ok(dir.path(), &["--config", &path("doubleslit-marked.toml"), "doubleslit", "--trials", "500"]);
    let doc = json(dir.path(), "doubleslit");
    assert_eq!(doc["params"]["runtime"], "refined");
    assert_eq!(doc["params"]["seed"], 11);
    ok(dir.path(), &["--config", &path("wave-sine.toml"), "wave"]);
    assert_eq!(json(dir.path(), "wave")["params"]["modes"], 2);
}
