use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hlik(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hlik"))
        .args(args)
        .env_remove("HLIK_JOBS")
        .output()
        .unwrap()
}

fn write_data(dir: &Path, values: &[f64]) -> String {
    let p = dir.join("y.txt");
    let body: String = values.iter().map(|v| format!("{v}\n")).collect();
    fs::write(&p, format!("# sample\n{body}")).unwrap();
    p.display().to_string()
}

fn assert_roundtrip(text: &str) {
    let v: serde_json::Value = serde_json::from_str(text).unwrap();
    let mut again = serde_json::to_string_pretty(&v).unwrap();
    again.push('\n');
    assert_eq!(again, text);
}

#[test]
fn fit_reports_sample_mean_and_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_data(dir.path(), &[0.5, 1.5, 2.0, 4.0]);
    let out = dir.path().join("fit.json");
    let o = hlik(&["fit", "--model", "exp-future-log", "--data", &data, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    assert_roundtrip(&text);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let lambda = v["solution"]["theta"]["values"][0].as_f64().unwrap();
    assert!((lambda - 2.0).abs() < 1e-10);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("fit.json.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "fit");
    let digest = manifest["inputs"][0]["sha256"].as_str().unwrap();
    assert_eq!(digest.len(), 64);
    assert!(digest.chars().all(|c| c.is_ascii_hexdigit()));
}

#[test]
fn natural_scale_fit_exits_with_numeric_code() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_data(dir.path(), &[1.0, 2.0]);
    let o = hlik(&["fit", "--model", "exp-future", "--data", &data]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn unknown_flags_and_missing_seed_are_config_errors() {
    assert_eq!(hlik(&["coverage", "--seed", "1", "--bogus"]).status.code(), Some(2));
    assert_eq!(hlik(&["coverage", "--replications", "100"]).status.code(), Some(2));
    assert_eq!(hlik(&["reproduce-paper"]).status.code(), Some(2));
    assert_eq!(hlik(&["rterm", "--n", "5"]).status.code(), Some(2));
    assert_eq!(hlik(&["fit", "--model", "nope", "--data", "/nonexistent"]).status.code(), Some(2));
}

#[test]
fn flat_lambda_duality_at_one_observation_is_numeric_failure() {
    let o = hlik(&["duality", "--seed", "1", "--n", "1", "--replications", "200", "--prior", "flat-lambda"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cov.toml");
    fs::write(&cfg, "seed = 4\nreplications = 5000\nsample-sizes = [3]\nalphas = [0.1]\n").unwrap();
    let out = dir.path().join("cov.csv");
    let o = hlik(&[
        "coverage",
        "--config",
        cfg.to_str().unwrap(),
        "--replications",
        "150",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(&out).unwrap();
    let row: Vec<&str> = table.lines().nth(1).unwrap().split(',').collect();
    assert_eq!((row[1], row[2], row[7]), ("3", "0.1", "150"));
    let text = fs::read_to_string(dir.path().join("cov.csv.manifest.json")).unwrap();
    assert_roundtrip(&text);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["config"]["replications"], 150);
    assert_eq!(v["seed"], 4);
}

#[test]
fn audit_separates_scales() {
    let o = hlik(&["audit", "--model", "bayarri"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_roundtrip(&text);
    assert!(String::from_utf8_lossy(&o.stderr).contains("Fails"));
    let o = hlik(&["audit", "--model", "bayarri-log"]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("Bartlized"));
}

#[test]
fn predict_emits_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_data(dir.path(), &[0.4, 1.1, 2.3, 0.9, 1.7]);
    let csv = dir.path().join("grid.csv");
    let o = hlik(&["predict", "--model", "exp-future-log", "--data", &data, "--csv", csv.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_roundtrip(&String::from_utf8(o.stdout).unwrap());
    let grid = fs::read_to_string(&csv).unwrap();
    assert_eq!(grid.lines().next().unwrap(), "x,h_distribution,pivotal,posterior");
}

#[test]
fn csv_outputs_have_documented_headers() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&[&str], &str); 3] = [
        (
            &["coverage", "--seed", "2", "--replications", "100", "--n", "4"],
            "method,n,alpha,nominal,coverage,se,mean_width,replications",
        ),
        (
            &["rterm", "--seed", "2", "--replications", "200", "--n", "5"],
            "n,mean_r,mean_r_se,exact_mean_r,var_r,var_r_se,mean_abs_r,mean_z,var_z,var_log_y,var_log_y_se,z_to_normal_ratio_at_one",
        ),
        (
            &["duality", "--seed", "2", "--replications", "200", "--n", "5"],
            "n,prior,side,mean_term,mean_term_se,variance_term,variance_term_se,total,total_se",
        ),
    ];
    for (i, (args, header)) in cases.iter().enumerate() {
        let out = dir.path().join(format!("t{i}.csv"));
        let mut a = args.to_vec();
        a.extend(["--out", out.to_str().unwrap()]);
        let o = hlik(&a);
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(fs::read_to_string(&out).unwrap().lines().next().unwrap(), *header);
    }
}

#[test]
fn jobs_zero_is_rejected() {
    assert_eq!(hlik(&["--jobs", "0", "audit", "--model", "bayarri"]).status.code(), Some(2));
}
