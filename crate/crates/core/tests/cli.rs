//! End-to-end checks of the `lohe` binary: exit codes, reports, files and determinism.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lohe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lohe"))
        .args(args)
        .env_remove("LOHE_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn exit_codes() {
    assert_eq!(lohe(&["kappa-star", "--omegas", "1,0,-1"]).status.code(), Some(0));
    assert_eq!(lohe(&["bogus"]).status.code(), Some(2));
    let empty = lohe(&["sweep", "--omegas", "1,-1", "--kappa-min", "2", "--kappa-max", "1"]);
    assert_eq!(empty.status.code(), Some(2));
    assert!(stderr(&empty).contains("empty kappa range"));
    assert_eq!(lohe(&["lyapunov", "--omegas", "1,-1", "--kappa", "-1"]).status.code(), Some(2));
    assert_eq!(lohe(&["stability", "--preset", "bipolar", "--omegas", "1,-1"]).status.code(), Some(2));
    let blowup = lohe(&["simulate", "--omegas", "1,-1", "--kappa", "4", "--dt", "5", "--t-final", "100"]);
    assert_eq!(blowup.status.code(), Some(3));
    assert_eq!(lohe(&["fixed-point", "--omegas", "1,-1", "--kappa", "1"]).status.code(), Some(4));
}

#[test]
fn below_threshold_pair_reports_periodic_motion() {
    let out = lohe(&["simulate", "--omegas", "1,-1", "--kappa", "1"]);
    assert_eq!(out.status.code(), Some(4));
    let err = stderr(&out);
    assert!(err.contains("periodic"), "{err}");
    assert!(err.contains("3.627"), "{err}");
    assert_eq!(json(&out)["regime"]["kind"], "periodic");
}

#[test]
fn kappa_star_and_full_sync_spectrum() {
    let ks = json(&lohe(&["kappa-star", "--omegas", "1,0,-1"]));
    assert_eq!(ks["schema"], "kappa-star/1");
    assert!((ks["kappa_star"].as_f64().unwrap() - 1.7044).abs() < 1e-4);

    let st = json(&lohe(&["stability", "--preset", "full-sync", "--n", "4"]));
    let eig = st["eigenvalues"].as_array().unwrap();
    assert_eq!(eig.len(), 12);
    assert!(eig.iter().all(|e| (e[0].as_f64().unwrap() - 1.0).abs() < 1e-10 && e[1].as_f64().unwrap().abs() < 1e-10));
    assert_eq!(st["classification"], "stable");
    assert_eq!(st["reference"]["matches"], true);
}

#[test]
fn outputs_are_deterministic() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let run = |dir: &Path| {
        let prefix = dir.join("run");
        let p = prefix.to_str().unwrap();
        let a = lohe(&["sweep", "--omegas", "1,0.2,-1.2", "--kappa-min", "1", "--kappa-max", "5", "--points", "9", "--seed", "7", "--output", p]);
        let b = lohe(&["oracle", "--omegas", "1,-1", "--kappa", "4", "--t-final", "0.5", "--grid-points", "256", "--seed", "7", "--output", p]);
        assert_eq!(a.status.code(), Some(0));
        assert_eq!(b.status.code(), Some(0));
        (a.stdout, b.stdout)
    };
    let (first, second) = (run(dirs[0].path()), run(dirs[1].path()));
    assert!(first == second, "stdout differs between identical runs");
    for suffix in ["sweep.csv", "correlations.csv", "density.csv", "report.json"] {
        let read = |d: &tempfile::TempDir| std::fs::read(d.path().join(format!("run_{suffix}"))).unwrap();
        let (a, b) = (read(&dirs[0]), read(&dirs[1]));
        assert!(!a.is_empty());
        assert!(a == b, "{suffix} differs between identical runs");
    }
}

#[test]
fn sweep_rows_match_single_runs() {
    let sweep = json(&lohe(&["sweep", "--omegas", "1,0.2,-1.2", "--kappa-min", "2", "--kappa-max", "6", "--points", "5", "--seed", "3"]));
    let rows = sweep["rows"].as_array().unwrap();
    let row = &rows[2];
    assert_eq!(row["kappa"].as_f64(), Some(4.0));
    let st = json(&lohe(&["stability", "--omegas", "1,0.2,-1.2", "--kappa", "4"]));
    assert_eq!(row["min_re_eig"], st["min_re"]);
    assert_eq!(row["classification"], st["classification"]);
    let ly = json(&lohe(&["lyapunov", "--omegas", "1,0.2,-1.2", "--kappa", "4", "--seed", "3"]));
    assert_eq!(row["lambda"], ly["lambda"]);
    assert_eq!(row["lyapunov_admissible"], ly["admissible"]);
}

#[test]
fn sweep_locks_at_the_pair_threshold() {
    let sweep = json(&lohe(&["sweep", "--omegas", "1,-1", "--kappa-min", "1.5", "--kappa-max", "4", "--points", "26"]));
    let rows = sweep["rows"].as_array().unwrap();
    let first = rows.iter().find(|r| r["locked"] == true).unwrap();
    assert!((first["kappa"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert!(rows.iter().all(|r| (r["locked"] == true) == (r["kappa"].as_f64().unwrap() >= 2.0)));

    let sweep = json(&lohe(&["sweep", "--omegas", "1,0,-1", "--kappa-min", "1", "--kappa-max", "6", "--points", "21"]));
    let lambdas: Vec<f64> = sweep["rows"]
        .as_array()
        .unwrap()
        .iter()
        .filter_map(|r| r["lambda"].as_f64())
        .collect();
    assert!(lambdas.len() > 10);
    assert!(lambdas.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(
        &path,
        "command = \"lyapunov\"\nseed = 5\n\n[ensemble]\nomegas = [1.0, -1.0]\n\n[coupling]\nkappa = 4.0\n",
    )
    .unwrap();
    let p = path.to_str().unwrap();
    let base = json(&lohe(&["lyapunov", "--config", p]));
    assert_eq!(base["kappa"].as_f64(), Some(4.0));
    let flags = json(&lohe(&["lyapunov", "--omegas", "1,-1", "--kappa", "4", "--seed", "5"]));
    assert_eq!(base["seed"], flags["seed"]);
    assert_eq!(base["meta"]["config_hash"], flags["meta"]["config_hash"]);
    let over = json(&lohe(&["lyapunov", "--config", p, "--kappa", "6"]));
    assert_eq!(over["kappa"].as_f64(), Some(6.0));
    assert_ne!(base["meta"]["config_hash"], over["meta"]["config_hash"]);

    assert_eq!(lohe(&["sweep", "--config", p]).status.code(), Some(2));
    std::fs::write(&path, "command = \"lyapunov\"\nkapa = 1.0\n").unwrap();
    assert_eq!(lohe(&["lyapunov", "--config", p]).status.code(), Some(2));
}

#[test]
fn output_dir_override_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_lohe"))
        .args(["kappa-star", "--omegas", "1,-1", "--output", "elsewhere/pair"])
        .env("LOHE_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    let hash = report["meta"]["config_hash"].as_str().unwrap().to_owned();
    assert_eq!(hash.len(), 64);
    assert_eq!(report["meta"]["version"], env!("CARGO_PKG_VERSION"));

    let csv = std::fs::read_to_string(dir.path().join("pair_critical.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(format!("# version={}", env!("CARGO_PKG_VERSION")).as_str()));
    assert_eq!(lines.next(), Some("# schema=critical/1"));
    assert_eq!(lines.next(), Some(format!("# config_hash={hash}").as_str()));
    let saved: Value = serde_json::from_slice(&std::fs::read(dir.path().join("pair_report.json")).unwrap()).unwrap();
    assert_eq!(saved, report);
    assert!(!Path::new("elsewhere").exists());
}
