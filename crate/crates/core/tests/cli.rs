use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn firepinn(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_firepinn"))
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn zero_iterations_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let scn = data("circle.scn");
    let out = firepinn(dir.path(), &["train", scn.to_str().unwrap(), "--iterations", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("iterations must be positive"));
}

#[test]
fn missing_scenario_exits_with_io_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = firepinn(dir.path(), &["simulate", "/nonexistent/fire.scn"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn malformed_scenario_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.scn");
    std::fs::write(&bad, "[domain]\nt_min = 'soon'\n").unwrap();
    let out = firepinn(dir.path(), &["simulate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn diverging_training_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let scn = data("circle.scn");
    let out = firepinn(
        dir.path(),
        &["train", scn.to_str().unwrap(), "--iterations", "50", "--learning-rate", "1e300", "--constant-rate"],
    );
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn train_compare_forensic_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let scn = data("circle.scn");
    let scn = scn.to_str().unwrap();
    let train_dir = dir.path().join("train");
    let out = firepinn(&train_dir, &["--seed", "3", "train", scn, "--iterations", "30", "--interior-batch", "256", "--boundary-batch", "64"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(train_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "train");
    assert_eq!(manifest["seed"], 3);
    assert_eq!(manifest["config"]["iterations"], 30);
    let loss = std::fs::read_to_string(train_dir.join("loss.csv")).unwrap();
    assert_eq!(loss.lines().count(), 31);

    let sim_dir = dir.path().join("sim");
    let out = firepinn(&sim_dir, &["simulate", scn, "--nx", "41", "--ny", "41", "--times", "0,2,4"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(sim_dir.join("snapshot_002.csv").exists());
    assert!(sim_dir.join("ignition_time.csv").exists());

    let solution = train_dir.join("solution.json");
    let cmp_dir = dir.path().join("cmp");
    let out = firepinn(&cmp_dir, &["compare", solution.to_str().unwrap(), "--snapshots", sim_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let metrics = std::fs::read_to_string(cmp_dir.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 4);

    let fx_dir = dir.path().join("forensic");
    let out = firepinn(&fx_dir, &["forensic", solution.to_str().unwrap(), "--times", "-4,-2", "--nx", "21", "--ny", "21"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(fx_dir.join("forensic_001.csv").exists());
}

#[test]
fn compare_rejects_mismatched_domains() {
    let dir = tempfile::tempdir().unwrap();
    let train_dir = dir.path().join("train");
    let out = firepinn(&train_dir, &["train", data("circle.scn").to_str().unwrap(), "--iterations", "2", "--interior-batch", "64", "--boundary-batch", "8"]);
    assert_eq!(out.status.code(), Some(0));
    let sim_dir = dir.path().join("sim");
    let out = firepinn(&sim_dir, &["simulate", data("one_fire.scn").to_str().unwrap(), "--nx", "21", "--ny", "21", "--times", "0,60"]);
    assert_eq!(out.status.code(), Some(0));
    let out = firepinn(
        &dir.path().join("cmp"),
        &["compare", train_dir.join("solution.json").to_str().unwrap(), "--snapshots", sim_dir.to_str().unwrap()],
    );
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("[0, 2000]") && err.contains("[-5, 5]"), "{err}");
}

#[test]
fn euler_study_writes_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("euler.toml");
    std::fs::write(&cfg, "[euler]\niterations = 20\ninterior_batch = 64\ninitial_batch = 16\nhidden = [8]\n").unwrap();
    let out = firepinn(dir.path(), &["euler-study", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let verdict: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("euler_verdict.json")).unwrap()).unwrap();
    assert_eq!(verdict["iterations"], 20);
    assert!(verdict["reduction"].as_f64().unwrap().is_finite());
}

#[test]
fn bench_reports_timings() {
    let dir = tempfile::tempdir().unwrap();
    let out = firepinn(
        dir.path(),
        &["bench", data("circle.scn").to_str().unwrap(), "--iterations", "5", "--interior-batch", "64", "--boundary-batch", "8", "--nx", "31", "--ny", "31"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("bench.json")).unwrap()).unwrap();
    assert_eq!(report["train_iterations"], 5);
    assert!(report["classical_steps"].as_u64().unwrap() > 0);
}
