//! End-to-end checks of the binary: every subcommand is spawned as a
//! real process so exit codes, file side effects, and stdout wording
//! are tested exactly as a shell sees them.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use regsearch::harness::GroundTruth;
use regsearch::RunRecord;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_regsearch"))
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("binary must spawn");
    assert!(
        out.status.success(),
        "expected success, got {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout must be UTF-8")
}

/// Writes a small scene/template pair plus sidecar and returns the
/// directory holding scene.pgm, template.pgm, and ground_truth.json.
fn synth_pair(dir: &Path) {
    run_ok(bin().args([
        "synth",
        "--out-dir",
        dir.to_str().unwrap(),
        "--scene-width",
        "64",
        "--scene-height",
        "64",
        "--cx",
        "33.5",
        "--cy",
        "30.5",
        "--template-width",
        "24",
        "--template-height",
        "20",
    ]));
}

#[test]
fn synth_writes_pair_and_ground_truth_sidecar() {
    let tmp = tempfile::tempdir().unwrap();
    synth_pair(tmp.path());
    assert!(tmp.path().join("scene.pgm").is_file());
    assert!(tmp.path().join("template.pgm").is_file());
    let sidecar = fs::read_to_string(tmp.path().join("ground_truth.json")).unwrap();
    let truth: GroundTruth = serde_json::from_str(&sidecar).unwrap();
    assert_eq!(truth, GroundTruth::new(33.5, 30.5, 0.5), "scale is 1/sigma");
}

#[test]
fn synth_rejects_an_off_scene_window_and_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("never");
    let out = bin()
        .args([
            "synth",
            "--out-dir",
            out_dir.to_str().unwrap(),
            "--scene-width",
            "64",
            "--scene-height",
            "64",
            "--cx",
            "200.0",
            "--cy",
            "200.0",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(!out_dir.exists(), "failed synth must leave no files");
}

#[test]
fn synth_noise_is_reproducible_per_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let mut variants = Vec::new();
    for (dir, seed) in [("a", "9"), ("b", "9"), ("c", "10")] {
        let out_dir = tmp.path().join(dir);
        run_ok(bin().args([
            "synth",
            "--out-dir",
            out_dir.to_str().unwrap(),
            "--scene-width",
            "48",
            "--scene-height",
            "48",
            "--cx",
            "24.0",
            "--cy",
            "24.0",
            "--template-width",
            "16",
            "--template-height",
            "16",
            "--noise-sigma",
            "0.05",
            "--noise-seed",
            seed,
        ]));
        variants.push(fs::read(out_dir.join("template_noise.pgm")).unwrap());
    }
    assert_eq!(variants[0], variants[1], "same seed, same bytes");
    assert_ne!(variants[0], variants[2], "different seed, different noise");
}

#[test]
fn register_finds_a_near_zero_error_on_the_synthesized_pair() {
    let tmp = tempfile::tempdir().unwrap();
    synth_pair(tmp.path());
    let out_path = tmp.path().join("run.json");
    let out = run_ok(bin().args([
        "register",
        "--scene",
        tmp.path().join("scene.pgm").to_str().unwrap(),
        "--template",
        tmp.path().join("template.pgm").to_str().unwrap(),
        "--algorithm",
        "genetic",
        "--seed",
        "5",
        "--budget",
        "2000",
        "--out",
        out_path.to_str().unwrap(),
    ]));
    let text = stdout(&out);
    assert!(text.contains("evals used:"), "stdout: {text}");
    let record: RunRecord = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert!(record.best_error < 0.05, "error {}", record.best_error);
    assert!(text.contains(&format!("penalized error: {}", record.best_error)));
}

#[test]
fn register_missing_template_exits_two_with_the_path() {
    let tmp = tempfile::tempdir().unwrap();
    synth_pair(tmp.path());
    let missing = tmp.path().join("absent.pgm");
    let out = bin()
        .args([
            "register",
            "--scene",
            tmp.path().join("scene.pgm").to_str().unwrap(),
            "--template",
            missing.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr).to_string();
    assert!(err.contains("absent.pgm"), "stderr: {err}");
}

#[test]
fn register_exits_zero_when_the_penalty_dominates() {
    // A 40x40 template cannot fit a 24x24 scene once the scale is
    // pinned near 1, so every pose pays the out-of-scene penalty; that
    // is a reported result, not a failure.
    let tmp = tempfile::tempdir().unwrap();
    let big = tmp.path().join("big");
    run_ok(bin().args([
        "synth",
        "--out-dir",
        big.to_str().unwrap(),
        "--scene-width",
        "64",
        "--scene-height",
        "64",
        "--cx",
        "32.0",
        "--cy",
        "32.0",
        "--template-width",
        "40",
        "--template-height",
        "40",
    ]));
    let small = tmp.path().join("small");
    run_ok(bin().args([
        "synth",
        "--out-dir",
        small.to_str().unwrap(),
        "--scene-width",
        "24",
        "--scene-height",
        "24",
        "--cx",
        "12.0",
        "--cy",
        "12.0",
        "--template-width",
        "8",
        "--template-height",
        "8",
    ]));
    let out = run_ok(bin().args([
        "register",
        "--scene",
        small.join("scene.pgm").to_str().unwrap(),
        "--template",
        big.join("template.pgm").to_str().unwrap(),
        "--algorithm",
        "swarm",
        "--budget",
        "200",
        "--s-min",
        "0.9",
        "--s-max",
        "1.1",
        "--out",
        tmp.path().join("run.json").to_str().unwrap(),
    ]));
    let text = stdout(&out);
    let out_pixels: u64 = text
        .lines()
        .find_map(|l| l.strip_prefix("out pixels: "))
        .expect("stdout must report out pixels")
        .parse()
        .unwrap();
    assert!(out_pixels > 0, "stdout: {text}");
}

#[test]
fn benchmark_writes_reports_and_reruns_byte_identically() {
    let tmp = tempfile::tempdir().unwrap();
    synth_pair(tmp.path());
    let mut csv_bytes = Vec::new();
    for dir in ["first", "second"] {
        let out_dir = tmp.path().join(dir);
        let out = run_ok(bin().args([
            "benchmark",
            "--scene",
            tmp.path().join("scene.pgm").to_str().unwrap(),
            "--template",
            tmp.path().join("template.pgm").to_str().unwrap(),
            "--ground-truth",
            tmp.path().join("ground_truth.json").to_str().unwrap(),
            "--algorithms",
            "swarm",
            "--runs",
            "2",
            "--budget",
            "100",
            "--seed",
            "3",
            "--out-dir",
            out_dir.to_str().unwrap(),
        ]));
        assert!(out_dir.join("report.json").is_file());
        assert!(out_dir.join("hist_swarm.svg").is_file());
        assert!(out_dir.join("hist_random_search.svg").is_file());
        let text = stdout(&out);
        assert!(text.contains("swarm run 2/2 done"), "stdout: {text}");
        csv_bytes.push(fs::read(out_dir.join("report.csv")).unwrap());
    }
    assert_eq!(csv_bytes[0], csv_bytes[1], "same seed must rerun identically");
    let csv = String::from_utf8(csv_bytes.pop().unwrap()).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("algorithm,run,seed,x,y,s,error,distance,evals")
    );
    let names: std::collections::BTreeSet<&str> = lines
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(
        names.into_iter().collect::<Vec<_>>(),
        ["random_search", "swarm"],
        "requested algorithm plus the appended baseline"
    );
}

#[test]
fn config_file_fills_defaults_and_flags_override_it() {
    let tmp = tempfile::tempdir().unwrap();
    synth_pair(tmp.path());
    let config_path = tmp.path().join("run.conf");
    fs::write(
        &config_path,
        format!(
            "# registration settings\n\
             scene = {}\n\
             template = {}\n\
             algorithm = genetic\n\
             budget = 500\n\
             out = {}\n",
            tmp.path().join("scene.pgm").display(),
            tmp.path().join("template.pgm").display(),
            tmp.path().join("run.json").display()
        ),
    )
    .unwrap();
    let out = run_ok(bin().args([
        "register",
        "--config",
        config_path.to_str().unwrap(),
        "--budget",
        "60",
    ]));
    let text = stdout(&out);
    assert!(text.contains("algorithm: genetic"), "file value applies: {text}");
    assert!(text.contains("evals used: 60"), "flag beats file: {text}");
}

#[test]
fn unknown_config_key_is_rejected_by_name() {
    let tmp = tempfile::tempdir().unwrap();
    let config_path = tmp.path().join("bad.conf");
    fs::write(&config_path, "budgett = 100\n").unwrap();
    let out = bin()
        .args(["register", "--config", config_path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr).to_string();
    assert!(err.contains("budgett"), "stderr: {err}");
}

#[test]
fn out_dir_env_var_provides_the_default_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("from_env");
    let mut cmd = bin();
    cmd.env("REGSEARCH_OUT_DIR", &out_dir).args([
        "synth",
        "--scene-width",
        "32",
        "--scene-height",
        "32",
        "--cx",
        "16.0",
        "--cy",
        "16.0",
        "--template-width",
        "8",
        "--template-height",
        "8",
    ]);
    run_ok(&mut cmd);
    assert!(out_dir.join("template.pgm").is_file());
}

#[test]
fn help_and_version_exit_zero() {
    for flag in ["--help", "--version"] {
        let out = bin().arg(flag).output().unwrap();
        assert_eq!(out.status.code(), Some(0), "{flag}");
    }
}
