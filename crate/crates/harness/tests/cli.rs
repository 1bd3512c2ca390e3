//! End-to-end exercises of the `gazepriv` binary: subcommand plumbing,
//! exit-code contract, and artifact layout.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_gazepriv"));
    // Keep the ambient environment from leaking a dataset root into tests
    // that assert the "no dataset configured" failure mode.
    cmd.env_remove("GAZEPRIV_DATA_ROOT");
    cmd
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn gazepriv");
    assert!(
        out.status.success(),
        "expected success\nstdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn exit_code(cmd: &mut Command) -> (i32, String) {
    let out = cmd.output().expect("spawn gazepriv");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned())
}

/// Small two-subject, two-session corpus without targets.
fn synth_corpus(dir: &Path) {
    run_ok(bin().args([
        "--seed",
        "9",
        "synth",
        "--out",
        dir.to_str().unwrap(),
        "--kind",
        "corpus",
        "--subjects",
        "2",
        "--sessions",
        "2",
        "--seconds",
        "6",
    ]));
}

/// Single RAN recording with a target track.
fn synth_ran(dir: &Path) {
    run_ok(bin().args([
        "--seed",
        "9",
        "synth",
        "--out",
        dir.to_str().unwrap(),
        "--kind",
        "ran",
        "--subjects",
        "1",
        "--sessions",
        "1",
        "--targets",
        "8",
    ]));
}

#[test]
fn synth_writes_one_csv_per_subject_session() {
    let tmp = TempDir::new().unwrap();
    synth_corpus(tmp.path());
    for name in ["S1_1_TEX.csv", "S1_2_TEX.csv", "S2_1_TEX.csv", "S2_2_TEX.csv"] {
        assert!(tmp.path().join(name).is_file(), "missing {name}");
    }
}

#[test]
fn full_run_writes_reports_and_summary() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data");
    synth_corpus(&data);
    let out_dir = tmp.path().join("out");
    let cfg = tmp.path().join("cfg.toml");
    fs::write(
        &cfg,
        format!(
            r#"
seed = 5
output_dir = "{}"

[[variants]]
[variants.privatizer]
op = "identity"

[[variants]]
[variants.privatizer]
op = "median3"
"#,
            out_dir.display()
        ),
    )
    .unwrap();

    let out = run_ok(bin().args([
        "--config",
        cfg.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "run",
    ]));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("Approach"), "table header missing:\n{stdout}");

    for name in ["report.csv", "report.json", "report.txt", "summary.json"] {
        assert!(out_dir.join(name).is_file(), "missing {name}");
    }
    let csv = fs::read_to_string(out_dir.join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3, "header + two variant rows:\n{csv}");
    assert!(csv.lines().nth(1).unwrap().starts_with("Baseline,Raw data"));
}

#[test]
fn preset_run_uses_default_output_dir() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data");
    synth_corpus(&data);
    run_ok(bin().current_dir(tmp.path()).args([
        "--preset",
        "median3",
        "--data",
        data.to_str().unwrap(),
        "run",
    ]));
    assert!(tmp.path().join("gazepriv-out/report.csv").is_file());
}

#[test]
fn config_and_preset_together_exit_1() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("cfg.toml");
    fs::write(&cfg, "seed = 1\n").unwrap();
    let (code, stderr) = exit_code(bin().args([
        "--config",
        cfg.to_str().unwrap(),
        "--preset",
        "baseline",
        "ingest-check",
    ]));
    assert_eq!(code, 1, "stderr: {stderr}");
}

#[test]
fn unknown_preset_exits_1_and_lists_names() {
    let (code, stderr) = exit_code(bin().args(["--preset", "nonexistent", "ingest-check"]));
    assert_eq!(code, 1);
    assert!(stderr.contains("baseline"), "should list presets: {stderr}");
    assert!(stderr.contains("kalman"), "should list presets: {stderr}");
}

#[test]
fn unknown_operator_parameter_exits_1() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("cfg.toml");
    fs::write(&cfg, "[privatizer]\nop = \"median3\"\ntaps = 3\n").unwrap();
    let (code, stderr) =
        exit_code(bin().args(["--config", cfg.to_str().unwrap(), "ingest-check"]));
    assert_eq!(code, 1);
    assert!(stderr.contains("taps"), "should name the bad key: {stderr}");
}

#[test]
fn missing_dataset_root_exits_1() {
    let (code, stderr) = exit_code(bin().arg("ingest-check"));
    assert_eq!(code, 1);
    assert!(stderr.contains("GAZEPRIV_DATA_ROOT"), "should point at the env var: {stderr}");
}

#[test]
fn dataset_root_env_var_is_honoured() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data");
    synth_corpus(&data);
    let out = run_ok(bin().env("GAZEPRIV_DATA_ROOT", &data).arg("ingest-check"));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("S1_1_TEX.csv"), "{stdout}");
}

#[test]
fn malformed_recording_exits_2() {
    let tmp = TempDir::new().unwrap();
    fs::write(
        tmp.path().join("S1_1_TEX.csv"),
        "t_ms,x_dva,y_dva\n0,0.0,0.0\n1,notanumber,0.0\n",
    )
    .unwrap();
    let (code, stderr) =
        exit_code(bin().args(["--data", tmp.path().to_str().unwrap(), "ingest-check"]));
    assert_eq!(code, 2, "stderr: {stderr}");
    assert!(stderr.contains(":3:2:"), "should carry line and column: {stderr}");
}

#[test]
fn empty_dataset_exits_2() {
    let tmp = TempDir::new().unwrap();
    let (code, _) =
        exit_code(bin().args(["--data", tmp.path().to_str().unwrap(), "ingest-check"]));
    assert_eq!(code, 2);
}

#[test]
fn privatize_classify_simulate_roundtrip() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data");
    synth_ran(&data);
    let input = data.join("S1_1_RAN.csv");
    let privatized = tmp.path().join("privatized.csv");

    run_ok(bin().args([
        "--preset",
        "median3",
        "privatize",
        "--input",
        input.to_str().unwrap(),
        "--output",
        privatized.to_str().unwrap(),
    ]));
    let in_lines = fs::read_to_string(&input).unwrap().lines().count();
    let out_lines = fs::read_to_string(&privatized).unwrap().lines().count();
    assert_eq!(in_lines, out_lines, "median filter is one-in-one-out");

    let labels = run_ok(bin().args([
        "classify",
        "--input",
        privatized.to_str().unwrap(),
        "--classifier",
        "idt",
    ]));
    let text = String::from_utf8_lossy(&labels.stdout);
    assert!(text.starts_with("index,label"), "{text}");
    assert!(text.contains("fixation"), "{text}");

    let outcomes = tmp.path().join("outcomes.csv");
    let sim = run_ok(bin().args([
        "simulate",
        "--input",
        input.to_str().unwrap(),
        "--output",
        outcomes.to_str().unwrap(),
    ]));
    let rows = fs::read_to_string(&outcomes).unwrap();
    assert_eq!(rows.lines().count(), 9, "header + one row per target:\n{rows}");
    let stderr = String::from_utf8_lossy(&sim.stderr);
    assert!(stderr.contains("SR"), "{stderr}");
}

#[test]
fn simulate_without_targets_exits_2() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data");
    synth_corpus(&data);
    let (code, stderr) = exit_code(bin().args([
        "simulate",
        "--input",
        data.join("S1_1_TEX.csv").to_str().unwrap(),
    ]));
    assert_eq!(code, 2, "stderr: {stderr}");
}

#[test]
fn privacy_subcommand_reports_ir_and_dumps_embeddings() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data");
    synth_corpus(&data);
    let dump = tmp.path().join("emb");
    let out = run_ok(bin().args([
        "--preset",
        "baseline",
        "--data",
        data.to_str().unwrap(),
        "privacy",
        "--dump-embeddings",
        dump.to_str().unwrap(),
    ]));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("Rank-1"), "{stdout}");
    let dumped: Vec<_> = fs::read_dir(&dump).unwrap().collect();
    assert_eq!(dumped.len(), 1, "one embedding dump per variant");
}

#[test]
fn report_rerenders_from_saved_json() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data");
    synth_corpus(&data);
    let out_dir = tmp.path().join("out");
    let cfg = tmp.path().join("cfg.toml");
    fs::write(&cfg, format!("output_dir = \"{}\"\n", out_dir.display())).unwrap();
    run_ok(bin().args([
        "--config",
        cfg.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "run",
    ]));

    let second = tmp.path().join("rerendered");
    run_ok(bin().args([
        "report",
        "--from",
        out_dir.join("report.json").to_str().unwrap(),
        "--out",
        second.to_str().unwrap(),
    ]));
    let a = fs::read_to_string(out_dir.join("report.txt")).unwrap();
    let b = fs::read_to_string(second.join("report.txt")).unwrap();
    assert_eq!(a, b, "re-rendered table must match the original");
}

#[test]
fn fir_design_dumps_coefficients() {
    let tmp = TempDir::new().unwrap();
    let coeffs = tmp.path().join("coeffs.csv");
    run_ok(bin().args([
        "fir-design",
        "--fc-hz",
        "25",
        "--taps",
        "49",
        "--output",
        coeffs.to_str().unwrap(),
    ]));
    let text = fs::read_to_string(&coeffs).unwrap();
    assert_eq!(text.lines().count(), 50, "header + 49 taps:\n{text}");

    let (code, _) = exit_code(bin().args(["fir-design", "--fc-hz", "600", "--taps", "49"]));
    assert_eq!(code, 1, "cutoff at or above Nyquist is a config error");
}
