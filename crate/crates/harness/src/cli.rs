//! Command-line front end. Exit codes: 0 success, 1 configuration error,
//! 2 data error.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use gazepriv_core::classify::MovementLabel;
use gazepriv_core::privacy::{corpus_zscore, embed_all};
use gazepriv_core::privatize::{apply_privatizer, design_lowpass};
use gazepriv_core::signal::{clamp_offscreen, data_loss_rate};
use gazepriv_core::Recording;

use crate::config::{
    self, load_config_file, load_preset, ConfigError, Overrides, PipelineConfig, ResolvedConfig,
};
use crate::ingest::{self, IngestError, ManifestEntry};
use crate::pipeline::{self, Classifier};
use crate::report;
use crate::synth;

const EXIT_OK: i32 = 0;
const EXIT_CONFIG: i32 = 1;
const EXIT_DATA: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "gazepriv",
    version,
    about = "Streaming gaze privatization: privatize, classify, simulate interaction, and score re-identification"
)]
struct Cli {
    /// TOML config file (mutually exclusive with --preset)
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Built-in preset name; try `--preset nonexistent` for the list
    #[arg(long, global = true, value_name = "NAME")]
    preset: Option<String>,
    /// Override the global RNG seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = one per core)
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Dataset root; falls back to the config, then $GAZEPRIV_DATA_ROOT
    #[arg(long, global = true, value_name = "DIR")]
    data: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Parse every recording in the dataset and print a manifest
    IngestCheck,
    /// Apply the configured privatizer to one CSV
    Privatize {
        #[arg(long, value_name = "CSV")]
        input: PathBuf,
        #[arg(long, value_name = "CSV")]
        output: PathBuf,
    },
    /// Label one CSV sample-by-sample (`index,label`)
    Classify {
        #[arg(long, value_name = "CSV")]
        input: PathBuf,
        /// Output file; stdout when omitted
        #[arg(long, value_name = "CSV")]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ClassifierArg::Idt)]
        classifier: ClassifierArg,
    },
    /// Simulate dwell-based target selection for one CSV with targets
    Simulate {
        #[arg(long, value_name = "CSV")]
        input: PathBuf,
        /// Outcome CSV; stdout when omitted
        #[arg(long, value_name = "CSV")]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ClassifierArg::Idt)]
        classifier: ClassifierArg,
    },
    /// Privacy branch only: Rank-1 IR per configured variant
    Privacy {
        /// Directory for per-variant embedding CSV dumps
        #[arg(long, value_name = "DIR")]
        dump_embeddings: Option<PathBuf>,
    },
    /// Re-render report files from a saved report.json
    Report {
        #[arg(long, value_name = "JSON")]
        from: PathBuf,
        /// Output directory; defaults to the configured output_dir
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Full pipeline over the dataset; writes report.{csv,json,txt}
    Run,
    /// Generate a synthetic dataset
    Synth {
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = SynthKind::Corpus)]
        kind: SynthKind,
        #[arg(long, default_value_t = 4)]
        subjects: usize,
        #[arg(long, default_value_t = 2)]
        sessions: usize,
        /// Targets per recording (kind = ran)
        #[arg(long, default_value_t = 100)]
        targets: usize,
        /// Recording length in seconds (kind = corpus)
        #[arg(long, default_value_t = 30)]
        seconds: u64,
    },
    /// Design a windowed-sinc lowpass and dump its coefficients
    FirDesign {
        #[arg(long)]
        fc_hz: f64,
        #[arg(long)]
        taps: usize,
        #[arg(long, default_value_t = 1000.0)]
        fs: f64,
        /// Coefficient CSV; stdout when omitted
        #[arg(long, value_name = "CSV")]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ClassifierArg {
    Idt,
    Ikf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SynthKind {
    /// Target-following task with target columns
    Ran,
    /// Free-viewing multi-subject corpus without targets
    Corpus,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("{0}")]
    Data(String),
    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("worker pool: {0}")]
    Pipeline(#[from] pipeline::PipelineError),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Output { .. } | CliError::Pipeline(_) => EXIT_CONFIG,
            CliError::Ingest(_) | CliError::Data(_) => EXIT_DATA,
        }
    }
}

pub fn cli_main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    EXIT_OK
                }
                _ => EXIT_CONFIG,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            e.exit_code()
        }
    }
}

fn load_effective(cli: &Cli) -> Result<ResolvedConfig, ConfigError> {
    let file_cfg: PipelineConfig = match (&cli.config, &cli.preset) {
        (Some(_), Some(_)) => {
            return Err(ConfigError::Invalid(
                "--config and --preset are mutually exclusive".into(),
            ))
        }
        (Some(path), None) => load_config_file(path)?,
        (None, Some(name)) => load_preset(name)?,
        (None, None) => PipelineConfig::default(),
    };
    config::resolve(
        file_cfg,
        &Overrides { seed: cli.seed, workers: cli.workers, dataset_path: cli.data.clone() },
    )
}

fn dataset_root(rc: &ResolvedConfig) -> Result<PathBuf, CliError> {
    rc.dataset_path.clone().ok_or_else(|| {
        CliError::Config(ConfigError::Invalid(format!(
            "no dataset root: pass --data, set dataset_path in the config, or export {}",
            config::DATA_ROOT_ENV
        )))
    })
}

/// Identity for a loose input file: taken from the filename when it matches
/// the convention, placeholders otherwise.
fn loose_entry(path: &Path, rc: &ResolvedConfig) -> ManifestEntry {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    match rc.filename_regex.captures(name) {
        Some(caps) => ManifestEntry {
            subject_id: caps["subject"].to_string(),
            session_id: caps["session"].to_string(),
            task_tag: caps["task"].to_string(),
            path: path.to_path_buf(),
        },
        None => ManifestEntry {
            subject_id: "0".to_string(),
            session_id: "0".to_string(),
            task_tag: "NA".to_string(),
            path: path.to_path_buf(),
        },
    }
}

fn ingest_dataset(
    rc: &ResolvedConfig,
    root: &Path,
) -> Result<(Vec<Recording>, Vec<String>, Vec<PathBuf>), CliError> {
    let (entries, unmatched) = ingest::scan_dataset(root, &rc.filename_regex)?;
    let mut recordings = Vec::new();
    let mut failures = Vec::new();
    for (entry, result) in ingest::ingest_all(&entries) {
        match result {
            Ok(rec) => recordings.push(rec),
            Err(e) => failures.push(format!("{}: {e}", entry.path.display())),
        }
    }
    Ok((recordings, failures, unmatched))
}

fn write_text(path: &Path, content: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|source| CliError::Output { path: path.to_path_buf(), source })?;
        }
    }
    std::fs::write(path, content)
        .map_err(|source| CliError::Output { path: path.to_path_buf(), source })
}

fn emit(path: Option<&Path>, content: &str) -> Result<(), CliError> {
    match path {
        Some(p) => write_text(p, content),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn label_name(label: MovementLabel) -> &'static str {
    match label {
        MovementLabel::Fixation => "fixation",
        MovementLabel::Saccade => "saccade",
        MovementLabel::Unknown => "unknown",
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let rc = load_effective(&cli)?;
    match cli.cmd {
        Cmd::IngestCheck => ingest_check(&rc),
        Cmd::Privatize { input, output } => privatize_one(&rc, &input, &output),
        Cmd::Classify { input, output, classifier } => {
            classify_one(&rc, &input, output.as_deref(), classifier)
        }
        Cmd::Simulate { input, output, classifier } => {
            simulate_one(&rc, &input, output.as_deref(), classifier)
        }
        Cmd::Privacy { dump_embeddings } => privacy_only(&rc, dump_embeddings.as_deref()),
        Cmd::Report { from, out } => rerender_report(&rc, &from, out.as_deref()),
        Cmd::Run => run_full(&rc),
        Cmd::Synth { out, kind, subjects, sessions, targets, seconds } => {
            synth_dataset(&rc, &out, kind, subjects, sessions, targets, seconds)
        }
        Cmd::FirDesign { fc_hz, taps, fs, output } => fir_design(fc_hz, taps, fs, output.as_deref()),
    }
}

fn ingest_check(rc: &ResolvedConfig) -> Result<(), CliError> {
    let root = dataset_root(rc)?;
    let (entries, unmatched) = ingest::scan_dataset(&root, &rc.filename_regex)?;
    let mut failures = 0usize;
    println!("{:<10} {:<8} {:<8} {:>9} {:>9} {:>7} {:>8}  file", "subject", "session", "task", "samples", "fs", "loss%", "targets");
    for (entry, result) in ingest::ingest_all(&entries) {
        match result {
            Ok(rec) => println!(
                "{:<10} {:<8} {:<8} {:>9} {:>9.1} {:>7.2} {:>8}  {}",
                rec.subject_id,
                rec.session_id,
                rec.task_tag,
                rec.samples.len(),
                rec.fs,
                data_loss_rate(&rec),
                rec.targets.len(),
                entry.path.display()
            ),
            Err(e) => {
                failures += 1;
                eprintln!("error: {e}");
            }
        }
    }
    for path in &unmatched {
        eprintln!("skipped (name does not match the convention): {}", path.display());
    }
    if failures > 0 {
        return Err(CliError::Data(format!("{failures} recording(s) failed to parse")));
    }
    Ok(())
}

fn privatize_one(rc: &ResolvedConfig, input: &Path, output: &Path) -> Result<(), CliError> {
    let entry = loose_entry(input, rc);
    let rec = ingest::parse_recording(&entry)?;
    let clamped = clamp_offscreen(&rec, &rc.bounds);
    let variant = &rc.variants[0];
    let seed = pipeline::derive_seed(rc.seed, &rec.subject_id, &rec.session_id);
    let privatized = crate::ops::build_privatizer(&variant.privatizer, seed, clamped.fs)
        .and_then(|mut op| apply_privatizer(&clamped, op.as_mut()))
        .map_err(|e| CliError::Data(format!("{}: {e}", input.display())))?;
    ingest::write_recording(output, &privatized)?;
    println!(
        "{} -> {}: {} samples in, {} out at {} Hz ({} / {})",
        input.display(),
        output.display(),
        rec.samples.len(),
        privatized.samples.len(),
        privatized.fs,
        variant.approach,
        variant.name,
    );
    Ok(())
}

fn classify_one(
    rc: &ResolvedConfig,
    input: &Path,
    output: Option<&Path>,
    which: ClassifierArg,
) -> Result<(), CliError> {
    let rec = ingest::parse_recording(&loose_entry(input, rc))?;
    let classifier = match which {
        ClassifierArg::Idt => Classifier::Idt,
        ClassifierArg::Ikf => Classifier::Ikf,
    };
    let classification = pipeline::classify_labels(
        &rec,
        classifier,
        rc.idt.unwrap_or_default(),
        rc.ikf.unwrap_or_default(),
    );
    let mut out = String::from("index,label\n");
    for (i, label) in classification.labels.iter().enumerate() {
        out.push_str(&format!("{i},{}\n", label_name(*label)));
    }
    emit(output, &out)?;
    eprintln!(
        "{} samples, {} fixation segments",
        classification.labels.len(),
        classification.fixations.len()
    );
    Ok(())
}

fn simulate_one(
    rc: &ResolvedConfig,
    input: &Path,
    output: Option<&Path>,
    which: ClassifierArg,
) -> Result<(), CliError> {
    let rec = ingest::parse_recording(&loose_entry(input, rc))?;
    if rec.targets.is_empty() {
        return Err(CliError::Data(format!(
            "{}: no target track; `simulate` needs the target columns",
            input.display()
        )));
    }
    let classifier = match which {
        ClassifierArg::Idt => Classifier::Idt,
        ClassifierArg::Ikf => Classifier::Ikf,
    };
    let classification = pipeline::classify_labels(
        &rec,
        classifier,
        rc.idt.unwrap_or_default(),
        rc.ikf.unwrap_or_default(),
    );
    let outcomes =
        gazepriv_core::interaction::simulate_interaction(&rec, &classification.fixations, rc.dwell_ms)
            .map_err(|e| CliError::Data(format!("{}: {e}", input.display())))?;
    let mut out = String::from("target_id,valid,trigger_x,trigger_y,offset_dva,fixation_count\n");
    for o in &outcomes {
        let (tx, ty) = o.trigger.map(|(x, y)| (x.to_string(), y.to_string())).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            o.target_id,
            o.valid,
            tx,
            ty,
            o.offset_dva.map(|v| v.to_string()).unwrap_or_default(),
            o.fixation_count
        ));
    }
    emit(output, &out)?;
    let sr = gazepriv_core::interaction::success_rate(&outcomes, rec.targets.len());
    let offsets: Vec<f64> = outcomes.iter().filter_map(|o| o.offset_dva).collect();
    let median = median_of(&offsets);
    eprintln!(
        "targets: {}, SR: {sr:.2}%, median offset: {}",
        rec.targets.len(),
        median.map(|m| format!("{m:.4} dva")).unwrap_or_else(|| "-".into())
    );
    Ok(())
}

fn median_of(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 0 { (v[mid - 1] + v[mid]) / 2.0 } else { v[mid] })
}

fn sanitize(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect()
}

fn privacy_only(rc: &ResolvedConfig, dump_dir: Option<&Path>) -> Result<(), CliError> {
    let root = dataset_root(rc)?;
    let (recordings, failures, _) = ingest_dataset(rc, &root)?;
    for f in &failures {
        eprintln!("skipped: {f}");
    }
    if recordings.is_empty() {
        return Err(CliError::Data("no recording parsed successfully".into()));
    }
    for variant in &rc.variants {
        let (windows, reasons) = pipeline::variant_windows(&recordings, variant, rc);
        for r in &reasons {
            eprintln!("note [{} / {}]: {r}", variant.approach, variant.name);
        }
        if windows.is_empty() {
            println!("{} / {}: no velocity windows", variant.approach, variant.name);
            continue;
        }
        let result = (|| -> Result<(f64, usize), String> {
            let (normalized, _) = corpus_zscore(&windows).map_err(|e| e.to_string())?;
            let embedder = rc.embedder.build().map_err(|e| e.to_string())?;
            let embeddings = embed_all(embedder.as_ref(), &normalized).map_err(|e| e.to_string())?;
            if let Some(dir) = dump_dir {
                let mut out = String::from("subject,session,window,embedding\n");
                for (i, (w, e)) in normalized.iter().zip(&embeddings).enumerate() {
                    let joined: Vec<String> = e.iter().map(|v| v.to_string()).collect();
                    out.push_str(&format!(
                        "{},{},{i},\"{}\"\n",
                        w.subject_id,
                        w.session_id,
                        joined.join(";")
                    ));
                }
                let path = dir.join(format!("embeddings_{}.csv", sanitize(&variant.name)));
                write_text(&path, &out).map_err(|e| e.to_string())?;
            }
            let mut enroll = (Vec::new(), Vec::new());
            let mut auth = (Vec::new(), Vec::new());
            for (w, e) in normalized.iter().zip(embeddings) {
                if w.session_id == rc.split.enroll_session {
                    enroll.0.push(e);
                    enroll.1.push(w.subject_id.clone());
                } else if w.session_id == rc.split.auth_session {
                    auth.0.push(e);
                    auth.1.push(w.subject_id.clone());
                }
            }
            if enroll.0.is_empty() || auth.0.is_empty() {
                return Err("enroll/auth split left one side empty".into());
            }
            let sim = gazepriv_core::privacy::similarity_matrix(&enroll.0, &auth.0)
                .map_err(|e| e.to_string())?;
            let truth = gazepriv_core::privacy::GroundTruthMatrix::from_subjects(&enroll.1, &auth.1);
            let ir = gazepriv_core::privacy::rank1_ir(&sim, &truth).map_err(|e| e.to_string())?;
            Ok((ir, normalized.len()))
        })();
        match result {
            Ok((ir, n)) => println!(
                "{} / {}: Rank-1 IR {ir:.2}% over {n} windows",
                variant.approach, variant.name
            ),
            Err(e) => println!("{} / {}: unavailable ({e})", variant.approach, variant.name),
        }
    }
    Ok(())
}

fn rerender_report(rc: &ResolvedConfig, from: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let text = std::fs::read_to_string(from)
        .map_err(|e| CliError::Data(format!("{}: {e}", from.display())))?;
    let mut rows: Vec<report::ReportRow> = serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("{}: {e}", from.display())))?;
    if rows.is_empty() {
        return Err(CliError::Data(format!("{}: report needs at least one row", from.display())));
    }
    report::sort_rows(&mut rows);
    let dir = out.unwrap_or(&rc.output_dir);
    let paths = report::write_report_files(dir, &rows)
        .map_err(|source| CliError::Output { path: dir.to_path_buf(), source })?;
    print!("{}", report::render_text(&rows));
    for p in paths {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn run_full(rc: &ResolvedConfig) -> Result<(), CliError> {
    let root = dataset_root(rc)?;
    let (recordings, failures, unmatched) = ingest_dataset(rc, &root)?;
    for f in &failures {
        eprintln!("skipped: {f}");
    }
    if recordings.is_empty() {
        return Err(CliError::Data("no recording parsed successfully".into()));
    }
    let run = pipeline::run_pipeline(&recordings, rc)?;
    let paths = report::write_report_files(&rc.output_dir, &run.rows)
        .map_err(|source| CliError::Output { path: rc.output_dir.clone(), source })?;
    let summary = serde_json::json!({
        "ingested": run.ingested,
        "parse_failures": failures,
        "unmatched_files": unmatched.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "variants": run.details,
    });
    let summary_path = rc.output_dir.join("summary.json");
    write_text(&summary_path, &format!("{}\n", serde_json::to_string_pretty(&summary).expect("serializable")))?;
    print!("{}", report::render_text(&run.rows));
    for p in paths.iter().chain(std::iter::once(&summary_path)) {
        eprintln!("wrote {}", p.display());
    }
    for d in &run.details {
        for s in &d.skip_log {
            eprintln!("skipped [{} / {}]: {s}", d.approach, d.variant);
        }
    }
    Ok(())
}

fn synth_dataset(
    rc: &ResolvedConfig,
    out: &Path,
    kind: SynthKind,
    subjects: usize,
    sessions: usize,
    targets: usize,
    seconds: u64,
) -> Result<(), CliError> {
    if subjects == 0 || sessions == 0 {
        return Err(CliError::Config(ConfigError::Invalid(
            "synth needs at least one subject and one session".into(),
        )));
    }
    std::fs::create_dir_all(out)
        .map_err(|source| CliError::Output { path: out.to_path_buf(), source })?;
    let mut written = 0usize;
    for subj in 0..subjects {
        let subject = format!("{}", subj + 1);
        for sess in 0..sessions {
            let session = format!("{}", sess + 1);
            let seed = pipeline::derive_seed(rc.seed, &subject, &session);
            let (rec, task) = match kind {
                SynthKind::Ran => {
                    (synth::ran_recording(&subject, &session, targets, 1000.0, 1000.0, seed), "RAN")
                }
                SynthKind::Corpus => (
                    synth::signature_recording(
                        subj,
                        &subject,
                        &session,
                        (seconds * 1000) as usize,
                        1000.0,
                        seed,
                    ),
                    "TEX",
                ),
            };
            let path = out.join(format!("S{subject}_{session}_{task}.csv"));
            ingest::write_recording(&path, &rec)?;
            written += 1;
        }
    }
    println!("wrote {written} recordings under {}", out.display());
    Ok(())
}

fn fir_design(fc_hz: f64, taps: usize, fs: f64, output: Option<&Path>) -> Result<(), CliError> {
    let coeffs = design_lowpass(fc_hz, taps, fs)
        .map_err(|e| CliError::Config(ConfigError::Invalid(e.to_string())))?;
    let mut out = String::from("index,coefficient\n");
    for (i, c) in coeffs.iter().enumerate() {
        out.push_str(&format!("{i},{c}\n"));
    }
    emit(output, &out)?;
    eprintln!("sum = {}", coeffs.iter().sum::<f64>());
    Ok(())
}
