//! Per-recording pipeline and variant-level aggregation. Per-recording RNG
//! streams are derived from (global seed, subject, session), so results are
//! independent of worker count and scheduling order.

use std::collections::{BTreeMap, BTreeSet};

use gazepriv_core::classify::{idt_classify, ikf_classify, IdtParams, IkfParams};
use gazepriv_core::interaction::{
    simulate_interaction, success_rate, summarize_accuracy, InteractionError, InteractionOutcome,
};
use gazepriv_core::privacy::{
    corpus_zscore, embed_all, make_velocity_windows, rank1_ir, similarity_matrix,
    GroundTruthMatrix, VelocityWindow,
};
use gazepriv_core::privatize::apply_privatizer;
use gazepriv_core::signal::clamp_offscreen;
use gazepriv_core::Recording;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{ResolvedConfig, ResolvedVariant};
use crate::ops;
use crate::report::{ReportRow, UtilityMetrics};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("worker pool: {0}")]
    Pool(String),
}

/// Stream seed for one recording; parallel scheduling cannot influence it.
pub fn derive_seed(global_seed: u64, subject_id: &str, session_id: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(global_seed.to_le_bytes());
    h.update([0x1f]);
    h.update(subject_id.as_bytes());
    h.update([0x1f]);
    h.update(session_id.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

/// Everything the aggregation step needs from one recording.
struct RecOutput {
    subject_id: String,
    session_id: String,
    error: Option<String>,
    idt: Option<Branch>,
    ikf: Option<Branch>,
    windows: Result<Vec<VelocityWindow>, String>,
}

struct Branch {
    outcomes: Vec<InteractionOutcome>,
    n_targets: usize,
    fixations: usize,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct VariantDetail {
    pub approach: String,
    pub variant: String,
    pub processed: usize,
    pub skipped: usize,
    pub skip_log: Vec<String>,
    pub idt_fixation_count: usize,
    pub ikf_fixation_count: usize,
    pub window_count: usize,
    pub enroll_windows: usize,
    pub auth_windows: usize,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub rows: Vec<ReportRow>,
    pub details: Vec<VariantDetail>,
    pub ingested: usize,
}

fn classify_branch(
    rec: &Recording,
    labels_of: impl Fn(&Recording) -> (Vec<gazepriv_core::classify::FixationSegment>, usize),
    dwell_ms: f64,
) -> Option<Branch> {
    if rec.targets.is_empty() {
        return None;
    }
    let (fixations, fix_count) = labels_of(rec);
    match simulate_interaction(rec, &fixations, dwell_ms) {
        Ok(outcomes) => {
            let n_targets = rec.targets.len();
            Some(Branch { outcomes, n_targets, fixations: fix_count })
        }
        Err(InteractionError::NoTargets) => None,
        Err(_) => None,
    }
}

fn process_recording(
    rec: &Recording,
    variant: &ResolvedVariant,
    rc: &ResolvedConfig,
) -> RecOutput {
    let mut out = RecOutput {
        subject_id: rec.subject_id.clone(),
        session_id: rec.session_id.clone(),
        error: None,
        idt: None,
        ikf: None,
        windows: Ok(Vec::new()),
    };
    let clamped = clamp_offscreen(rec, &rc.bounds);
    let seed = derive_seed(rc.seed, &rec.subject_id, &rec.session_id);
    let privatized = match ops::build_privatizer(&variant.privatizer, seed, clamped.fs)
        .and_then(|mut op| apply_privatizer(&clamped, op.as_mut()))
    {
        Ok(r) => r,
        Err(e) => {
            out.error = Some(e.to_string());
            return out;
        }
    };

    if let Some(params) = rc.idt {
        out.idt = classify_branch(
            &privatized,
            |r| {
                let c = idt_classify(&r.samples, r.fs, params);
                let n = c.fixations.len();
                (c.fixations, n)
            },
            rc.dwell_ms,
        );
    }
    if let Some(params) = rc.ikf {
        out.ikf = classify_branch(
            &privatized,
            |r| {
                let c = ikf_classify(&r.samples, r.fs, params);
                let n = c.fixations.len();
                (c.fixations, n)
            },
            rc.dwell_ms,
        );
    }
    out.windows = make_velocity_windows(&privatized).map_err(|e| e.to_string());
    out
}

/// Pools interaction outcomes across recordings and rolls them up into the
/// per-classifier utility triplet.
fn utility_metrics(branches: Vec<&Branch>) -> UtilityMetrics {
    let total_targets: usize = branches.iter().map(|b| b.n_targets).sum();
    if total_targets == 0 {
        return UtilityMetrics { u50_e50: None, u95_e95: None, sr_pct: None };
    }
    let all: Vec<InteractionOutcome> =
        branches.iter().flat_map(|b| b.outcomes.iter().cloned()).collect();
    let sr = success_rate(&all, total_targets);
    UtilityMetrics { u50_e50: None, u95_e95: None, sr_pct: Some(sr) }
}

fn utility_with_offsets(
    results: &[RecOutput],
    pick: impl Fn(&RecOutput) -> Option<&Branch>,
) -> (UtilityMetrics, usize) {
    let branches: Vec<&Branch> = results.iter().filter_map(&pick).collect();
    let fixation_count: usize = branches.iter().map(|b| b.fixations).sum();
    let mut metrics = utility_metrics(branches.clone());
    if metrics.sr_pct.is_none() {
        return (metrics, fixation_count);
    }
    let mut per_user: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in results {
        if let Some(b) = pick(r) {
            let entry = per_user.entry(r.subject_id.clone()).or_default();
            entry.extend(b.outcomes.iter().filter_map(|o| o.offset_dva));
        }
    }
    match summarize_accuracy(&per_user, metrics.sr_pct.unwrap_or(0.0)) {
        Ok(summary) => {
            metrics.u50_e50 = Some(summary.u50_e50);
            metrics.u95_e95 = Some(summary.u95_e95);
        }
        Err(_) => {
            // No user produced a single valid interaction: errors are
            // unmeasurable, not zero.
        }
    }
    (metrics, fixation_count)
}

struct PrivacyOutcome {
    rank1: Option<f64>,
    note: Option<String>,
    window_count: usize,
    enroll: usize,
    auth: usize,
}

fn privacy_metrics(results: &[RecOutput], rc: &ResolvedConfig) -> PrivacyOutcome {
    let mut windows: Vec<VelocityWindow> = Vec::new();
    let mut reasons: BTreeSet<String> = BTreeSet::new();
    for r in results {
        match &r.windows {
            Ok(w) => windows.extend(w.iter().cloned()),
            Err(e) => {
                reasons.insert(e.clone());
            }
        }
    }
    let mut outcome = PrivacyOutcome {
        rank1: None,
        note: None,
        window_count: windows.len(),
        enroll: 0,
        auth: 0,
    };
    if windows.is_empty() {
        outcome.note = Some(if reasons.is_empty() {
            "no velocity windows (recordings shorter than one window)".to_string()
        } else {
            reasons.into_iter().collect::<Vec<_>>().join("; ")
        });
        return outcome;
    }

    let run = || -> Result<(f64, usize, usize), String> {
        let (normalized, _stats) = corpus_zscore(&windows).map_err(|e| e.to_string())?;
        let embedder = rc.embedder.build().map_err(|e| e.to_string())?;
        let embeddings = embed_all(embedder.as_ref(), &normalized).map_err(|e| e.to_string())?;
        let mut enroll_emb = Vec::new();
        let mut enroll_subject = Vec::new();
        let mut auth_emb = Vec::new();
        let mut auth_subject = Vec::new();
        for (w, e) in normalized.iter().zip(embeddings) {
            if w.session_id == rc.split.enroll_session {
                enroll_emb.push(e);
                enroll_subject.push(w.subject_id.clone());
            } else if w.session_id == rc.split.auth_session {
                auth_emb.push(e);
                auth_subject.push(w.subject_id.clone());
            }
        }
        if enroll_emb.is_empty() || auth_emb.is_empty() {
            return Err(format!(
                "enroll/auth split ({} vs {}) left {}:{} windows",
                rc.split.enroll_session,
                rc.split.auth_session,
                enroll_emb.len(),
                auth_emb.len()
            ));
        }
        let sim = similarity_matrix(&enroll_emb, &auth_emb).map_err(|e| e.to_string())?;
        let truth = GroundTruthMatrix::from_subjects(&enroll_subject, &auth_subject);
        let ir = rank1_ir(&sim, &truth).map_err(|e| e.to_string())?;
        Ok((ir, enroll_emb.len(), auth_emb.len()))
    };
    match run() {
        Ok((ir, enroll, auth)) => {
            outcome.rank1 = Some(ir);
            outcome.enroll = enroll;
            outcome.auth = auth;
        }
        Err(note) => outcome.note = Some(note),
    }
    outcome
}

fn run_variant(
    recordings: &[Recording],
    variant: &ResolvedVariant,
    rc: &ResolvedConfig,
) -> (ReportRow, VariantDetail) {
    let results: Vec<RecOutput> = recordings
        .par_iter()
        .map(|rec| process_recording(rec, variant, rc))
        .collect();

    let mut skip_log = Vec::new();
    for r in &results {
        if let Some(e) = &r.error {
            skip_log.push(format!("{}/{}: {e}", r.subject_id, r.session_id));
        }
    }
    let ok: Vec<RecOutput> = results.into_iter().filter(|r| r.error.is_none()).collect();

    let (idt, idt_fixation_count) = utility_with_offsets(&ok, |r| r.idt.as_ref());
    let (ikf, ikf_fixation_count) = utility_with_offsets(&ok, |r| r.ikf.as_ref());
    let privacy = privacy_metrics(&ok, rc);

    let fs = recordings.first().map_or(1000.0, |r| r.fs);
    // Dataset rates the operator cannot run at fall back to the 1 kHz meta
    // (parameters were validated there at config resolution).
    let meta = ops::spec_meta(&variant.privatizer, fs)
        .or_else(|_| ops::spec_meta(&variant.privatizer, 1000.0))
        .expect("validated at config resolution");

    let row = ReportRow {
        approach: variant.approach.clone(),
        variant: variant.name.clone(),
        rank1_ir_pct: privacy.rank1,
        rank1_ir_note: privacy.note.clone().unwrap_or_default(),
        idt,
        ikf,
        initialization_samples: meta.init_samples,
        latency_ms: meta.latency_ms(fs),
    };
    let detail = VariantDetail {
        approach: variant.approach.clone(),
        variant: variant.name.clone(),
        processed: ok.len(),
        skipped: skip_log.len(),
        skip_log,
        idt_fixation_count,
        ikf_fixation_count,
        window_count: privacy.window_count,
        enroll_windows: privacy.enroll,
        auth_windows: privacy.auth,
        notes: privacy.note.into_iter().collect(),
    };
    (row, detail)
}

/// Runs every configured variant over the ingested recordings inside a
/// dedicated worker pool. Rows come back sorted for reporting.
pub fn run_pipeline(
    recordings: &[Recording],
    rc: &ResolvedConfig,
) -> Result<RunReport, PipelineError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(rc.workers)
        .build()
        .map_err(|e| PipelineError::Pool(e.to_string()))?;
    let (mut rows, mut details) = (Vec::new(), Vec::new());
    pool.install(|| {
        for variant in &rc.variants {
            let (row, detail) = run_variant(recordings, variant, rc);
            rows.push(row);
            details.push(detail);
        }
    });
    crate::report::sort_rows(&mut rows);
    details.sort_by(|a, b| {
        crate::report::natural_cmp(&a.approach, &b.approach)
            .then_with(|| crate::report::natural_cmp(&a.variant, &b.variant))
    });
    Ok(RunReport { rows, details, ingested: recordings.len() })
}

/// Serial privatize-and-window pass for one variant; feeds the CLI
/// inspection paths (`privacy --dump-embeddings`). Returns the windows plus
/// the reasons for any recording whose windowing failed.
pub fn variant_windows(
    recordings: &[Recording],
    variant: &ResolvedVariant,
    rc: &ResolvedConfig,
) -> (Vec<VelocityWindow>, Vec<String>) {
    let mut windows = Vec::new();
    let mut reasons = Vec::new();
    for rec in recordings {
        let out = process_recording(rec, variant, rc);
        if let Some(e) = out.error {
            reasons.push(format!("{}/{}: {e}", rec.subject_id, rec.session_id));
            continue;
        }
        match out.windows {
            Ok(w) => windows.extend(w),
            Err(e) => reasons.push(format!("{}/{}: {e}", rec.subject_id, rec.session_id)),
        }
    }
    (windows, reasons)
}

/// Single-recording classification helper shared by the `classify` and
/// `simulate` subcommands.
pub fn classify_labels(
    rec: &Recording,
    which: Classifier,
    idt: IdtParams,
    ikf: IkfParams,
) -> gazepriv_core::classify::Classification {
    match which {
        Classifier::Idt => idt_classify(&rec.samples, rec.fs, idt),
        Classifier::Ikf => ikf_classify(&rec.samples, rec.fs, ikf),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classifier {
    Idt,
    Ikf,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{resolve, Overrides, PipelineConfig};

    fn rc_with(toml_text: &str) -> ResolvedConfig {
        let cfg: PipelineConfig = toml::from_str(toml_text).unwrap();
        resolve(cfg, &Overrides::default()).unwrap()
    }

    #[test]
    fn derive_seed_separates_streams_and_is_stable() {
        let a = derive_seed(1, "s1", "1");
        assert_eq!(a, derive_seed(1, "s1", "1"));
        assert_ne!(a, derive_seed(2, "s1", "1"));
        assert_ne!(a, derive_seed(1, "s2", "1"));
        assert_ne!(a, derive_seed(1, "s1", "2"));
    }

    #[test]
    fn identity_run_on_clean_target_data_is_perfect() {
        let rc = rc_with("");
        let recs =
            vec![crate::synth::ran_recording("1", "1", 20, 1000.0, 1000.0, 5)];
        let report = run_pipeline(&recs, &rc).unwrap();
        assert_eq!(report.rows.len(), 1);
        let row = &report.rows[0];
        assert_eq!(row.idt.sr_pct, Some(100.0));
        assert!(row.idt.u50_e50.unwrap() <= 1e-6);
        assert_eq!(row.ikf.sr_pct, Some(100.0));
        assert_eq!(row.latency_ms, 0);
        assert_eq!(row.initialization_samples, 0);
        // Single session: the privacy split cannot produce an auth side.
        assert_eq!(row.rank1_ir_pct, None);
        assert!(!row.rank1_ir_note.is_empty());
    }

    #[test]
    fn downsampled_run_reports_rate_mismatch_instead_of_ir() {
        let rc = rc_with(
            r#"
            [privatizer]
            op = "downsample"
            m = 20
            "#,
        );
        let recs =
            vec![crate::synth::ran_recording("1", "1", 10, 1000.0, 1000.0, 5)];
        let report = run_pipeline(&recs, &rc).unwrap();
        let row = &report.rows[0];
        assert_eq!(row.rank1_ir_pct, None);
        assert!(row.rank1_ir_note.contains("50 Hz"), "{}", row.rank1_ir_note);
        assert_eq!(row.initialization_samples, 19);
        assert_eq!(row.latency_ms, 0);
    }

    #[test]
    fn two_session_corpus_yields_rank1() {
        let rc = rc_with("");
        let recs = crate::synth::signature_corpus(3, 2, 10_000, 1000.0, 7);
        let report = run_pipeline(&recs, &rc).unwrap();
        let row = &report.rows[0];
        let ir = row.rank1_ir_pct.expect("two sessions should produce an IR");
        assert!((0.0..=100.0).contains(&ir));
        // No targets anywhere: utility columns are blank, not zero.
        assert_eq!(row.idt.sr_pct, None);
        assert_eq!(report.details[0].window_count, 12);
        assert_eq!(report.details[0].enroll_windows, 6);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let recs = crate::synth::signature_corpus(2, 2, 6_000, 1000.0, 3);
        let run = |workers: usize| {
            let rc = rc_with(&format!(
                "workers = {workers}\nseed = 11\n[privatizer]\nop = \"gaussian\"\nvariance = 0.5\n"
            ));
            run_pipeline(&recs, &rc).unwrap()
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a.rows, b.rows);
        assert_eq!(a.details, b.details);
    }

    #[test]
    fn failing_recording_is_skipped_and_logged() {
        let rc = rc_with(
            r#"
            [privatizer]
            op = "fir"
            fc_hz = 400.0
            taps = 9
            "#,
        );
        // 600 Hz stream: the 400 Hz cutoff exceeds Nyquist, so building the
        // operator fails for this recording only.
        let good = crate::synth::ran_recording("1", "1", 5, 1000.0, 1000.0, 5);
        let mut bad = crate::synth::ran_recording("2", "1", 5, 1000.0, 600.0, 6);
        bad.fs = 600.0;
        let report = run_pipeline(&[good, bad], &rc).unwrap();
        let d = &report.details[0];
        assert_eq!(d.processed, 1);
        assert_eq!(d.skipped, 1);
        assert_eq!(d.skip_log.len(), 1);
        assert!(d.skip_log[0].starts_with("2/1:"));
        assert_eq!(d.processed + d.skipped, report.ingested);
    }
}
