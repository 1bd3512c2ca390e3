//! Dataset ingestion. Schema: `t_ms,x_dva,y_dva[,target_x_dva,target_y_dva]`
//! with a mandatory header; `NaN` (any case) or an empty gaze cell marks a
//! missing sample; a change in the target columns starts a new target event.
//! Filenames encode identity as `S<subject>_<session>_<task>.csv`.

use std::path::{Path, PathBuf};

use gazepriv_core::signal::SignalError;
use gazepriv_core::{GazeSample, Recording, TargetEvent};
use regex::Regex;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: schema error: {detail}")]
    Schema { path: PathBuf, detail: String },
    #[error("{path}:{line}:{column}: {detail}")]
    Parse { path: PathBuf, line: u64, column: usize, detail: String },
    #[error("{path}: {source}")]
    Signal {
        path: PathBuf,
        #[source]
        source: SignalError,
    },
    #[error("no recordings found under {0}")]
    NoRecordings(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ManifestEntry {
    pub subject_id: String,
    pub session_id: String,
    pub task_tag: String,
    pub path: PathBuf,
}

/// Files matching the naming convention, sorted by identity for a
/// directory-order-independent pipeline; non-matching CSVs are returned
/// separately so `ingest-check` can flag them.
pub fn scan_dataset(
    root: &Path,
    pattern: &Regex,
) -> Result<(Vec<ManifestEntry>, Vec<PathBuf>), IngestError> {
    let mut entries = Vec::new();
    let mut unmatched = Vec::new();
    let dir = std::fs::read_dir(root)
        .map_err(|source| IngestError::Io { path: root.to_path_buf(), source })?;
    for item in dir {
        let item = item.map_err(|source| IngestError::Io { path: root.to_path_buf(), source })?;
        let path = item.path();
        if !path.is_file() {
            continue;
        }
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        if !name.to_ascii_lowercase().ends_with(".csv") {
            continue;
        }
        match pattern.captures(name) {
            Some(caps) => entries.push(ManifestEntry {
                subject_id: caps["subject"].to_string(),
                session_id: caps["session"].to_string(),
                task_tag: caps["task"].to_string(),
                path,
            }),
            None => unmatched.push(path),
        }
    }
    entries.sort();
    unmatched.sort();
    if entries.is_empty() {
        return Err(IngestError::NoRecordings(root.to_path_buf()));
    }
    Ok((entries, unmatched))
}

/// Empty cells and `NaN` (any case) are missing; anything else must parse.
fn parse_cell(
    raw: &str,
    path: &Path,
    line: u64,
    column: usize,
) -> Result<Option<f64>, IngestError> {
    let v = raw.trim();
    if v.is_empty() || v.eq_ignore_ascii_case("nan") {
        return Ok(None);
    }
    v.parse::<f64>().map(Some).map_err(|_| IngestError::Parse {
        path: path.to_path_buf(),
        line,
        column,
        detail: format!("expected a number, got `{v}`"),
    })
}

const BASE_HEADER: [&str; 3] = ["t_ms", "x_dva", "y_dva"];
const TARGET_HEADER: [&str; 2] = ["target_x_dva", "target_y_dva"];

pub fn parse_recording(entry: &ManifestEntry) -> Result<Recording, IngestError> {
    let path = &entry.path;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => IngestError::Io {
                path: path.clone(),
                source: std::io::Error::other(e.to_string()),
            },
            _ => IngestError::Schema { path: path.clone(), detail: e.to_string() },
        })?;

    let headers = reader
        .headers()
        .map_err(|e| IngestError::Schema { path: path.clone(), detail: e.to_string() })?
        .clone();
    let names: Vec<String> =
        headers.iter().map(|h| h.trim().to_ascii_lowercase()).collect();
    let with_targets = match names.len() {
        3 if names == BASE_HEADER => false,
        5 if names[..3] == BASE_HEADER && names[3..] == TARGET_HEADER => true,
        _ => {
            return Err(IngestError::Schema {
                path: path.clone(),
                detail: format!(
                    "expected header `{}` (optionally + `{}`), got `{}`",
                    BASE_HEADER.join(","),
                    TARGET_HEADER.join(","),
                    names.join(",")
                ),
            })
        }
    };
    // A numeric first row means the header is absent, not just misspelled.
    if names[0].parse::<f64>().is_ok() {
        return Err(IngestError::Schema { path: path.clone(), detail: "missing header row".into() });
    }

    let mut samples = Vec::new();
    let mut targets: Vec<TargetEvent> = Vec::new();
    let mut active: Option<(f64, f64)> = None;
    for (idx, row) in reader.records().enumerate() {
        let line = idx as u64 + 2; // header is line 1
        let row = row.map_err(|e| IngestError::Parse {
            path: path.clone(),
            line,
            column: 0,
            detail: e.to_string(),
        })?;
        let t_ms = parse_cell(&row[0], path, line, 1)?.ok_or_else(|| IngestError::Parse {
            path: path.clone(),
            line,
            column: 1,
            detail: "t_ms must be a finite number".into(),
        })?;
        if !t_ms.is_finite() {
            return Err(IngestError::Parse {
                path: path.clone(),
                line,
                column: 1,
                detail: "t_ms must be a finite number".into(),
            });
        }
        let x = parse_cell(&row[1], path, line, 2)?;
        let y = parse_cell(&row[2], path, line, 3)?;
        samples.push(match (x, y) {
            (Some(x), Some(y)) if x.is_finite() && y.is_finite() => {
                GazeSample::valid(t_ms, x, y)
            }
            _ => GazeSample::missing(t_ms),
        });
        if with_targets {
            let tx = parse_cell(&row[3], path, line, 4)?.filter(|v| v.is_finite());
            let ty = parse_cell(&row[4], path, line, 5)?.filter(|v| v.is_finite());
            match (tx, ty) {
                (Some(tx), Some(ty)) => {
                    if active != Some((tx, ty)) {
                        targets.push(TargetEvent {
                            onset_ms: t_ms,
                            x: tx,
                            y: ty,
                            id: targets.len() as u32,
                        });
                        active = Some((tx, ty));
                    }
                }
                _ => active = None,
            }
        }
    }

    let fs = infer_fs(&samples).ok_or_else(|| IngestError::Schema {
        path: path.clone(),
        detail: "cannot infer sampling rate (need two samples with increasing t_ms)".into(),
    })?;
    let rec = Recording {
        samples,
        fs,
        subject_id: entry.subject_id.clone(),
        session_id: entry.session_id.clone(),
        task_tag: entry.task_tag.clone(),
        targets,
    };
    rec.validate().map_err(|source| IngestError::Signal { path: path.clone(), source })?;
    Ok(rec)
}

/// Sampling rate from the median positive timestamp step.
pub fn infer_fs(samples: &[GazeSample]) -> Option<f64> {
    let mut diffs: Vec<f64> = samples
        .windows(2)
        .map(|w| w[1].t_ms - w[0].t_ms)
        .filter(|d| *d > 0.0 && d.is_finite())
        .collect();
    if diffs.is_empty() {
        return None;
    }
    diffs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = diffs.len() / 2;
    let median = if diffs.len() % 2 == 0 { (diffs[mid - 1] + diffs[mid]) / 2.0 } else { diffs[mid] };
    Some(1000.0 / median)
}

/// Parses every manifest entry; the caller decides whether a failure is
/// fatal (`ingest-check`) or skippable (`run`).
pub fn ingest_all(
    entries: &[ManifestEntry],
) -> Vec<(ManifestEntry, Result<Recording, IngestError>)> {
    entries.iter().map(|e| (e.clone(), parse_recording(e))).collect()
}

/// Writes a recording back out in the ingestion schema. Target columns are
/// emitted only when the recording carries target events; between events the
/// active target holds, before the first one the cells are NaN.
pub fn write_recording(path: &Path, rec: &Recording) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| IngestError::Io { path: path.to_path_buf(), source: std::io::Error::other(e.to_string()) })?;
    let with_targets = !rec.targets.is_empty();
    let io_err = |e: csv::Error| IngestError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e.to_string()),
    };
    if with_targets {
        w.write_record(BASE_HEADER.iter().chain(TARGET_HEADER.iter())).map_err(io_err)?;
    } else {
        w.write_record(BASE_HEADER).map_err(io_err)?;
    }
    let mut next_target = 0usize;
    let mut active: Option<(f64, f64)> = None;
    for s in &rec.samples {
        while next_target < rec.targets.len() && rec.targets[next_target].onset_ms <= s.t_ms {
            active = Some((rec.targets[next_target].x, rec.targets[next_target].y));
            next_target += 1;
        }
        let (x, y) = match s.pos {
            Some((x, y)) => (x.to_string(), y.to_string()),
            None => ("NaN".to_string(), "NaN".to_string()),
        };
        let mut record = vec![s.t_ms.to_string(), x, y];
        if with_targets {
            match active {
                Some((tx, ty)) => {
                    record.push(tx.to_string());
                    record.push(ty.to_string());
                }
                None => {
                    record.push("NaN".to_string());
                    record.push("NaN".to_string());
                }
            }
        }
        w.write_record(&record).map_err(io_err)?;
    }
    w.flush().map_err(|source| IngestError::Io { path: path.to_path_buf(), source })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::DEFAULT_FILENAME_PATTERN;

    fn entry(dir: &Path, name: &str, body: &str) -> ManifestEntry {
        let path = dir.join(name);
        std::fs::write(&path, body).unwrap();
        let re = Regex::new(DEFAULT_FILENAME_PATTERN).unwrap();
        let caps = re.captures(name).unwrap();
        ManifestEntry {
            subject_id: caps["subject"].to_string(),
            session_id: caps["session"].to_string(),
            task_tag: caps["task"].to_string(),
            path,
        }
    }

    #[test]
    fn two_row_file_parses() {
        let dir = tempfile::tempdir().unwrap();
        let e = entry(dir.path(), "S1_1_RAN.csv", "t_ms,x_dva,y_dva\n0,1.0,2.0\n1,1.5,2.5\n");
        let rec = parse_recording(&e).unwrap();
        assert_eq!(rec.samples.len(), 2);
        assert_eq!(rec.samples[1].pos, Some((1.5, 2.5)));
        assert_eq!(rec.fs, 1000.0);
        assert_eq!(rec.subject_id, "1");
        assert_eq!(rec.session_id, "1");
        assert_eq!(rec.task_tag, "RAN");
        assert!(rec.targets.is_empty());
    }

    #[test]
    fn nan_gaze_becomes_missing() {
        let dir = tempfile::tempdir().unwrap();
        let e = entry(
            dir.path(),
            "S1_1_RAN.csv",
            "t_ms,x_dva,y_dva\n0,NaN,NaN\n1,nan,0.5\n2,1.0,2.0\n",
        );
        let rec = parse_recording(&e).unwrap();
        assert!(rec.samples[0].is_missing());
        assert!(rec.samples[1].is_missing());
        assert!(!rec.samples[2].is_missing());
    }

    #[test]
    fn missing_header_is_a_schema_error() {
        let dir = tempfile::tempdir().unwrap();
        let e = entry(dir.path(), "S1_1_RAN.csv", "0,1.0,2.0\n1,1.5,2.5\n");
        assert!(matches!(parse_recording(&e).unwrap_err(), IngestError::Schema { .. }));
    }

    #[test]
    fn wrong_header_is_a_schema_error() {
        let dir = tempfile::tempdir().unwrap();
        let e = entry(dir.path(), "S1_1_RAN.csv", "time,x,y\n0,1.0,2.0\n");
        assert!(matches!(parse_recording(&e).unwrap_err(), IngestError::Schema { .. }));
    }

    #[test]
    fn bad_number_reports_file_line_column() {
        let dir = tempfile::tempdir().unwrap();
        let e = entry(dir.path(), "S1_1_RAN.csv", "t_ms,x_dva,y_dva\n0,1.0,2.0\n1,oops,2.5\n");
        match parse_recording(&e).unwrap_err() {
            IngestError::Parse { line, column, .. } => {
                assert_eq!(line, 3);
                assert_eq!(column, 2);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn target_changes_define_events() {
        let dir = tempfile::tempdir().unwrap();
        let body = "t_ms,x_dva,y_dva,target_x_dva,target_y_dva\n\
                    0,0,0,NaN,NaN\n\
                    1,0,0,1.0,2.0\n\
                    2,0,0,1.0,2.0\n\
                    3,0,0,-3.0,4.0\n\
                    4,0,0,NaN,NaN\n\
                    5,0,0,-3.0,4.0\n";
        let e = entry(dir.path(), "S7_2_RAN.csv", body);
        let rec = parse_recording(&e).unwrap();
        assert_eq!(rec.targets.len(), 3);
        assert_eq!(rec.targets[0].onset_ms, 1.0);
        assert_eq!((rec.targets[0].x, rec.targets[0].y), (1.0, 2.0));
        assert_eq!(rec.targets[1].onset_ms, 3.0);
        // Reappearance after a gap is a fresh trial, even at the same spot.
        assert_eq!(rec.targets[2].onset_ms, 5.0);
        assert_eq!(rec.targets[2].id, 2);
    }

    #[test]
    fn fs_inferred_from_median_step() {
        let dir = tempfile::tempdir().unwrap();
        let e = entry(
            dir.path(),
            "S1_1_TEX.csv",
            "t_ms,x_dva,y_dva\n0,0,0\n4,0,0\n8,0,0\n12,0,0\n",
        );
        assert_eq!(parse_recording(&e).unwrap().fs, 250.0);
    }

    #[test]
    fn scan_sorts_and_separates_unmatched() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["S2_1_RAN.csv", "S1_2_RAN.csv", "S1_1_RAN.csv", "notes.csv"] {
            std::fs::write(dir.path().join(name), "t_ms,x_dva,y_dva\n0,0,0\n1,0,0\n").unwrap();
        }
        let re = Regex::new(DEFAULT_FILENAME_PATTERN).unwrap();
        let (entries, unmatched) = scan_dataset(dir.path(), &re).unwrap();
        let ids: Vec<(String, String)> = entries
            .iter()
            .map(|e| (e.subject_id.clone(), e.session_id.clone()))
            .collect();
        assert_eq!(
            ids,
            vec![
                ("1".to_string(), "1".to_string()),
                ("1".to_string(), "2".to_string()),
                ("2".to_string(), "1".to_string()),
            ]
        );
        assert_eq!(unmatched.len(), 1);
    }

    #[test]
    fn roundtrip_through_write_and_parse() {
        let dir = tempfile::tempdir().unwrap();
        let rec = Recording {
            samples: vec![
                GazeSample::valid(0.0, 0.25, -1.5),
                GazeSample::missing(1.0),
                GazeSample::valid(2.0, 0.125, 7.0),
            ],
            fs: 1000.0,
            subject_id: "9".into(),
            session_id: "1".into(),
            task_tag: "RAN".into(),
            targets: vec![TargetEvent { onset_ms: 1.0, x: 3.5, y: -2.25, id: 0 }],
        };
        let path = dir.path().join("S9_1_RAN.csv");
        write_recording(&path, &rec).unwrap();
        let e = ManifestEntry {
            subject_id: "9".into(),
            session_id: "1".into(),
            task_tag: "RAN".into(),
            path,
        };
        let back = parse_recording(&e).unwrap();
        assert_eq!(back.samples, rec.samples);
        assert_eq!(back.targets, rec.targets);
    }
}
