//! Report rows and the three renderings: CSV and JSON for machines, an
//! aligned text table for eyes. Output is a pure function of the rows, so
//! equal runs produce byte-identical files.

use std::cmp::Ordering;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct UtilityMetrics {
    pub u50_e50: Option<f64>,
    pub u95_e95: Option<f64>,
    pub sr_pct: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ReportRow {
    pub approach: String,
    pub variant: String,
    /// Absent when the privacy branch could not run; `rank1_ir_note` says why.
    pub rank1_ir_pct: Option<f64>,
    #[serde(default)]
    pub rank1_ir_note: String,
    pub idt: UtilityMetrics,
    pub ikf: UtilityMetrics,
    pub initialization_samples: usize,
    pub latency_ms: u64,
}

/// Digit runs compare numerically, everything else lexically, so variant
/// labels sort as 50 < 100 < 200 and 10/29 < 25/49 < 75/79.
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    let (ab, bb) = (a.as_bytes(), b.as_bytes());
    let (mut i, mut j) = (0usize, 0usize);
    while i < ab.len() && j < bb.len() {
        let (ca, cb) = (ab[i], bb[j]);
        if ca.is_ascii_digit() && cb.is_ascii_digit() {
            let si = i;
            while i < ab.len() && ab[i].is_ascii_digit() {
                i += 1;
            }
            let sj = j;
            while j < bb.len() && bb[j].is_ascii_digit() {
                j += 1;
            }
            let na = a[si..i].trim_start_matches('0');
            let nb = b[sj..j].trim_start_matches('0');
            let ord = na.len().cmp(&nb.len()).then_with(|| na.cmp(nb));
            if ord != Ordering::Equal {
                return ord;
            }
        } else {
            let ord = ca.cmp(&cb);
            if ord != Ordering::Equal {
                return ord;
            }
            i += 1;
            j += 1;
        }
    }
    ab.len().cmp(&bb.len())
}

/// Stable sort by approach, then variant.
pub fn sort_rows(rows: &mut [ReportRow]) {
    rows.sort_by(|a, b| {
        natural_cmp(&a.approach, &b.approach).then_with(|| natural_cmp(&a.variant, &b.variant))
    });
}

fn opt_cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn render_csv(rows: &[ReportRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "approach",
        "variant",
        "rank1_ir_pct",
        "rank1_ir_note",
        "idt_u50_e50",
        "idt_u95_e95",
        "idt_sr_pct",
        "ikf_u50_e50",
        "ikf_u95_e95",
        "ikf_sr_pct",
        "initialization_samples",
        "latency_ms",
    ])
    .expect("writing to memory");
    for r in rows {
        w.write_record([
            r.approach.clone(),
            r.variant.clone(),
            opt_cell(r.rank1_ir_pct),
            r.rank1_ir_note.clone(),
            opt_cell(r.idt.u50_e50),
            opt_cell(r.idt.u95_e95),
            opt_cell(r.idt.sr_pct),
            opt_cell(r.ikf.u50_e50),
            opt_cell(r.ikf.u95_e95),
            opt_cell(r.ikf.sr_pct),
            r.initialization_samples.to_string(),
            r.latency_ms.to_string(),
        ])
        .expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("csv is utf-8")
}

pub fn render_json(rows: &[ReportRow]) -> String {
    let mut s = serde_json::to_string_pretty(rows).expect("rows serialize");
    s.push('\n');
    s
}

const TEXT_HEADER: [&str; 11] = [
    "Approach",
    "Variant",
    "Rank-1 IR (%)",
    "IDT U50|E50",
    "IDT U95|E95",
    "IDT SR (%)",
    "IKF U50|E50",
    "IKF U95|E95",
    "IKF SR (%)",
    "Init (samples)",
    "Latency (ms)",
];

fn fmt2(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.2}")).unwrap_or_else(|| "-".to_string())
}

pub fn render_text(rows: &[ReportRow]) -> String {
    let cells: Vec<[String; 11]> = rows
        .iter()
        .map(|r| {
            [
                r.approach.clone(),
                r.variant.clone(),
                fmt2(r.rank1_ir_pct),
                fmt2(r.idt.u50_e50),
                fmt2(r.idt.u95_e95),
                fmt2(r.idt.sr_pct),
                fmt2(r.ikf.u50_e50),
                fmt2(r.ikf.u95_e95),
                fmt2(r.ikf.sr_pct),
                r.initialization_samples.to_string(),
                r.latency_ms.to_string(),
            ]
        })
        .collect();
    let mut widths: [usize; 11] = TEXT_HEADER.map(str::len);
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let write_row = |out: &mut String, row: &[String]| {
        for (k, (cell, w)) in row.iter().zip(widths).enumerate() {
            if k > 0 {
                out.push_str("  ");
            }
            if k < 2 {
                out.push_str(&format!("{cell:<w$}"));
            } else {
                out.push_str(&format!("{cell:>w$}"));
            }
        }
        // No trailing spaces: right-strip each line.
        while out.ends_with(' ') {
            out.pop();
        }
        out.push('\n');
    };
    let header: Vec<String> = TEXT_HEADER.iter().map(|s| s.to_string()).collect();
    write_row(&mut out, &header);
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
    out.push('\n');
    for row in &cells {
        write_row(&mut out, row);
    }
    let mut notes: Vec<String> = rows
        .iter()
        .filter(|r| !r.rank1_ir_note.is_empty())
        .map(|r| format!("note [{} / {}]: {}", r.approach, r.variant, r.rank1_ir_note))
        .collect();
    if !notes.is_empty() {
        out.push('\n');
        notes.dedup();
        for n in notes {
            out.push_str(&n);
            out.push('\n');
        }
    }
    out
}

/// Writes report.csv / report.json / report.txt under `dir`.
pub fn write_report_files(dir: &Path, rows: &[ReportRow]) -> std::io::Result<[PathBuf; 3]> {
    std::fs::create_dir_all(dir)?;
    let paths = [dir.join("report.csv"), dir.join("report.json"), dir.join("report.txt")];
    let contents = [render_csv(rows), render_json(rows), render_text(rows)];
    for (path, content) in paths.iter().zip(&contents) {
        let mut f = std::fs::File::create(path)?;
        f.write_all(content.as_bytes())?;
    }
    Ok(paths)
}
