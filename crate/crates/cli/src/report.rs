//! Newline-delimited JSON records and the summary table.

use std::fmt::Write as _;
use std::io::{self, Write};

use qism_core::formfactor::VerificationRecord;
use serde::{Deserialize, Serialize};

/// One line of the records file. Runtime is deliberately absent so that
/// reruns compare byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub suite: String,
    pub identity: String,
    #[serde(rename = "N")]
    pub rank: usize,
    #[serde(rename = "M")]
    pub sites: usize,
    #[serde(rename = "m")]
    pub split: usize,
    pub sector_bra: String,
    pub sector_ket: String,
    pub state_bra: String,
    pub state_ket: String,
    pub i: Option<usize>,
    pub j: Option<usize>,
    pub z_or_site: String,
    pub lhs_re: f64,
    pub lhs_im: f64,
    pub rhs_re: f64,
    pub rhs_im: f64,
    pub abs_res: f64,
    pub rel_res: f64,
    pub tol: f64,
    pub pass: bool,
    pub informational: bool,
    pub note: String,
}

/// JSON has no infinities or NaN; they are written as `±f64::MAX`.
fn finite(x: f64) -> f64 {
    if x.is_finite() {
        x
    } else if x == f64::NEG_INFINITY {
        -f64::MAX
    } else {
        f64::MAX
    }
}

fn sector_of(label: &str) -> String {
    label.split('#').next().unwrap_or("").to_string()
}

impl From<&VerificationRecord> for ReportRecord {
    fn from(r: &VerificationRecord) -> Self {
        Self {
            suite: r.suite.clone(),
            identity: r.identity.clone(),
            rank: r.rank,
            sites: r.sites,
            split: r.split,
            sector_bra: sector_of(&r.bra),
            sector_ket: sector_of(&r.ket),
            state_bra: r.bra.clone(),
            state_ket: r.ket.clone(),
            i: r.i,
            j: r.j,
            z_or_site: r.point.clone(),
            lhs_re: finite(r.lhs.re),
            lhs_im: finite(r.lhs.im),
            rhs_re: finite(r.rhs.re),
            rhs_im: finite(r.rhs.im),
            abs_res: finite(r.abs_residual),
            rel_res: finite(r.rel_residual),
            tol: r.tol,
            pass: r.pass,
            informational: r.informational,
            note: r.note.clone(),
        }
    }
}

/// Writes one JSON object per line. serde_json prints the shortest decimal
/// that reads back to the same double, so values round-trip exactly.
pub fn write_records<W: Write>(mut out: W, records: &[VerificationRecord]) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, &ReportRecord::from(r))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_records(text: &str) -> serde_json::Result<Vec<ReportRecord>> {
    text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect()
}

/// One row of the summary table.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub suite: String,
    pub identity: String,
    pub count: usize,
    pub passed: usize,
    pub informational: usize,
    /// Passes decided by an absolute criterion while the relative residual
    /// was at or above `tol`: both sides vanish to working precision, or the
    /// identity is an operator equation checked in max-norm.
    pub abs_only: usize,
    /// Over checked (non-informational) records; NaN-free.
    pub max_rel: f64,
}

impl SummaryRow {
    pub fn pass_rate(&self) -> f64 {
        let checked = self.count - self.informational;
        if checked == 0 {
            1.0
        } else {
            self.passed as f64 / checked as f64
        }
    }
}

/// Aggregates records per `(suite, identity)` in first-seen order.
pub fn summarize(records: &[ReportRecord]) -> Vec<SummaryRow> {
    let mut rows: Vec<SummaryRow> = Vec::new();
    for r in records {
        let k = match rows.iter().position(|x| x.suite == r.suite && x.identity == r.identity) {
            Some(k) => k,
            None => {
                rows.push(SummaryRow { suite: r.suite.clone(), identity: r.identity.clone(), count: 0, passed: 0, informational: 0, abs_only: 0, max_rel: 0.0 });
                rows.len() - 1
            }
        };
        let row = &mut rows[k];
        row.count += 1;
        if r.informational {
            row.informational += 1;
        } else {
            row.passed += r.pass as usize;
            row.abs_only += (r.pass && r.rel_res >= r.tol) as usize;
            let rel = if r.rel_res.is_nan() { f64::INFINITY } else { r.rel_res };
            row.max_rel = row.max_rel.max(rel);
        }
    }
    rows
}

pub fn format_summary(rows: &[SummaryRow]) -> String {
    let w_suite = rows.iter().map(|r| r.suite.len()).max().unwrap_or(5).max(5);
    let w_id = rows.iter().map(|r| r.identity.chars().count()).max().unwrap_or(8).max(8);
    let mut s = String::new();
    let _ = writeln!(s, "{:<w_suite$}  {:<w_id$}  {:>6}  {:>12}  {:>6}  {:>9}", "suite", "identity", "count", "max rel", "abs", "pass rate");
    for r in rows {
        let pad = w_id - r.identity.chars().count();
        let info = if r.informational > 0 { format!("  ({} informational)", r.informational) } else { String::new() };
        let _ = writeln!(
            s,
            "{:<w_suite$}  {}{}  {:>6}  {:>12.3e}  {:>6}  {:>8.1}%{info}",
            r.suite,
            r.identity,
            " ".repeat(pad),
            r.count,
            r.max_rel,
            r.abs_only,
            100.0 * r.pass_rate()
        );
    }
    s
}

/// Whether every checked record passed.
pub fn all_pass(records: &[VerificationRecord]) -> bool {
    records.iter().all(|r| r.pass || r.informational)
}
