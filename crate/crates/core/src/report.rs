//! Tables over saved benchmark reports.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::bench::{BenchReport, CostBreakdown};
use crate::error::{Error, Result};

/// Reads one report per non-blank line.
pub fn parse_reports(text: &str) -> Result<Vec<BenchReport>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() })
        })
        .collect()
}

pub fn load_reports(path: impl AsRef<Path>) -> Result<Vec<BenchReport>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_reports(&text).map_err(|e| match e {
        Error::Parse { line, msg } => Error::Parse { line, msg: format!("{}: {msg}", path.display()) },
        e => e,
    })
}

/// `base / other` for the base-mode report of the same benchmark and input.
pub fn ratios(reports: &[BenchReport], r: &BenchReport) -> Option<(f64, f64)> {
    if r.mode == "base" {
        return None;
    }
    let base = reports
        .iter()
        .find(|b| b.mode == "base" && b.benchmark == r.benchmark && b.input == r.input)?;
    let ratio = |a: u64, b: u64| if b == 0 { f64::INFINITY } else { a as f64 / b as f64 };
    Some((
        ratio(base.messages_sent, r.messages_sent),
        ratio(base.arrays_created, r.arrays_created),
    ))
}

/// One row per report with the cost breakdown in milliseconds. Ratio columns
/// appear when at least one report has a base-mode partner.
pub fn render_table(reports: &[BenchReport]) -> String {
    let paired = reports.iter().any(|r| ratios(reports, r).is_some());
    let mut header: Vec<String> = ["benchmark", "input", "mode", "messages", "arrays"]
        .into_iter()
        .map(String::from)
        .collect();
    if paired {
        header.push("msg ratio".into());
        header.push("array ratio".into());
    }
    header.extend(CostBreakdown::CATEGORIES.iter().map(|c| format!("{c} ms")));

    let mut rows = vec![header];
    for r in reports {
        let mut row = vec![
            r.benchmark.to_string(),
            r.input.clone(),
            r.mode.clone(),
            r.messages_sent.to_string(),
            r.arrays_created.to_string(),
        ];
        if paired {
            match ratios(reports, r) {
                Some((m, a)) => {
                    row.push(format!("{m:.2}"));
                    row.push(format!("{a:.2}"));
                }
                None => row.extend(["-".to_string(), "-".to_string()]),
            }
        }
        row.extend(r.timing.values().iter().map(|ns| format!("{:.3}", *ns as f64 / 1e6)));
        rows.push(row);
    }

    let widths: Vec<usize> = (0..rows[0].len())
        .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &rows {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (cell, w))| if i < 3 { format!("{cell:<w$}") } else { format!("{cell:>w$}") })
            .collect();
        writeln!(out, "{}", cells.join("  ").trim_end()).expect("write to string");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::Benchmark;
    use crate::client::ClientConfig;
    use serde_json::json;

    fn report(mode: &str, messages: u64, arrays: u64) -> BenchReport {
        BenchReport {
            benchmark: Benchmark::TcSparse,
            input: "kn:4".into(),
            mode: mode.into(),
            flags: ClientConfig::optimized(),
            result: json!(4),
            verified: Some(true),
            pair_match: None,
            messages_sent: messages,
            arrays_created: arrays,
            arrays_deleted: arrays,
            timing: CostBreakdown::default(),
        }
    }

    #[test]
    fn ratio_is_base_over_opt() {
        let rs = vec![report("base", 90, 30), report("opt", 30, 10)];
        assert_eq!(ratios(&rs, &rs[1]), Some((3.0, 3.0)));
        assert_eq!(ratios(&rs, &rs[0]), None);
        let table = render_table(&rs);
        assert!(table.lines().next().unwrap().contains("array ratio"));
        assert!(table.lines().nth(2).unwrap().contains("3.00"));
    }

    #[test]
    fn single_report_has_no_ratio_column() {
        let table = render_table(&[report("opt", 3, 1)]);
        assert!(!table.contains("ratio"));
        assert_eq!(table.lines().count(), 2);
    }

    #[test]
    fn reports_roundtrip_as_json_lines() {
        let rs = vec![report("base", 9, 3), report("opt", 3, 1)];
        let text: String = rs.iter().map(|r| r.to_json() + "\n").collect();
        assert_eq!(parse_reports(&text).unwrap(), rs);
        assert!(matches!(parse_reports("{}\n"), Err(Error::Parse { line: 1, .. })));
    }
}
