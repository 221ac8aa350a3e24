//! Workload metrics and their CSV/JSON serialization.
//!
//! JSON is the full report with fields in declaration order; CSV is a flat
//! two-line document (header + one row) with the error histogram packed as
//! semicolon-separated bucket counts. Both are deterministic for a given
//! report.

use crate::index::{ActionCounts, StructureStats};
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LatencyNs {
    pub p50: u64,
    pub p99: u64,
    pub p999: u64,
    pub max: u64,
}

/// Nearest-rank percentiles over per-op latencies. Sorts in place.
pub fn latency_percentiles(samples: &mut [u64]) -> LatencyNs {
    if samples.is_empty() {
        return LatencyNs::default();
    }
    samples.sort_unstable();
    let pick = |q: f64| {
        let rank = (q * samples.len() as f64).ceil() as usize;
        samples[rank.clamp(1, samples.len()) - 1]
    };
    LatencyNs {
        p50: pick(0.50),
        p99: pick(0.99),
        p999: pick(0.999),
        max: *samples.last().unwrap(),
    }
}

/// Everything one workload run reports.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricsReport {
    pub index: String,
    pub dataset: String,
    pub mix: String,
    pub payload_bytes: usize,
    pub seed: u64,
    pub init_keys: usize,
    pub total_keys: usize,
    pub ops_executed: u64,
    pub reads: u64,
    pub inserts: u64,
    pub scans: u64,
    pub scanned_items: u64,
    pub elapsed_seconds: f64,
    pub ops_per_second: f64,
    pub dataset_exhausted: bool,
    pub oracle_ok: bool,
    pub audit_clean: bool,
    /// Structural-invariant violations behind `audit_clean` (JSON only; the
    /// CSV row carries just the flag).
    pub audit_violations: Vec<String>,
    pub index_bytes: usize,
    pub data_bytes: usize,
    pub latency_ns: LatencyNs,
    /// Power-of-two buckets of model error per stored key; bucket 0 is an
    /// exact hit. Only the learned index reports one.
    pub error_histogram: Option<Vec<u64>>,
    pub node_stats: Option<StructureStats>,
    pub action_counts: Option<ActionCounts>,
    pub btree_height: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(format!("unknown format {other:?} (json|csv)")),
        }
    }
}

pub const REPORT_CSV_HEADER: &str = "index,dataset,mix,payload_bytes,seed,init_keys,total_keys,\
ops_executed,reads,inserts,scans,scanned_items,elapsed_seconds,ops_per_second,\
dataset_exhausted,oracle_ok,audit_clean,index_bytes,data_bytes,\
p50_ns,p99_ns,p999_ns,max_ns,error_histogram";

/// Serializes the report in the chosen format.
pub fn render_report(report: &MetricsReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::Csv => {
            let hist = report
                .error_histogram
                .as_ref()
                .map(|h| {
                    h.iter()
                        .map(u64::to_string)
                        .collect::<Vec<_>>()
                        .join(";")
                })
                .unwrap_or_default();
            format!(
                "{REPORT_CSV_HEADER}\n{},{},{},{},{},{},{},{},{},{},{},{},{:.6},{:.2},{},{},{},{},{},{},{},{},{},{}\n",
                report.index,
                report.dataset,
                report.mix,
                report.payload_bytes,
                report.seed,
                report.init_keys,
                report.total_keys,
                report.ops_executed,
                report.reads,
                report.inserts,
                report.scans,
                report.scanned_items,
                report.elapsed_seconds,
                report.ops_per_second,
                report.dataset_exhausted,
                report.oracle_ok,
                report.audit_clean,
                report.index_bytes,
                report.data_bytes,
                report.latency_ns.p50,
                report.latency_ns.p99,
                report.latency_ns.p999,
                report.latency_ns.max,
                hist,
            )
        }
    }
}

/// Writes the report to `path`, or to stdout when `path` is `None`.
pub fn emit_report(
    report: &MetricsReport,
    format: ReportFormat,
    path: Option<&Path>,
) -> io::Result<()> {
    let text = render_report(report, format);
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            w.write_all(text.as_bytes())?;
            w.flush()
        }
        None => io::stdout().write_all(text.as_bytes()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_report() -> MetricsReport {
        MetricsReport {
            index: "alex".into(),
            dataset: "lognormal".into(),
            mix: "read_heavy".into(),
            payload_bytes: 8,
            seed: 42,
            init_keys: 100,
            total_keys: 200,
            ops_executed: 1000,
            reads: 950,
            inserts: 50,
            scans: 0,
            scanned_items: 0,
            elapsed_seconds: 0.5,
            ops_per_second: 2000.0,
            dataset_exhausted: false,
            oracle_ok: true,
            audit_clean: true,
            audit_violations: Vec::new(),
            index_bytes: 1024,
            data_bytes: 4096,
            latency_ns: LatencyNs { p50: 100, p99: 300, p999: 500, max: 900 },
            error_histogram: Some(vec![70, 20, 10]),
            node_stats: None,
            action_counts: None,
            btree_height: None,
        }
    }

    #[test]
    fn json_round_trips() {
        let report = sample_report();
        let text = render_report(&report, ReportFormat::Json);
        let back: MetricsReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back.ops_executed, report.ops_executed);
        assert_eq!(back.error_histogram, report.error_histogram);
        assert_eq!(back.latency_ns, report.latency_ns);
        // deterministic rendering
        assert_eq!(text, render_report(&report, ReportFormat::Json));
    }

    #[test]
    fn csv_has_documented_header_and_one_row() {
        let text = render_report(&sample_report(), ReportFormat::Csv);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(REPORT_CSV_HEADER));
        let row = lines.next().unwrap();
        assert_eq!(lines.next(), None);
        assert_eq!(row.split(',').count(), REPORT_CSV_HEADER.split(',').count());
        assert!(row.contains("70;20;10"));
    }

    #[test]
    fn percentiles_use_nearest_rank() {
        let mut v: Vec<u64> = (1..=1000).collect();
        let lat = latency_percentiles(&mut v);
        assert_eq!(lat.p50, 500);
        assert_eq!(lat.p99, 990);
        assert_eq!(lat.p999, 999);
        assert_eq!(lat.max, 1000);

        assert_eq!(latency_percentiles(&mut []), LatencyNs::default());
        let mut one = [7u64];
        assert_eq!(
            latency_percentiles(&mut one),
            LatencyNs { p50: 7, p99: 7, p999: 7, max: 7 }
        );
    }

    #[test]
    fn emit_writes_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("report.json");
        emit_report(&sample_report(), ReportFormat::Json, Some(&p)).unwrap();
        let back: MetricsReport =
            serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
        assert_eq!(back.seed, 42);

        let bad = dir.path().join("no_dir").join("report.json");
        assert!(emit_report(&sample_report(), ReportFormat::Json, Some(&bad)).is_err());
    }
}
