//! CSV files with a `#` comment preamble.
//!
//! Numbers use Rust's shortest round-trip formatting so identical runs give
//! identical bytes. Columns whose name ends in `_seconds` hold wall-clock
//! timings and are the only ones allowed to differ between reruns.

use std::io::Write;
use std::path::Path;

use crate::config::ExperimentConfig;
use crate::BenchError;

pub const TOOL_VERSION: &str = concat!("wendbench ", env!("CARGO_PKG_VERSION"));

pub fn float(v: f64) -> String {
    format!("{v:?}")
}

pub fn optional(v: Option<f64>) -> String {
    v.map(float).unwrap_or_default()
}

/// Microsecond resolution.
pub fn seconds(v: f64) -> String {
    format!("{v:.6}")
}

pub fn preamble(cfg: &ExperimentConfig, data_provenance: &str) -> Vec<String> {
    vec![
        format!("tool: {TOOL_VERSION}"),
        format!("config_sha256: {}", cfg.digest),
        format!("seed: {}", cfg.seed),
        format!("experiment: {}", cfg.experiment.name()),
        format!(
            "widths: {:?}; epochs: {}; batch_size: {}; repetitions: {}; optimizer: {:?}",
            cfg.widths, cfg.epochs, cfg.batch_size, cfg.repetitions, cfg.optimizer
        ),
        format!("data: {data_provenance}"),
    ]
}

pub fn write_csv(
    path: &Path,
    comments: &[String],
    columns: &[&str],
    rows: &[Vec<String>],
) -> Result<(), BenchError> {
    let io = |source| BenchError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut buf = Vec::new();
    for line in comments {
        writeln!(buf, "# {line}").map_err(io)?;
    }
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let csv_err = |e: csv::Error| io(std::io::Error::other(e));
        w.write_record(columns).map_err(csv_err)?;
        for row in rows {
            w.write_record(row).map_err(csv_err)?;
        }
        w.flush().map_err(io)?;
    }
    std::fs::write(path, buf).map_err(io)
}

/// Reads a CSV written by [`write_csv`], dropping comment lines and every
/// `*_seconds` column, for determinism comparisons.
pub fn strip_timing(text: &str) -> Result<Vec<Vec<String>>, csv::Error> {
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(body.as_bytes());
    let mut rows = Vec::new();
    let mut keep: Vec<bool> = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        if i == 0 {
            keep = rec.iter().map(|c| !c.ends_with("_seconds")).collect();
        }
        rows.push(rec.iter().zip(&keep).filter(|(_, k)| **k).map(|(c, _)| c.to_string()).collect());
    }
    Ok(rows)
}
