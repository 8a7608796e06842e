//! CSV output for grid results and frontiers.
//!
//! Floats are written in shortest round-trip form, so parsing a report gives
//! back the exact values.

use std::path::{Path, PathBuf};

use super::grid::{CellOutcome, EncoderSpec, EvalRecord, LatencyStats};
use super::pareto::ParetoPoint;
use crate::{Error, Result};

pub const RECORDS_FILE: &str = "records.csv";
pub const FRONTIER_FILE: &str = "frontier.csv";

const RECORD_HEADER: [&str; 10] = [
    "scheme",
    "param",
    "m",
    "r",
    "mean_precision",
    "latency_mean",
    "latency_p50",
    "latency_p95",
    "query_count",
    "skip_reason",
];

fn csv_error(path: &Path, err: csv::Error) -> Error {
    match err.into_kind() {
        csv::ErrorKind::Io(e) => Error::io(path, e),
        other => Error::Malformed {
            location: path.display().to_string(),
            message: format!("{other:?}"),
        },
    }
}

fn record_row(record: &EvalRecord) -> [String; 10] {
    let spec = &record.encoder;
    let head = [
        spec.scheme().to_string(),
        spec.param().to_string(),
        spec.positions().to_string(),
        record.window.to_string(),
    ];
    let tail = match &record.outcome {
        CellOutcome::Measured {
            mean_precision,
            latency,
            query_count,
        } => [
            mean_precision.to_string(),
            latency.mean.to_string(),
            latency.p50.to_string(),
            latency.p95.to_string(),
            query_count.to_string(),
            String::new(),
        ],
        CellOutcome::Skipped { reason } => [
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            reason.clone(),
        ],
    };
    let mut row: [String; 10] = Default::default();
    for (slot, value) in row.iter_mut().zip(head.into_iter().chain(tail)) {
        *slot = value;
    }
    row
}

/// Writes `records.csv` and `frontier.csv` into `dir` and returns their paths.
pub fn emit_report(records: &[EvalRecord], frontier: &[ParetoPoint], dir: impl AsRef<Path>) -> Result<[PathBuf; 2]> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let records_path = dir.join(RECORDS_FILE);
    let mut out = csv::Writer::from_path(&records_path).map_err(|e| csv_error(&records_path, e))?;
    out.write_record(RECORD_HEADER).map_err(|e| csv_error(&records_path, e))?;
    for record in records {
        out.write_record(record_row(record)).map_err(|e| csv_error(&records_path, e))?;
    }
    out.flush().map_err(|e| Error::io(&records_path, e))?;

    let frontier_path = dir.join(FRONTIER_FILE);
    write_frontier(frontier, &frontier_path)?;
    Ok([records_path, frontier_path])
}

pub fn write_frontier(frontier: &[ParetoPoint], path: &Path) -> Result<()> {
    let mut out = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    out.write_record(["latency", "precision", "label"]).map_err(|e| csv_error(path, e))?;
    for p in frontier {
        out.write_record([p.latency.to_string(), p.precision.to_string(), p.label.clone()])
            .map_err(|e| csv_error(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// The records without latency columns, which vary between runs.
pub fn render_precision_table(records: &[EvalRecord]) -> String {
    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(["scheme", "param", "m", "r", "mean_precision", "query_count", "skip_reason"])
        .expect("in-memory write");
    for record in records {
        let row = record_row(record);
        out.write_record([&row[0], &row[1], &row[2], &row[3], &row[4], &row[8], &row[9]])
            .expect("in-memory write");
    }
    String::from_utf8(out.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<EvalRecord>> {
    let path = path.as_ref();
    let malformed = |line: usize, message: String| Error::Malformed {
        location: format!("{}:{line}", path.display()),
        message,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| csv_error(path, e))?;
        if row.len() != RECORD_HEADER.len() {
            return Err(malformed(line, format!("expected {} columns", RECORD_HEADER.len())));
        }
        let int = |col: usize| -> Result<usize> {
            row[col].parse().map_err(|e| malformed(line, format!("{}: {e}", RECORD_HEADER[col])))
        };
        let float = |col: usize| -> Result<f64> {
            row[col].parse().map_err(|e| malformed(line, format!("{}: {e}", RECORD_HEADER[col])))
        };
        let encoder = EncoderSpec::from_parts(&row[0], int(1)?, int(2)?)?;
        let outcome = if row[9].is_empty() {
            CellOutcome::Measured {
                mean_precision: float(4)?,
                latency: LatencyStats {
                    mean: float(5)?,
                    p50: float(6)?,
                    p95: float(7)?,
                },
                query_count: int(8)?,
            }
        } else {
            CellOutcome::Skipped {
                reason: row[9].to_string(),
            }
        };
        records.push(EvalRecord {
            encoder,
            window: int(3)?,
            outcome,
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn measured(precision: f64) -> EvalRecord {
        EvalRecord {
            encoder: EncoderSpec::Subvector { k: 64, m: 16 },
            window: 96,
            outcome: CellOutcome::Measured {
                mean_precision: precision,
                latency: LatencyStats {
                    mean: 0.0012345678912,
                    p50: 1.0 / 3.0,
                    p95: 2e-7,
                },
                query_count: 200,
            },
        }
    }

    #[test]
    fn one_record_two_files() {
        let dir = tempfile::tempdir().unwrap();
        let frontier = [ParetoPoint {
            latency: 0.5,
            precision: 0.75,
            label: "x".into(),
        }];
        let [records_path, frontier_path] = emit_report(&[measured(0.1)], &frontier, dir.path()).unwrap();
        let text = std::fs::read_to_string(&records_path).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("scheme,param,m,r,mean_precision"));
        assert_eq!(std::fs::read_to_string(frontier_path).unwrap(), "latency,precision,label\n0.5,0.75,x\n");
    }

    #[test]
    fn round_trip_with_skips() {
        let dir = tempfile::tempdir().unwrap();
        let records = vec![
            measured(0.123456789123),
            EvalRecord {
                encoder: EncoderSpec::Rounding { p: 2, m: 5 },
                window: 48,
                outcome: CellOutcome::Skipped {
                    reason: "dimension 10 is not divisible, really".into(),
                },
            },
        ];
        let [path, _] = emit_report(&records, &[], dir.path()).unwrap();
        assert!(std::fs::read_to_string(&path).unwrap().contains("\"dimension 10 is not divisible, really\""));
        assert_eq!(read_records(&path).unwrap(), records);
    }

    #[test]
    fn precision_table_has_no_latency() {
        let table = render_precision_table(&[measured(0.5)]);
        assert_eq!(table, "scheme,param,m,r,mean_precision,query_count,skip_reason\nsubvector,64,16,96,0.5,200,\n");
    }
}
