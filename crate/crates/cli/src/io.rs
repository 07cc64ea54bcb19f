//! Atomic file output and the numeric CSV layouts.

use std::io::Write;
use std::path::Path;

use fpme::evolve::Trajectory;
use serde::Serialize;
use tempfile::NamedTempFile;

use crate::error::{io_err, CliError, CliResult};

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut tmp = NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e.error,
    })?;
    Ok(())
}

pub fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("output serializes");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Seventeen significant digits, enough to round-trip every `f64`.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Header row plus numeric rows, every field formatted by [`fmt_num`].
pub fn numeric_csv(header: &[String], rows: impl IntoIterator<Item = Vec<f64>>) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Io {
        path: "<memory>".into(),
        source: std::io::Error::other(e),
    };
    if !header.is_empty() {
        w.write_record(header).map_err(err)?;
    }
    for row in rows {
        w.write_record(row.iter().map(|&v| fmt_num(v))).map_err(err)?;
    }
    w.into_inner().map_err(|e| CliError::Io {
        path: "<memory>".into(),
        source: e.into_error(),
    })
}

/// `t,x_0,...,x_{N-1}` with one row per snapshot.
pub fn trajectory_csv(traj: &Trajectory<f64>) -> CliResult<Vec<u8>> {
    let nodes = traj.snapshots()[0].len();
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain((0..nodes).map(|i| format!("x_{i}")))
        .collect();
    let rows = traj.times().iter().zip(traj.snapshots()).map(|(&t, u)| {
        let mut row = Vec::with_capacity(nodes + 1);
        row.push(t);
        row.extend_from_slice(u.values());
        row
    });
    numeric_csv(&header, rows)
}

/// A parsed numeric CSV with a header row.
#[derive(Clone, Debug, PartialEq)]
pub struct NumericTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl NumericTable {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h.trim() == name)
    }
}

/// Reads a header plus rows of numbers. Errors carry the 1-based line number.
pub fn read_numeric_csv(path: &Path) -> CliResult<NumericTable> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(file);
    let bad = |row: u64, message: String| CliError::Csv {
        path: path.display().to_string(),
        row,
        message,
    };
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| bad(1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || header.iter().all(|h| h.trim().is_empty()) {
        return Err(bad(1, "missing header".into()));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let row = e.position().map_or(0, |p| p.line());
            bad(row, e.to_string())
        })?;
        let row = record.position().map_or(0, |p| p.line());
        if record.len() != header.len() {
            return Err(bad(row, format!("expected {} fields, found {}", header.len(), record.len())));
        }
        let values = record
            .iter()
            .map(|field| {
                field
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| bad(row, format!("cannot parse {field:?} as a number")))
            })
            .collect::<CliResult<Vec<f64>>>()?;
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(bad(2, "no data rows".into()));
    }
    Ok(NumericTable { header, rows })
}
