//! CSV input, score output and data fingerprints.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use occkit::FeatureMatrix;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Row and column counts plus a SHA-256 of the file bytes.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct Fingerprint {
    pub path: String,
    pub rows: usize,
    pub cols: usize,
    pub sha256: String,
}

/// A parsed numeric table. `labels` holds the final column when requested.
#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<String>,
    pub fingerprint: Fingerprint,
}

impl Table {
    pub fn n_cols(&self) -> usize {
        self.header.len()
    }

    pub fn matrix(&self) -> CliResult<FeatureMatrix> {
        if self.rows.is_empty() {
            return Err(CliError::invalid(format!(
                "{}: no data rows",
                self.fingerprint.path
            )));
        }
        Ok(FeatureMatrix::from_rows(&self.rows)?)
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Reads a CSV with a header row. With `labelled`, the last column is kept
/// as a string label and excluded from the attributes.
pub fn read_table(path: &Path, labelled: bool) -> CliResult<Table> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let shown = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(bytes.as_slice());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::invalid(format!("{shown}: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || (labelled && header.len() < 2) {
        return Err(CliError::invalid(format!("{shown}: too few columns")));
    }
    let n_attr = if labelled {
        header.len() - 1
    } else {
        header.len()
    };

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| CliError::invalid(format!("{shown}: {e}")))?;
        let mut row = Vec::with_capacity(n_attr);
        for (j, cell) in record.iter().take(n_attr).enumerate() {
            let cell = cell.trim();
            if cell.is_empty()
                || cell.eq_ignore_ascii_case("na")
                || cell.eq_ignore_ascii_case("nan")
                || cell == "?"
            {
                return Err(CliError::invalid(format!(
                    "{shown}: line {line}, column {:?}: missing value",
                    header[j]
                )));
            }
            let v: f64 = cell.parse().map_err(|_| {
                CliError::invalid(format!(
                    "{shown}: line {line}, column {:?}: {cell:?} is not a number",
                    header[j]
                ))
            })?;
            if !v.is_finite() {
                return Err(CliError::invalid(format!(
                    "{shown}: line {line}, column {:?}: non-finite value",
                    header[j]
                )));
            }
            row.push(v);
        }
        if labelled {
            labels.push(record[n_attr].trim().to_string());
        }
        rows.push(row);
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| shown.clone());
    Ok(Table {
        name,
        fingerprint: Fingerprint {
            path: shown,
            rows: rows.len(),
            cols: n_attr,
            sha256: hex(&Sha256::digest(&bytes)),
        },
        header: header.into_iter().take(n_attr).collect(),
        rows,
        labels,
    })
}

/// Formats a score with 17 significant digits, enough to round-trip.
pub fn format_score(s: f64) -> String {
    format!("{s:.16e}")
}

pub fn write_scores(out: &mut dyn Write, scores: &[f64]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["score"])?;
    for &s in scores {
        w.write_record([format_score(s)])?;
    }
    w.flush()
}

/// Writes to `path`, or to standard output when absent.
pub fn write_output(
    path: Option<&PathBuf>,
    write: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
) -> CliResult<()> {
    match path {
        Some(p) => {
            let mut file =
                std::io::BufWriter::new(fs::File::create(p).map_err(|e| CliError::io(p, e))?);
            write(&mut file)
                .and_then(|_| file.flush())
                .map_err(|e| CliError::io(p, e))
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock).map_err(|e| CliError::io("<stdout>", e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn temp_csv(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn reads_labelled_tables() {
        let f = temp_csv("a,b,class\n1,2,x\n3,4.5,y\n");
        let t = read_table(f.path(), true).unwrap();
        assert_eq!(t.header, vec!["a", "b"]);
        assert_eq!(t.rows, vec![vec![1.0, 2.0], vec![3.0, 4.5]]);
        assert_eq!(t.labels, vec!["x", "y"]);
        assert_eq!((t.fingerprint.rows, t.fingerprint.cols), (2, 2));
        assert_eq!(t.fingerprint.sha256.len(), 64);
    }

    #[test]
    fn rejects_missing_and_malformed_cells() {
        let f = temp_csv("a,b\n1,\n");
        let err = read_table(f.path(), false).unwrap_err();
        assert!(err.to_string().contains("missing value"));
        assert_eq!(err.exit_code(), 3);
        let f = temp_csv("a,b\n1,abc\n");
        assert!(read_table(f.path(), false)
            .unwrap_err()
            .to_string()
            .contains("not a number"));
        let f = temp_csv("a,b\n1,2,3\n");
        assert_eq!(read_table(f.path(), false).unwrap_err().exit_code(), 3);
    }

    #[test]
    fn scores_round_trip() {
        let scores = [0.1, 1.0 / 3.0, 0.0, 1.0, 0.123_456_789_012_345_67];
        let mut buf = Vec::new();
        write_scores(&mut buf, &scores).unwrap();
        let mut reader = csv::Reader::from_reader(buf.as_slice());
        let back: Vec<f64> = reader
            .records()
            .map(|r| r.unwrap()[0].parse().unwrap())
            .collect();
        assert_eq!(back, scores);
    }
}
