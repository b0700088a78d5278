//! Artifact files: CSV dumps with a one-line header and TOML summaries.
//! Reals are written with 17 significant digits, so dumps round-trip exactly.

use serde::de::DeserializeOwned;
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const FIELD_FILE: &str = "field.csv";
pub const PROFILE_FILE: &str = "profile.csv";
pub const SUMMARY_FILE: &str = "summary.toml";
pub const JOB_FILE: &str = "job.toml";
pub const VERIFY_FILE: &str = "verify.toml";
pub const SWEEP_FILE: &str = "sweep.csv";

pub const FIELD_COLUMNS: [&str; 8] = ["x", "y", "v", "u", "F12", "H", "eta", "Kg"];
pub const PROFILE_COLUMNS: [&str; 7] = ["t", "r", "U", "Uprime", "u", "u_r", "first_integral_residual"];

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

fn file_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::File { path: path.to_path_buf(), source }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> IoError + '_ {
    move |source| IoError::Csv { path: path.to_path_buf(), source }
}

/// `{:.16e}`: 17 significant digits.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn ensure_dir(dir: &Path) -> Result<(), IoError> {
    fs::create_dir_all(dir).map_err(file_err(dir))
}

/// Writes `columns` as a header and one row per entry of `rows`.
pub fn write_table(path: &Path, columns: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<(), IoError> {
    let mut writer = csv::Writer::from_path(path).map_err(csv_err(path))?;
    writer.write_record(columns).map_err(csv_err(path))?;
    for row in rows {
        writer.write_record(row.iter().map(|&x| format_real(x))).map_err(csv_err(path))?;
    }
    writer.flush().map_err(file_err(path))
}

/// Reads a table written by [`write_table`], checking the header.
pub fn read_table(path: &Path, columns: &[&str]) -> Result<Vec<Vec<f64>>, IoError> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = reader.headers().map_err(csv_err(path))?.clone();
    if header.iter().ne(columns.iter().copied()) {
        return Err(IoError::Format { path: path.to_path_buf(), message: format!("expected columns {columns:?}") });
    }
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err(path))?;
        let row: Result<Vec<f64>, _> = record.iter().map(|s| s.trim().parse::<f64>()).collect();
        let row = row.map_err(|e| IoError::Format { path: path.to_path_buf(), message: format!("row {}: {e}", line + 2) })?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_toml<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let text = toml::to_string(value)
        .map_err(|e| IoError::Format { path: path.to_path_buf(), message: e.to_string() })?;
    fs::write(path, text).map_err(file_err(path))
}

pub fn read_toml<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let text = fs::read_to_string(path).map_err(file_err(path))?;
    toml::from_str(&text).map_err(|e| IoError::Format { path: path.to_path_buf(), message: e.to_string() })
}

pub fn read_text(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(file_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(format_real(0.1), "1.0000000000000001e-1");
        assert_eq!(format_real(-2.0), "-2.0000000000000000e0");
        assert_eq!(format_real(f64::NAN), "NaN");
    }

    #[test]
    fn header_is_checked() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_table(&path, &["a", "b"], [vec![1.0, 2.0]]).unwrap();
        assert!(read_table(&path, &["a", "c"]).is_err());
        assert!(read_table(&dir.path().join("missing.csv"), &["a"]).is_err());
    }

    proptest! {
        #[test]
        fn tables_round_trip(rows in prop::collection::vec(prop::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 3), 0..20)) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("t.csv");
            write_table(&path, &["p", "q", "r"], rows.clone()).unwrap();
            let back = read_table(&path, &["p", "q", "r"]).unwrap();
            prop_assert_eq!(back, rows);
        }
    }
}
