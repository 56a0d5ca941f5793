//! Shared CSV ingestion and atomic output helpers.

use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use thiserror::Error;

/// A data row that failed validation and was left out of a store.
///
/// `row` is 1-based and counts data rows only (the header is row 0).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowRejection {
    pub row: usize,
    pub reason: String,
}

impl fmt::Display for RowRejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "row {}: {}", self.row, self.reason)
    }
}

/// Result of a tolerant load: the store plus every rejected row.
#[derive(Debug, Clone)]
pub struct Ingested<T> {
    pub value: T,
    pub rejected: Vec<RowRejection>,
}

impl<T> Ingested<T> {
    /// Converts collected rejections into a hard error.
    pub fn strict(self, file: &str) -> Result<T, IngestError> {
        match self.rejected.into_iter().next() {
            None => Ok(self.value),
            Some(first) => Err(IngestError::Rejected {
                file: file.to_string(),
                row: first.row,
                reason: first.reason,
            }),
        }
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{file}: I/O error: {source}")]
    Io {
        file: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}: expected header `{expected}`, found `{found}`")]
    Header {
        file: String,
        expected: String,
        found: String,
    },
    #[error("{file}: row {row}: {reason}")]
    Rejected {
        file: String,
        row: usize,
        reason: String,
    },
    #[error("{file}: {source}")]
    Csv {
        file: String,
        #[source]
        source: csv::Error,
    },
}

/// Raw rows of a comma-separated file with a fixed header.
pub(crate) struct Table {
    pub rows: Vec<(usize, Vec<String>)>,
}

pub(crate) fn read_table<R: Read>(
    reader: R,
    file: &str,
    header: &[&str],
) -> Result<Table, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let found = rdr
        .headers()
        .map_err(|source| IngestError::Csv {
            file: file.to_string(),
            source,
        })?
        .clone();
    if found.len() != header.len() || found.iter().zip(header).any(|(a, b)| a != *b) {
        return Err(IngestError::Header {
            file: file.to_string(),
            expected: header.join(","),
            found: found.iter().collect::<Vec<_>>().join(","),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|source| IngestError::Csv {
            file: file.to_string(),
            source,
        })?;
        rows.push((i + 1, rec.iter().map(str::to_string).collect()));
    }
    Ok(Table { rows })
}

pub(crate) fn open(path: &Path) -> Result<fs::File, IngestError> {
    fs::File::open(path).map_err(|source| IngestError::Io {
        file: path.display().to_string(),
        source,
    })
}

/// Parses `YYYY-MM-DD`, truncating any time-of-day suffix
/// (`YYYY-MM-DDTHH:MM:SS`, `YYYY-MM-DD HH:MM`, ...).
pub fn parse_date(s: &str) -> Option<NaiveDate> {
    let day = s.get(..10)?;
    if s.len() > 10 {
        let sep = s.as_bytes()[10];
        if sep != b'T' && sep != b' ' {
            return None;
        }
    }
    NaiveDate::parse_from_str(day, "%Y-%m-%d").ok()
}

pub(crate) fn parse_f64(s: &str, what: &str) -> Result<f64, String> {
    let v: f64 = s
        .parse()
        .map_err(|_| format!("{what} `{s}` is not a number"))?;
    if !v.is_finite() {
        return Err(format!("{what} `{s}` is not finite"));
    }
    Ok(v)
}

/// Writes `contents` to `path` through a temporary sibling file and a rename,
/// so readers never observe a truncated file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn date_truncation() {
        let d = NaiveDate::from_ymd_opt(2021, 6, 11).unwrap();
        assert_eq!(parse_date("2021-06-11"), Some(d));
        assert_eq!(parse_date("2021-06-11T23:59:01Z"), Some(d));
        assert_eq!(parse_date("2021-06-11 08:00"), Some(d));
        assert_eq!(parse_date("2021-06-1"), None);
        assert_eq!(parse_date("2021-13-01"), None);
        assert_eq!(parse_date("2021-06-11x"), None);
    }

    #[test]
    fn header_mismatch_is_fatal() {
        let data = "a,b\n1,2\n";
        let err = read_table(data.as_bytes(), "f.csv", &["a", "c"])
            .err()
            .unwrap();
        assert!(matches!(err, IngestError::Header { .. }));
    }

    #[test]
    fn rows_are_numbered_from_one() {
        let data = "a,b\n1,2\n3\n";
        let t = read_table(data.as_bytes(), "f.csv", &["a", "b"]).unwrap();
        assert_eq!(t.rows[0].0, 1);
        assert_eq!(t.rows[1], (2, vec!["3".to_string()]));
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.csv");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
