//! CSV result files.
//!
//! Columns: `scheme,nt,nrf,nr,m,rotation_deg,source,ebn0_db,ber,bit_errors,bits,frames,seed`.
//! Comma separated, `.` decimal point, LF line endings. Theory rows carry
//! zero counts.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

/// Exact header line.
pub const HEADER: &str = "scheme,nt,nrf,nr,m,rotation_deg,source,ebn0_db,ber,bit_errors,bits,frames,seed";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Sim,
    Theory,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Sim => "sim",
            Source::Theory => "theory",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scheme: String,
    pub nt: usize,
    pub nrf: usize,
    pub nr: usize,
    pub m: usize,
    pub rotation_deg: f64,
    pub source: Source,
    pub ebn0_db: f64,
    pub ber: f64,
    pub bit_errors: u64,
    pub bits: u64,
    pub frames: u64,
    pub seed: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("unexpected header `{0}`")]
    Header(String),
}

impl CsvError {
    /// Whether the failure came from the file system rather than the content.
    pub fn is_io(&self) -> bool {
        match self {
            CsvError::Io(_) => true,
            CsvError::Csv(e) => e.is_io_error(),
            CsvError::Header(_) => false,
        }
    }
}

pub fn write_rows<W: Write>(out: W, rows: &[ResultRow]) -> Result<(), CsvError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .has_headers(false)
        .from_writer(out);
    w.write_record(HEADER.split(','))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<R: Read>(input: R) -> Result<Vec<ResultRow>, CsvError> {
    let mut r = csv::ReaderBuilder::new().from_reader(input);
    let header = r.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != HEADER {
        return Err(CsvError::Header(header));
    }
    r.deserialize().map(|row| row.map_err(CsvError::from)).collect()
}

pub fn write_file(path: impl AsRef<Path>, rows: &[ResultRow]) -> Result<(), CsvError> {
    let file = std::fs::File::create(path)?;
    write_rows(std::io::BufWriter::new(file), rows)
}

pub fn read_file(path: impl AsRef<Path>) -> Result<Vec<ResultRow>, CsvError> {
    read_rows(std::fs::File::open(path)?)
}

/// Concatenates result files in order.
pub fn merge_files<P: AsRef<Path>>(inputs: &[P]) -> Result<Vec<ResultRow>, CsvError> {
    let mut rows = Vec::new();
    for p in inputs {
        rows.extend(read_file(p)?);
    }
    Ok(rows)
}

/// Sidecar path holding the resolved config of a result file.
pub fn meta_path(csv_path: &Path) -> std::path::PathBuf {
    let mut name = csv_path.as_os_str().to_owned();
    name.push(".meta");
    name.into()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(source: Source, ber: f64) -> ResultRow {
        ResultRow {
            scheme: "ciod_mbm_1".into(),
            nt: 4,
            nrf: 1,
            nr: 2,
            m: 4,
            rotation_deg: 13.282559131894926,
            source,
            ebn0_db: 10.0,
            ber,
            bit_errors: 205,
            bits: 1_272_000,
            frames: 212_000,
            seed: 42,
        }
    }

    #[test]
    fn exact_header_and_lf() {
        let mut buf = Vec::new();
        write_rows(&mut buf, &[row(Source::Sim, 1.6116352201257862e-4)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(&format!("{HEADER}\n")));
        assert!(!text.contains('\r'));
        assert!(text.contains(",sim,10.0,"), "{text}");
    }

    #[test]
    fn round_trip_is_exact() {
        let rows = vec![row(Source::Sim, 1.6116352201257862e-4), row(Source::Theory, 1.8e-300)];
        let mut buf = Vec::new();
        write_rows(&mut buf, &rows).unwrap();
        assert_eq!(read_rows(&buf[..]).unwrap(), rows);
    }

    #[test]
    fn merge_and_bad_header() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        write_file(&a, &[row(Source::Sim, 1e-3)]).unwrap();
        write_file(&b, &[row(Source::Theory, 2e-3)]).unwrap();
        let merged = merge_files(&[&a, &b]).unwrap();
        assert_eq!(merged.len(), 2);
        assert_eq!(merged[1].source, Source::Theory);
        assert!(matches!(read_rows("x,y\n1,2\n".as_bytes()), Err(CsvError::Header(_))));
        assert!(read_file(dir.path().join("missing.csv")).unwrap_err().is_io());
        assert_eq!(meta_path(&a), dir.path().join("a.csv.meta"));
    }
}
