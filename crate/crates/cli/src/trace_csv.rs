//! Trace CSV: one row per iteration, full-precision round-trip numbers.

use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use lipadam::driver::{Trace, TraceRecord};
use thiserror::Error;

use crate::config::num;

pub const HEADER: [&str; 8] = [
    "n",
    "C",
    "zeta_norm",
    "m_norm",
    "v_norm",
    "err_w",
    "triple_err",
    "alpha_n",
];

#[derive(Debug, Error)]
pub enum TraceCsvError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("header mismatch: expected {expected:?}, found {found:?}")]
    Header {
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("row {row}, column {column}: cannot parse `{value}`")]
    Field {
        row: usize,
        column: &'static str,
        value: String,
    },
}

/// The serialized columns of a [`TraceRecord`].
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub n: u64,
    pub c: f64,
    pub zeta_norm: f64,
    pub m_norm: f64,
    pub v_norm: f64,
    pub err_w: Option<f64>,
    pub triple_err: Option<f64>,
    pub alpha_n: f64,
}

impl From<&TraceRecord> for TraceRow {
    fn from(r: &TraceRecord) -> Self {
        TraceRow {
            n: r.n,
            c: r.c,
            zeta_norm: r.zeta_norm,
            m_norm: r.m_norm,
            v_norm: r.v_norm,
            err_w: r.err_w,
            triple_err: r.triple_err,
            alpha_n: r.alpha_n,
        }
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, num)
}

pub fn write_rows<W: Write>(out: W, rows: &[TraceRow]) -> Result<(), TraceCsvError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            num(r.c),
            num(r.zeta_norm),
            num(r.m_norm),
            num(r.v_norm),
            opt(r.err_w),
            opt(r.triple_err),
            num(r.alpha_n),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_trace(path: &Path, trace: &Trace) -> Result<(), TraceCsvError> {
    let file = File::create(path).map_err(|source| TraceCsvError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let rows: Vec<TraceRow> = trace.records.iter().map(TraceRow::from).collect();
    write_rows(file, &rows)
}

pub fn read_rows<R: Read>(input: R) -> Result<Vec<TraceRow>, TraceCsvError> {
    let mut r = csv::Reader::from_reader(input);
    let found: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if found != HEADER {
        return Err(TraceCsvError::Header {
            expected: HEADER.iter().map(|s| s.to_string()).collect(),
            found,
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let field = |col: usize| -> Result<&str, TraceCsvError> {
            rec.get(col).ok_or_else(|| TraceCsvError::Field {
                row: i + 1,
                column: HEADER[col],
                value: String::new(),
            })
        };
        let num = |col: usize| -> Result<f64, TraceCsvError> {
            let s = field(col)?;
            s.parse().map_err(|_| TraceCsvError::Field {
                row: i + 1,
                column: HEADER[col],
                value: s.to_string(),
            })
        };
        let maybe = |col: usize| -> Result<Option<f64>, TraceCsvError> {
            if field(col)?.is_empty() {
                Ok(None)
            } else {
                num(col).map(Some)
            }
        };
        let n_text = field(0)?;
        rows.push(TraceRow {
            n: n_text.parse().map_err(|_| TraceCsvError::Field {
                row: i + 1,
                column: "n",
                value: n_text.to_string(),
            })?,
            c: num(1)?,
            zeta_norm: num(2)?,
            m_norm: num(3)?,
            v_norm: num(4)?,
            err_w: maybe(5)?,
            triple_err: maybe(6)?,
            alpha_n: num(7)?,
        });
    }
    Ok(rows)
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>, TraceCsvError> {
    let file = File::open(path).map_err(|source| TraceCsvError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_rows(file)
}

/// `trace.csv` with phase `basin` becomes `trace.basin.csv`.
pub fn phase_path(base: &Path, phase: &str) -> PathBuf {
    let stem = base
        .file_stem()
        .map_or_else(|| "trace".into(), |s| s.to_string_lossy().into_owned());
    let name = match base.extension() {
        Some(ext) => format!("{stem}.{phase}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{phase}"),
    };
    base.with_file_name(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(n: u64) -> TraceRow {
        TraceRow {
            n,
            c: 0.1 + n as f64,
            zeta_norm: 1.0 / 3.0,
            m_norm: 0.0,
            v_norm: 1e-300,
            err_w: if n == 0 { None } else { Some(2.0_f64.sqrt()) },
            triple_err: None,
            alpha_n: 1.375,
        }
    }

    #[test]
    fn header_and_empty_fields() {
        let mut buf = Vec::new();
        write_rows(&mut buf, &[row(0)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "n,C,zeta_norm,m_norm,v_norm,err_w,triple_err,alpha_n\n0,0.1,0.3333333333333333,0.0,1e-300,,,1.375\n");
    }

    #[test]
    fn rows_round_trip() {
        let rows: Vec<TraceRow> = (0..5).map(row).collect();
        let mut buf = Vec::new();
        write_rows(&mut buf, &rows).unwrap();
        assert_eq!(read_rows(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn wrong_header_is_rejected() {
        assert!(matches!(
            read_rows("a,b\n1,2\n".as_bytes()),
            Err(TraceCsvError::Header { .. })
        ));
        let bad = "n,C,zeta_norm,m_norm,v_norm,err_w,triple_err,alpha_n\n0,x,0,0,0,,,0\n";
        assert!(matches!(
            read_rows(bad.as_bytes()),
            Err(TraceCsvError::Field { column: "C", .. })
        ));
    }

    #[test]
    fn phase_paths() {
        assert_eq!(
            phase_path(Path::new("out/trace.csv"), "basin"),
            PathBuf::from("out/trace.basin.csv")
        );
        assert_eq!(
            phase_path(Path::new("trace"), "local"),
            PathBuf::from("trace.local")
        );
    }
}
