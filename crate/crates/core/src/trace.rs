//! Per-sample log of a codec run and its CSV form.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column order of `trace.csv`.
pub const TRACE_HEADER: &str =
    "n,x,v,y,v_hat,v_hat_p,e_hat,alpha,M,flag_error,flag_res_up,flag_res_down,flag_steady,flag_reinit";

pub const TRUTH_HEADER: &str = "n,x,v";

/// One sample of a run: ground truth, decoder output and control flags.
///
/// `v_hat_p` and `e_hat` are NaN on initialization rows, where no prediction
/// is formed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub n: u64,
    pub x: f64,
    pub v: f64,
    pub y: f64,
    pub v_hat: f64,
    pub v_hat_p: f64,
    pub e_hat: f64,
    pub alpha: f64,
    #[serde(rename = "M")]
    pub m: f64,
    pub flag_error: u8,
    pub flag_res_up: u8,
    pub flag_res_down: u8,
    pub flag_steady: u8,
    pub flag_reinit: u8,
}

impl TraceRecord {
    pub fn x_hat(&self) -> f64 {
        (self.v_hat + 0.5) / self.alpha
    }

    pub fn is_prediction_step(&self) -> bool {
        self.flag_reinit == 0
    }
}

/// Ground-truth row of `truth.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub n: u64,
    pub x: f64,
    pub v: f64,
}

pub fn emit_trace(trace: &[TraceRecord], path: &Path) -> Result<()> {
    write_rows(path, TRACE_HEADER, trace)
}

pub fn emit_truth(trace: &[TraceRecord], path: &Path) -> Result<()> {
    let rows: Vec<TruthRecord> = trace
        .iter()
        .map(|r| TruthRecord {
            n: r.n,
            x: r.x,
            v: r.v,
        })
        .collect();
    write_rows(path, TRUTH_HEADER, &rows)
}

pub fn load_trace(path: &Path) -> Result<Vec<TraceRecord>> {
    read_rows(path, TRACE_HEADER)
}

pub fn load_truth(path: &Path) -> Result<Vec<TruthRecord>> {
    read_rows(path, TRUTH_HEADER)
}

fn write_rows<T: Serialize>(path: &Path, header: &str, rows: &[T]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    // header written by hand so an empty trace still gets one
    writeln!(out, "{header}")?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| csv_error(path, e))?;
    }
    w.flush()?;
    Ok(())
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path, header: &str) -> Result<Vec<T>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let got = rdr
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if got != header {
        return Err(Error::Parse {
            path: path.display().to_string(),
            line: 1,
            message: format!("unexpected header {got:?}, expected {header:?}"),
        });
    }
    rdr.deserialize()
        .map(|r| r.map_err(|e| csv_error(path, e)))
        .collect()
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::Parse {
            path: path.display().to_string(),
            line,
            message: format!("{kind:?}"),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(n: u64) -> TraceRecord {
        TraceRecord {
            n,
            x: 0.25,
            v: 24.7,
            y: 24.7,
            v_hat: 24.7,
            v_hat_p: f64::NAN,
            e_hat: f64::NAN,
            alpha: 100.0,
            m: 10.24,
            flag_error: 0,
            flag_res_up: 0,
            flag_res_down: 0,
            flag_steady: 0,
            flag_reinit: 1,
        }
    }

    #[test]
    fn empty_trace_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("trace.csv");
        emit_trace(&[], &p).unwrap();
        assert_eq!(
            std::fs::read_to_string(&p).unwrap(),
            format!("{TRACE_HEADER}\n")
        );
        assert!(load_trace(&p).unwrap().is_empty());
    }

    #[test]
    fn header_and_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("trace.csv");
        let rows = vec![record(1), record(2)];
        emit_trace(&rows, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().next().unwrap(), TRACE_HEADER);
        let back = load_trace(&p).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[1].n, 2);
        assert!(back[0].v_hat_p.is_nan());
        assert_eq!(back[0].m, 10.24);
    }

    #[test]
    fn bad_header_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("trace.csv");
        std::fs::write(&p, "n,x\n1,2\n").unwrap();
        assert!(matches!(load_trace(&p), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn bad_field_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("truth.csv");
        std::fs::write(&p, "n,x,v\n1,0.5,1.0\n2,oops,1.0\n").unwrap();
        match load_truth(&p) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }
}
