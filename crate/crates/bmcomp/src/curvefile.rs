//! Curve and sample files: CSV with an `age,p` header, `#` comments allowed.
//!
//! A curve file lists every age `0..n` in order. A sample file may list any
//! subset of ages, in any order, and is only used for fitting.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use bmcomp_core::fill::{CurveError, SCurve, TwoSegmentParams};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CurveFileError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("row {row}: {msg}")]
    Parse { row: usize, msg: String },
    #[error("curve file must list ages 0..n in order; row {row} has age {age}")]
    Gap { row: usize, age: usize },
    #[error(transparent)]
    Curve(#[from] CurveError),
}

fn read(path: &Path) -> Result<String, CurveFileError> {
    fs::read_to_string(path).map_err(|source| CurveFileError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// `(age, probability)` rows.
pub fn parse_samples(text: &str) -> Result<Vec<(usize, f64)>, CurveFileError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| CurveFileError::Parse {
        row: 0,
        msg: e.to_string(),
    })?;
    if headers.iter().collect::<Vec<_>>() != ["age", "p"] {
        return Err(CurveFileError::Parse {
            row: 0,
            msg: "expected header `age,p`".to_string(),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let bad = |msg: String| CurveFileError::Parse { row, msg };
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let age = rec[0]
            .parse()
            .map_err(|_| bad(format!("bad age {:?}", &rec[0])))?;
        let p: f64 = rec[1]
            .parse()
            .map_err(|_| bad(format!("bad probability {:?}", &rec[1])))?;
        out.push((age, p));
    }
    Ok(out)
}

pub fn parse_curve(text: &str) -> Result<SCurve, CurveFileError> {
    let samples = parse_samples(text)?;
    if let Some((row, &(age, _))) = samples.iter().enumerate().find(|(i, s)| s.0 != *i) {
        return Err(CurveFileError::Gap { row: row + 1, age });
    }
    Ok(SCurve::new(samples.into_iter().map(|(_, p)| p).collect())?)
}

pub fn read_samples(path: &Path) -> Result<Vec<(usize, f64)>, CurveFileError> {
    parse_samples(&read(path)?)
}

pub fn read_curve(path: &Path) -> Result<SCurve, CurveFileError> {
    parse_curve(&read(path)?)
}

/// Curve file text, preceded by a comment with the two-segment parameters
/// when the curve came from them.
pub fn write_string(curve: &SCurve, params: Option<&TwoSegmentParams>) -> String {
    let mut out = String::new();
    if let Some(p) = params {
        let _ = writeln!(
            out,
            "# two-segment breakpoint={} p_break={} initial={} terminal={}",
            p.breakpoint, p.p_break, p.initial, p.terminal
        );
    }
    out.push_str("age,p\n");
    for (age, p) in curve.probs().iter().enumerate() {
        let _ = writeln!(out, "{age},{p}");
    }
    out
}
