//! Text trace files.
//!
//! ```text
//! #bmtrace v1 n=<bits>
//! <timestamp>\t<peer>\t<sent|received>\t<offset>\t<hex bitmap>
//! ```
//!
//! The bitmap is packed most-significant bit first and zero-padded to whole
//! bytes. Lines starting with `#` after the header are comments.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use bmcomp_core::bitmap::{pack_bits, BufferMap};
use bmcomp_core::trace::{validate, Direction, TraceError, TraceRecord};
use thiserror::Error;

const MAGIC: &str = "#bmtrace v1 n=";

#[derive(Debug, Error)]
pub enum TraceFileError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Invalid(#[from] TraceError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A parsed trace. An empty file has width 0 and no records.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub n: usize,
    pub records: Vec<TraceRecord>,
}

impl Trace {
    /// Distinct peers in order of first appearance.
    pub fn peers(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.records {
            if !out.contains(&r.peer.as_str()) {
                out.push(&r.peer);
            }
        }
        out
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> TraceFileError {
    TraceFileError::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_record(line: usize, text: &str, n: usize) -> Result<TraceRecord, TraceFileError> {
    let fields: Vec<&str> = text.split('\t').collect();
    let [ts, peer, dir, offset, hexbits] = fields[..] else {
        return Err(parse_err(
            line,
            format!("expected 5 tab-separated fields, got {}", fields.len()),
        ));
    };
    let timestamp = ts
        .parse()
        .map_err(|_| parse_err(line, format!("bad timestamp {ts:?}")))?;
    if peer.is_empty() {
        return Err(parse_err(line, "empty peer id"));
    }
    let direction =
        Direction::parse(dir).ok_or_else(|| parse_err(line, format!("bad direction {dir:?}")))?;
    let offset = offset
        .parse()
        .map_err(|_| parse_err(line, format!("bad offset {offset:?}")))?;
    let bytes =
        hex::decode(hexbits).map_err(|e| parse_err(line, format!("bad hex bitmap: {e}")))?;
    let bm =
        BufferMap::from_bytes(offset, n, &bytes).map_err(|e| parse_err(line, e.to_string()))?;
    Ok(TraceRecord {
        timestamp,
        peer: peer.to_string(),
        direction,
        bm,
    })
}

/// Parses and validates trace text.
pub fn parse_str(text: &str) -> Result<Trace, TraceFileError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let Some((_, header)) = lines.next() else {
        return Ok(Trace {
            n: 0,
            records: Vec::new(),
        });
    };
    let n: usize = header
        .strip_prefix(MAGIC)
        .and_then(|v| v.trim().parse().ok())
        .filter(|&n| n > 0)
        .ok_or_else(|| parse_err(1, format!("expected header `{MAGIC}<bits>`")))?;
    let mut records = Vec::new();
    for (line, text) in lines {
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        records.push(parse_record(line, text, n)?);
    }
    validate(&records, n)?;
    Ok(Trace { n, records })
}

pub fn parse(path: &Path) -> Result<Trace, TraceFileError> {
    let text = fs::read_to_string(path).map_err(|source| TraceFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_str(&text)
}

pub fn write_string(trace: &Trace) -> String {
    let mut out = format!("{MAGIC}{}\n", trace.n);
    for r in &trace.records {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            r.timestamp,
            r.peer,
            r.direction.as_str(),
            r.bm.offset,
            hex::encode(pack_bits(&r.bm.bits))
        );
    }
    out
}

pub fn write(path: &Path, trace: &Trace) -> Result<(), TraceFileError> {
    fs::write(path, write_string(trace)).map_err(|source| TraceFileError::Io {
        path: path.display().to_string(),
        source,
    })
}
