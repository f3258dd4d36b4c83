//! BM trace records: validation, deduplication and synthetic generation.
//!
//! A record is one buffer map of `peer` as seen by the recording host, which
//! either sent it or received it. Reading and writing trace files lives in
//! the companion crate.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::bitmap::{diff_new_fills, BitmapError, BufferMap, PeerBufferState};
use crate::fill::SCurve;
use crate::sim::peer_seeds;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Sent,
    Received,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Sent => "sent",
            Self::Received => "received",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "sent" => Some(Self::Sent),
            "received" => Some(Self::Received),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    /// Chunk-time units.
    pub timestamp: u64,
    pub peer: String,
    pub direction: Direction,
    pub bm: BufferMap,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    Width {
        expected: usize,
        got: usize,
    },
    TimeRegression {
        prev: u64,
    },
    OffsetRegression {
        prev: u32,
    },
    /// A chunk went from buffered back to missing.
    Unfilled {
        chunk: u32,
    },
}

/// Rule broken by the record at index `record`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub record: usize,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "record {}: ", self.record)?;
        match &self.kind {
            ViolationKind::Width { expected, got } => {
                write!(f, "bitmap has {got} bits, trace width is {expected}")
            }
            ViolationKind::TimeRegression { prev } => write!(f, "timestamp goes back from {prev}"),
            ViolationKind::OffsetRegression { prev } => write!(f, "offset goes back from {prev}"),
            ViolationKind::Unfilled { chunk } => write!(f, "chunk {chunk} flips from 1 to 0"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TraceError {
    #[error("{} invalid record(s), first: {}", .0.len(), .0[0])]
    Invalid(Vec<Violation>),
}

/// Checks widths, timestamp order and per-peer offset and fill monotonicity.
/// Reports every offending record.
pub fn validate(records: &[TraceRecord], n: usize) -> Result<(), TraceError> {
    let mut violations = Vec::new();
    let mut last_time: Option<u64> = None;
    let mut last: Vec<(&str, &BufferMap)> = Vec::new();
    for (i, r) in records.iter().enumerate() {
        let mut push = |kind| violations.push(Violation { record: i, kind });
        if r.bm.width() != n {
            push(ViolationKind::Width {
                expected: n,
                got: r.bm.width(),
            });
            continue;
        }
        if let Some(prev) = last_time.filter(|&p| r.timestamp < p) {
            push(ViolationKind::TimeRegression { prev });
        }
        last_time = Some(last_time.map_or(r.timestamp, |p| p.max(r.timestamp)));
        match last.iter_mut().find(|(p, _)| *p == r.peer) {
            Some((_, prev)) => {
                if r.bm.offset < prev.offset {
                    push(ViolationKind::OffsetRegression { prev: prev.offset });
                } else {
                    if let Err(e) = diff_new_fills(prev, &r.bm) {
                        let chunk = match e {
                            BitmapError::MonotonicityViolation { chunk } => chunk,
                            _ => r.bm.offset,
                        };
                        push(ViolationKind::Unfilled { chunk });
                    }
                    *prev = &r.bm;
                }
            }
            None => last.push((&r.peer, &r.bm)),
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(TraceError::Invalid(violations))
    }
}

/// Drops records whose `(peer, offset, bitmap)` equals that peer's previous
/// record. Order is preserved.
pub fn dedupe(records: Vec<TraceRecord>) -> Vec<TraceRecord> {
    let mut last: Vec<(String, BufferMap)> = Vec::new();
    let mut out = Vec::with_capacity(records.len());
    for r in records {
        match last.iter_mut().find(|(p, _)| *p == r.peer) {
            Some((_, prev)) if *prev == r.bm => continue,
            Some((_, prev)) => *prev = r.bm.clone(),
            None => last.push((r.peer.clone(), r.bm.clone())),
        }
        out.push(r);
    }
    out
}

/// Synthetic two-peer trace recorded at peer `A`.
///
/// `B` sends at `i * period` and `A` at `i * period + tau` for `rounds`
/// periods; `A`'s maps are tagged sent and `B`'s received. Fill delays use
/// the same seeding as the simulator, so a replay matches a synthetic run
/// with the same seed.
pub fn generate(
    curve: &SCurve,
    period: usize,
    tau: usize,
    rounds: u64,
    seed: u64,
) -> Vec<TraceRecord> {
    let (seed_a, seed_b) = peer_seeds(seed);
    let mut a = PeerBufferState::from_curve(0, curve.clone(), 0, 0, seed_a);
    let mut b = PeerBufferState::from_curve(1, curve.clone(), 0, 0, seed_b);
    let mut out = Vec::with_capacity(2 * rounds as usize);
    for i in 0..rounds {
        let tb = i * period as u64;
        let ta = tb + tau as u64;
        out.push(TraceRecord {
            timestamp: tb,
            peer: "B".to_string(),
            direction: Direction::Received,
            bm: b.snapshot(tb),
        });
        out.push(TraceRecord {
            timestamp: ta,
            peer: "A".to_string(),
            direction: Direction::Sent,
            bm: a.snapshot(ta),
        });
    }
    // tau == period puts A's message i at B's message i + 1 instant; A goes first
    out.sort_by_key(|r| r.timestamp);
    out
}
