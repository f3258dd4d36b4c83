//! Buffer-map snapshots and the peer buffer they are taken from.
//!
//! Buffer coordinates: bit position `i` of a map with offset `φ` describes
//! chunk id `φ + i`; position 0 is the oldest chunk in the window. The
//! fill-model age of position `i` is `n - 1 - i`. This module is the only
//! place that converts between the two.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::fill::SCurve;

pub type ChunkId = u32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BitmapError {
    #[error("chunk {chunk} went from buffered to missing")]
    MonotonicityViolation { chunk: ChunkId },
    #[error("offset regressed from {prev} to {cur}")]
    OffsetRegression { prev: ChunkId, cur: ChunkId },
    #[error("bitmap widths differ: {prev} vs {cur}")]
    WidthMismatch { prev: usize, cur: usize },
    #[error("snapshot time {t} precedes state creation")]
    TimeBeforeCreation { t: i64 },
    #[error("packed bitmap has {got} bytes, expected {expected}")]
    PackedLength { expected: usize, got: usize },
    #[error("packed bitmap has nonzero padding bits")]
    NonzeroPadding,
}

/// Offset plus bitmap over the buffer window.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BufferMap {
    pub offset: ChunkId,
    pub bits: Vec<bool>,
}

impl BufferMap {
    pub fn new(offset: ChunkId, bits: Vec<bool>) -> Self {
        Self { offset, bits }
    }

    /// Parses a `0`/`1` string, position 0 first. Other characters are ignored.
    pub fn from_bit_str(offset: ChunkId, s: &str) -> Self {
        let bits = s
            .chars()
            .filter_map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect();
        Self { offset, bits }
    }

    pub fn width(&self) -> usize {
        self.bits.len()
    }

    /// One past the newest chunk id in the window.
    pub fn window_end(&self) -> u64 {
        self.offset as u64 + self.bits.len() as u64
    }

    pub fn contains(&self, chunk: ChunkId) -> bool {
        chunk >= self.offset && (chunk as u64) < self.window_end()
    }

    /// Status of `chunk`, or `None` outside the window.
    pub fn status(&self, chunk: ChunkId) -> Option<bool> {
        self.contains(chunk)
            .then(|| self.bits[(chunk - self.offset) as usize])
    }

    pub fn chunk_at(&self, position: usize) -> ChunkId {
        self.offset + position as ChunkId
    }

    pub fn age_of_position(&self, position: usize) -> usize {
        self.bits.len() - 1 - position
    }

    pub fn position_of_age(&self, age: usize) -> usize {
        self.bits.len() - 1 - age
    }

    pub fn filled(&self) -> impl Iterator<Item = ChunkId> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| self.offset + i as ChunkId)
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Bits packed most-significant-bit first, zero padded to a byte boundary.
    pub fn to_bytes(&self) -> Vec<u8> {
        pack_bits(&self.bits)
    }

    pub fn from_bytes(offset: ChunkId, n: usize, bytes: &[u8]) -> Result<Self, BitmapError> {
        Ok(Self {
            offset,
            bits: unpack_bits(bytes, n)?,
        })
    }
}

pub fn pack_bits(bits: &[bool]) -> Vec<u8> {
    let mut out = alloc::vec![0u8; bits.len().div_ceil(8)];
    for (i, &b) in bits.iter().enumerate() {
        if b {
            out[i / 8] |= 0x80 >> (i % 8);
        }
    }
    out
}

/// Inverse of [`pack_bits`]; rejects wrong lengths and nonzero padding.
pub fn unpack_bits(bytes: &[u8], n: usize) -> Result<Vec<bool>, BitmapError> {
    let expected = n.div_ceil(8);
    if bytes.len() != expected {
        return Err(BitmapError::PackedLength {
            expected,
            got: bytes.len(),
        });
    }
    let bits: Vec<bool> = (0..n)
        .map(|i| bytes[i / 8] & (0x80 >> (i % 8)) != 0)
        .collect();
    if !n.is_multiple_of(8) {
        let pad_mask = 0xFFu8 >> (n % 8);
        if bytes[expected - 1] & pad_mask != 0 {
            return Err(BitmapError::NonzeroPadding);
        }
    }
    Ok(bits)
}

/// Chunk ids that are buffered in `cur` but were missing (or outside the
/// window) in `prev`.
pub fn diff_new_fills(prev: &BufferMap, cur: &BufferMap) -> Result<Vec<ChunkId>, BitmapError> {
    if cur.offset < prev.offset {
        return Err(BitmapError::OffsetRegression {
            prev: prev.offset,
            cur: cur.offset,
        });
    }
    if prev.width() != cur.width() {
        return Err(BitmapError::WidthMismatch {
            prev: prev.width(),
            cur: cur.width(),
        });
    }
    let mut fresh = Vec::new();
    for (pos, &bit) in cur.bits.iter().enumerate() {
        let chunk = cur.chunk_at(pos);
        match (prev.status(chunk), bit) {
            (Some(true), false) => return Err(BitmapError::MonotonicityViolation { chunk }),
            (Some(false) | None, true) => fresh.push(chunk),
            _ => {}
        }
    }
    Ok(fresh)
}

/// Simulated buffer of one peer.
///
/// The window advances one chunk per chunk-time: at time `t` the offset is
/// `base_offset + lag + t`. A chunk enters the window at age 0 and is buffered
/// once its age reaches its fill delay.
#[derive(Debug, Clone)]
pub struct PeerBufferState {
    pub peer: u32,
    n: usize,
    base_offset: ChunkId,
    lag: u32,
    // Indexed by chunk id - base_offset; `None` = never filled in window.
    delays: Vec<Option<u32>>,
    source: DelaySource,
}

#[derive(Debug, Clone)]
enum DelaySource {
    Curve { curve: SCurve, rng: ChaCha8Rng },
    Constant(Option<u32>),
}

impl PeerBufferState {
    /// Fill delays drawn from `curve` with a seeded generator.
    pub fn from_curve(peer: u32, curve: SCurve, base_offset: ChunkId, lag: u32, seed: u64) -> Self {
        Self {
            peer,
            n: curve.len(),
            base_offset,
            lag,
            delays: Vec::new(),
            source: DelaySource::Curve {
                curve,
                rng: ChaCha8Rng::seed_from_u64(seed),
            },
        }
    }

    /// Explicit delays for the first chunks; chunks beyond use `fallback`.
    pub fn from_delays(
        peer: u32,
        n: usize,
        base_offset: ChunkId,
        delays: Vec<Option<u32>>,
        fallback: Option<u32>,
    ) -> Self {
        Self {
            peer,
            n,
            base_offset,
            lag: 0,
            delays,
            source: DelaySource::Constant(fallback),
        }
    }

    pub fn width(&self) -> usize {
        self.n
    }

    pub fn offset_at(&self, t: u64) -> ChunkId {
        (self.base_offset as u64 + self.lag as u64 + t) as ChunkId
    }

    /// Time at which `chunk` entered the window at age 0.
    pub fn birth_time(&self, chunk: ChunkId) -> i64 {
        chunk as i64 - self.base_offset as i64 - self.lag as i64 - (self.n as i64 - 1)
    }

    pub fn fill_delay(&mut self, chunk: ChunkId) -> Option<u32> {
        let idx = (chunk - self.base_offset) as usize;
        self.ensure(idx + 1);
        self.delays[idx]
    }

    fn ensure(&mut self, len: usize) {
        while self.delays.len() < len {
            let d = match &mut self.source {
                DelaySource::Curve { curve, rng } => curve.sample_fill_delay(rng.gen::<f64>()),
                DelaySource::Constant(d) => *d,
            };
            self.delays.push(d);
        }
    }

    pub fn snapshot(&mut self, t: u64) -> BufferMap {
        let offset = self.offset_at(t);
        let n = self.n;
        self.ensure((offset - self.base_offset) as usize + n);
        let start = (offset - self.base_offset) as usize;
        let bits = (0..n)
            .map(|pos| {
                let age = (n - 1 - pos) as u32;
                self.delays[start + pos].is_some_and(|d| d <= age)
            })
            .collect();
        BufferMap { offset, bits }
    }
}
