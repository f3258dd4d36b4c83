//! Canonical Huffman code over run lengths.
//!
//! Runs 1..=255 are direct symbols; longer runs (and runs the table has no
//! code for) are sent as the escape code followed by the run length as a
//! varint in 8-bit groups. The escape only gets a code if the training
//! histogram contained escaped runs; when a run cannot be coded at all the
//! stream switches to a fallback mode where every run is a varint.
//!
//! Stream layout: first-bit value, mode bit, then the coded runs, padded
//! with zeros to a byte boundary.

use alloc::collections::{BTreeMap, BinaryHeap};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

use super::bits::{BitReader, BitWriter};
use super::rle::{rle_decode, rle_encode, RleStream};
use super::{varint, CoderError};

pub const MAX_DIRECT_RUN: u64 = 255;
/// Symbol index of the escape code.
pub const ESCAPE: usize = 256;
const SYMBOLS: usize = 257;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HuffmanModel {
    /// Code length per symbol, 0 when the symbol has no code.
    lengths: [u8; SYMBOLS],
    codes: [u64; SYMBOLS],
    // canonical decoding tables
    sorted: Vec<usize>,
    first_code: Vec<u64>,
    first_index: Vec<usize>,
    count: Vec<usize>,
}

fn symbol_of(run: u64) -> usize {
    if run <= MAX_DIRECT_RUN {
        run as usize
    } else {
        ESCAPE
    }
}

impl HuffmanModel {
    /// Builds a model from a run-length histogram (run -> count).
    pub fn build(hist: &BTreeMap<u64, u64>) -> Result<Self, CoderError> {
        let mut weights = [0u64; SYMBOLS];
        for (&run, &c) in hist {
            if run == 0 {
                return Err(CoderError::Corrupt("zero-length run in histogram"));
            }
            weights[symbol_of(run)] += c;
        }
        let used: Vec<usize> = (0..SYMBOLS).filter(|&s| weights[s] > 0).collect();
        if used.is_empty() {
            return Err(CoderError::EmptyInput);
        }
        let mut lengths = [0u8; SYMBOLS];
        if used.len() == 1 {
            lengths[used[0]] = 1;
        } else {
            // node ids: leaves 0..used.len(), then internal nodes
            let mut parent = vec![usize::MAX; 2 * used.len() - 1];
            let mut heap: BinaryHeap<Reverse<(u64, usize)>> = used
                .iter()
                .enumerate()
                .map(|(id, &s)| Reverse((weights[s], id)))
                .collect();
            let mut next = used.len();
            while heap.len() > 1 {
                let Reverse((w1, a)) = heap.pop().unwrap();
                let Reverse((w2, b)) = heap.pop().unwrap();
                parent[a] = next;
                parent[b] = next;
                heap.push(Reverse((w1 + w2, next)));
                next += 1;
            }
            for (id, &s) in used.iter().enumerate() {
                let mut depth = 0u32;
                let mut node = id;
                while parent[node] != usize::MAX {
                    node = parent[node];
                    depth += 1;
                }
                assert!(depth <= 64, "code length {depth} exceeds 64 bits");
                lengths[s] = depth as u8;
            }
        }
        Ok(Self::from_lengths(lengths))
    }

    pub fn from_runs<I: IntoIterator<Item = u64>>(runs: I) -> Result<Self, CoderError> {
        let mut hist = BTreeMap::new();
        for r in runs {
            *hist.entry(r).or_insert(0) += 1;
        }
        Self::build(&hist)
    }

    fn from_lengths(lengths: [u8; SYMBOLS]) -> Self {
        let mut sorted: Vec<usize> = (0..SYMBOLS).filter(|&s| lengths[s] > 0).collect();
        sorted.sort_by_key(|&s| (lengths[s], s));
        let max_len = sorted.last().map_or(0, |&s| lengths[s] as usize);
        let mut codes = [0u64; SYMBOLS];
        let mut first_code = vec![0u64; max_len + 1];
        let mut first_index = vec![0usize; max_len + 1];
        let mut count = vec![0usize; max_len + 1];
        let mut code = 0u64;
        let mut len = 0usize;
        for (idx, &s) in sorted.iter().enumerate() {
            let l = lengths[s] as usize;
            if l != len {
                code <<= l - len;
                len = l;
                first_code[l] = code;
                first_index[l] = idx;
            }
            codes[s] = code;
            count[l] += 1;
            code += 1;
        }
        Self {
            lengths,
            codes,
            sorted,
            first_code,
            first_index,
            count,
        }
    }

    /// Code length of `symbol` (a run 1..=255 or [`ESCAPE`]), if it has one.
    pub fn code_len(&self, symbol: usize) -> Option<u8> {
        self.lengths.get(symbol).copied().filter(|&l| l > 0)
    }

    pub fn kraft_sum(&self) -> f64 {
        self.lengths
            .iter()
            .filter(|&&l| l > 0)
            .map(|&l| 1.0 / (1u128 << l) as f64)
            .sum()
    }

    fn can_code(&self, run: u64) -> bool {
        let s = symbol_of(run);
        self.lengths[s] > 0 || self.lengths[ESCAPE] > 0
    }

    fn write_run(&self, w: &mut BitWriter, run: u64) {
        let s = symbol_of(run);
        if s != ESCAPE && self.lengths[s] > 0 {
            w.push_bits(self.codes[s], self.lengths[s] as u32);
        } else {
            w.push_bits(self.codes[ESCAPE], self.lengths[ESCAPE] as u32);
            write_varint_bits(w, run);
        }
    }

    fn read_symbol(&self, r: &mut BitReader<'_>) -> Result<usize, CoderError> {
        let mut code = 0u64;
        for len in 1..self.first_code.len() {
            code = (code << 1) | r.read().ok_or(CoderError::Corrupt("truncated code"))? as u64;
            if self.count[len] > 0 && code >= self.first_code[len] {
                let k = (code - self.first_code[len]) as usize;
                if k < self.count[len] {
                    return Ok(self.sorted[self.first_index[len] + k]);
                }
            }
        }
        Err(CoderError::Corrupt("invalid code"))
    }

    /// Number of bits [`huffman_encode`] produces before byte padding.
    pub fn encoded_bits(&self, bits: &[bool]) -> usize {
        let Ok(rle) = rle_encode(bits) else { return 0 };
        let body: usize = if rle.runs.iter().all(|&r| self.can_code(r)) {
            rle.runs
                .iter()
                .map(|&r| {
                    let s = symbol_of(r);
                    if s != ESCAPE && self.lengths[s] > 0 {
                        self.lengths[s] as usize
                    } else {
                        self.lengths[ESCAPE] as usize + 8 * varint::encoded_len(r)
                    }
                })
                .sum()
        } else {
            rle.runs.iter().map(|&r| 8 * varint::encoded_len(r)).sum()
        };
        2 + body
    }
}

fn write_varint_bits(w: &mut BitWriter, run: u64) {
    let mut buf = Vec::new();
    varint::write(&mut buf, run);
    for b in buf {
        w.push_bits(b as u64, 8);
    }
}

fn read_varint_bits(r: &mut BitReader<'_>) -> Result<u64, CoderError> {
    let mut buf = Vec::new();
    loop {
        let b = r.read_bits(8).ok_or(CoderError::BadVarint)? as u8;
        buf.push(b);
        if b & 0x80 == 0 || buf.len() >= 10 {
            break;
        }
    }
    varint::read(&buf, &mut 0)
}

/// Run-length codes `bits` and Huffman-codes the runs. Empty input gives an
/// empty stream.
pub fn huffman_encode(model: &HuffmanModel, bits: &[bool]) -> Vec<u8> {
    let Ok(rle) = rle_encode(bits) else {
        return Vec::new();
    };
    let mut w = BitWriter::new();
    w.push(rle.first_bit);
    let table = rle.runs.iter().all(|&r| model.can_code(r));
    w.push(!table);
    for &r in &rle.runs {
        if table {
            model.write_run(&mut w, r);
        } else {
            write_varint_bits(&mut w, r);
        }
    }
    w.into_bytes()
}

pub fn huffman_decode(
    model: &HuffmanModel,
    bytes: &[u8],
    bit_count: usize,
) -> Result<Vec<bool>, CoderError> {
    if bit_count == 0 {
        return Ok(Vec::new());
    }
    let mut r = BitReader::new(bytes);
    let first_bit = r.read().ok_or(CoderError::Corrupt("missing header"))?;
    let fallback = r.read().ok_or(CoderError::Corrupt("missing header"))?;
    let mut runs = Vec::new();
    let mut total = 0u64;
    while total < bit_count as u64 {
        let run = if fallback {
            read_varint_bits(&mut r)?
        } else {
            match model.read_symbol(&mut r)? {
                ESCAPE => read_varint_bits(&mut r)?,
                s => s as u64,
            }
        };
        if run == 0 {
            return Err(CoderError::Corrupt("zero-length run"));
        }
        total += run;
        runs.push(run);
    }
    if total != bit_count as u64 {
        return Err(CoderError::Corrupt("runs overshoot the bit count"));
    }
    if bytes.len() != r.position().div_ceil(8) {
        return Err(CoderError::Corrupt("trailing bytes"));
    }
    Ok(rle_decode(&RleStream { first_bit, runs }))
}
