//! Generic lossless coders for bit sequences: run-length, Huffman over run
//! lengths and an adaptive binary range coder.
//!
//! None of the encoded forms store the input length; decoders take the bit
//! count from the message header.

mod arith;
mod bits;
mod huffman;
mod rle;
pub mod varint;

use thiserror::Error;

pub use arith::{arith_decode, arith_encode};
pub use bits::{BitReader, BitWriter};
pub use huffman::{huffman_decode, huffman_encode, HuffmanModel, ESCAPE, MAX_DIRECT_RUN};
pub use rle::{rle_decode, rle_encode, RleStream};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CoderError {
    #[error("input is empty")]
    EmptyInput,
    #[error("truncated or overlong varint")]
    BadVarint,
    #[error("corrupt stream: {0}")]
    Corrupt(&'static str),
    #[error("probability model covers {got} positions, input has {expected}")]
    ModelLength { expected: usize, got: usize },
}

/// Byte histogram of the concatenated bit streams, packed MSB-first. A
/// trailing partial byte is ignored.
pub fn symbol_distribution<'a, I>(payloads: I) -> [u64; 256]
where
    I: IntoIterator<Item = &'a [bool]>,
{
    let mut hist = [0u64; 256];
    let mut byte = 0u8;
    let mut fill = 0;
    for bit in payloads.into_iter().flatten() {
        byte = (byte << 1) | *bit as u8;
        fill += 1;
        if fill == 8 {
            hist[byte as usize] += 1;
            byte = 0;
            fill = 0;
        }
    }
    hist
}

/// Pearson chi-square statistic of `hist` against the uniform distribution
/// (255 degrees of freedom). Zero for an empty histogram.
pub fn chi_square_uniform(hist: &[u64; 256]) -> f64 {
    let total: u64 = hist.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let expected = total as f64 / 256.0;
    hist.iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum()
}
