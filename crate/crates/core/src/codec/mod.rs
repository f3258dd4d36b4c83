//! Support-set buffer-map codecs.
//!
//! * SBMS sends every bitmap as is (generic coders may compress it further).
//! * SPBMS (single peer): once a position has been reported filled it is never
//!   reported again. The receiver rebuilds the full bitmap.
//! * PPBMS (paired peers): additionally, a position is not reported once the
//!   counterpart announced it filled. Both directions share one support set,
//!   and the receiver learns exactly the positions it still needs.
//!
//! All messages share the [`CompressedBM`] envelope; see [`wire`] for the
//! byte layout.

mod ppbms;
mod spbms;
pub mod wire;

use alloc::vec::Vec;

use thiserror::Error;

use crate::bitmap::{BufferMap, ChunkId};

pub use ppbms::{PartialBufferMap, PpbmsSession, DEFAULT_ARCHIVE_DEPTH};
pub use spbms::{SpbmsDecoder, SpbmsEncoder, SpbmsState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Scheme {
    Sbms = 1,
    Spbms = 2,
    Ppbms = 3,
    /// Uncompressed bitmap that reinitializes the support set.
    Resync = 4,
}

impl Scheme {
    pub fn tag(self) -> u8 {
        self as u8
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            1 => Some(Self::Sbms),
            2 => Some(Self::Spbms),
            3 => Some(Self::Ppbms),
            4 => Some(Self::Resync),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Sbms => "sbms",
            Self::Spbms => "spbms",
            Self::Ppbms => "ppbms",
            Self::Resync => "resync",
        }
    }
}

/// Scheme-tagged BM message.
///
/// `lbmr_seq` is the sender's message sequence number, which also names the
/// sender's previous report the payload is relative to. `cbmr_seq` counts the
/// counterpart messages the sender had processed (PPBMS only).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompressedBM {
    pub scheme: Scheme,
    pub offset: ChunkId,
    pub lbmr_seq: u16,
    pub cbmr_seq: u16,
    pub payload: Vec<bool>,
}

impl CompressedBM {
    pub fn bit_count(&self) -> usize {
        self.payload.len()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("bitmap width {got} does not match session width {expected}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("offset regressed from {prev} to {cur}")]
    OffsetRegression { prev: ChunkId, cur: ChunkId },
    #[error("chunk {chunk} was reported buffered earlier but is missing now")]
    NonMonotone { chunk: ChunkId },
    #[error("payload has {got} bits but the support set expects {expected}")]
    Desync { expected: usize, got: usize },
    #[error("reference {got} cannot be resolved (expected {expected})")]
    MissingReference { expected: u16, got: u16 },
    #[error("{0:?} message given to a {1:?} codec")]
    WrongScheme(Scheme, Scheme),
    #[error("payload of {0} bits does not fit the 16-bit length field")]
    PayloadTooLong(usize),
}

pub fn sbms_encode(bm: &BufferMap, seq: u16) -> CompressedBM {
    CompressedBM {
        scheme: Scheme::Sbms,
        offset: bm.offset,
        lbmr_seq: seq,
        cbmr_seq: 0,
        payload: bm.bits.clone(),
    }
}

pub fn sbms_decode(msg: &CompressedBM, n: usize) -> Result<BufferMap, CodecError> {
    if msg.scheme != Scheme::Sbms {
        return Err(CodecError::WrongScheme(msg.scheme, Scheme::Sbms));
    }
    if msg.payload.len() != n {
        return Err(CodecError::Desync {
            expected: n,
            got: msg.payload.len(),
        });
    }
    Ok(BufferMap::new(msg.offset, msg.payload.clone()))
}

fn check_width(n: usize, bm: &BufferMap) -> Result<(), CodecError> {
    if bm.width() != n {
        return Err(CodecError::WidthMismatch {
            expected: n,
            got: bm.width(),
        });
    }
    Ok(())
}
