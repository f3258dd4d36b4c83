//! Buffer-map (BM) compression for peer-to-peer live streaming.
//!
//! A buffer map is an offset plus a bitmap over a peer's buffer window. This
//! crate provides:
//!
//! - [`fill`]: the stationary buffer-filling model (S-curve), conditional fill
//!   probabilities, inverse-CDF delay sampling and a two-segment curve fitter.
//! - [`bitmap`]: buffer-map snapshots and the simulated peer buffer they are
//!   taken from.
//! - [`codec`]: the support-set codecs. SPBMS never re-reports a position once
//!   it was announced filled; PPBMS additionally skips positions the
//!   counterpart announced filled, with both directions sharing one support
//!   set.
//! - [`coders`]: run-length, Huffman-over-runs and adaptive binary arithmetic
//!   coding used as post-coders.
//! - [`entropy`]: information-quantity limits of each scheme over an S-curve.
//! - [`sim`]: a deterministic two-peer exchange simulator.
//! - [`trace`]: BM trace records, validation, deduplication and synthesis.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bitmap;
pub mod codec;
pub mod coders;
pub mod entropy;
pub mod fill;
mod math;
pub mod sim;
pub mod support;
pub mod trace;

pub use bitmap::{BufferMap, ChunkId, PeerBufferState};
pub use codec::{CodecError, CompressedBM, PpbmsSession, Scheme, SpbmsDecoder, SpbmsEncoder};
pub use entropy::{EntropyReport, ExchangeParams};
pub use fill::{SCurve, TwoSegmentParams};
pub use support::SupportSet;
