//! Binary dumps of encoded BM streams.
//!
//! ```text
//! "BMWD" version:u8 scheme:u8 n:u32 peers:u8 (len:u8 name)*
//! then per message: peer:u8 direction:u8 timestamp:u64 <wire message>
//! ```
//!
//! Integers are big-endian. Messages appear in trace order; each one is sent
//! by its peer to the other peer of the dump.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use bmcomp_core::bitmap::{pack_bits, BufferMap, ChunkId};
use bmcomp_core::codec::wire::{self, WireError};
use bmcomp_core::codec::{
    sbms_decode, sbms_encode, CodecError, CompressedBM, PpbmsSession, Scheme, SpbmsDecoder,
    SpbmsEncoder,
};
use bmcomp_core::trace::{Direction, TraceRecord};
use thiserror::Error;

use crate::tracefile::Trace;

const MAGIC: &[u8; 4] = b"BMWD";
const VERSION: u8 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum DumpError {
    #[error("not a wire dump")]
    BadMagic,
    #[error("unsupported dump version {0}")]
    Version(u8),
    #[error("dump truncated at byte {0}")]
    Truncated(usize),
    #[error("bad header: {0}")]
    Header(&'static str),
    #[error("message {index}: {source}")]
    Wire { index: usize, source: WireError },
    #[error("message {index} names unknown peer {peer}")]
    UnknownPeer { index: usize, peer: u8 },
}

#[derive(Debug, Error, PartialEq)]
pub enum EncodeError {
    #[error("{0} needs a trace with exactly two peers, found {1}")]
    NeedTwoPeers(&'static str, usize),
    #[error("too many peers for a dump: {0}")]
    TooManyPeers(usize),
    #[error("resync is not an encoding scheme")]
    Resync,
    #[error("record {index}: {source}")]
    Codec { index: usize, source: CodecError },
    #[error("record {index}: {source}")]
    Wire { index: usize, source: WireError },
}

#[derive(Debug, Error, PartialEq)]
pub enum DecodeError {
    #[error("message {index}: desync: {source}")]
    Desync { index: usize, source: CodecError },
    #[error("message {index}: desync: re-encoded local map differs from the dump")]
    LocalMismatch { index: usize },
    #[error("local trace has no record for message {index} of peer {peer}")]
    MissingLocal { index: usize, peer: String },
    #[error("local trace of peer {0} is not in the dump")]
    UnknownLocal(String),
    #[error("decoding {0} needs the local peer's own trace")]
    NeedLocalTrace(&'static str),
    #[error("{0} dump needs exactly two peers, found {1}")]
    NeedTwoPeers(&'static str, usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub peer: u8,
    pub direction: Direction,
    pub timestamp: u64,
    pub msg: CompressedBM,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dump {
    pub scheme: Scheme,
    pub n: usize,
    pub peers: Vec<String>,
    pub frames: Vec<Frame>,
}

impl Dump {
    pub fn to_bytes(&self) -> Result<Vec<u8>, WireError> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.push(self.scheme.tag());
        out.extend_from_slice(&(self.n as u32).to_be_bytes());
        out.push(self.peers.len() as u8);
        for p in &self.peers {
            out.push(p.len() as u8);
            out.extend_from_slice(p.as_bytes());
        }
        for f in &self.frames {
            out.push(f.peer);
            out.push(match f.direction {
                Direction::Sent => 0,
                Direction::Received => 1,
            });
            out.extend_from_slice(&f.timestamp.to_be_bytes());
            out.extend_from_slice(&wire::encode(&f.msg)?);
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DumpError> {
        let mut pos = 0;
        let mut take = |k: usize| -> Result<&[u8], DumpError> {
            let s = bytes.get(pos..pos + k).ok_or(DumpError::Truncated(pos))?;
            pos += k;
            Ok(s)
        };
        if take(4).map_err(|_| DumpError::BadMagic)? != MAGIC {
            return Err(DumpError::BadMagic);
        }
        let version = take(1)?[0];
        if version != VERSION {
            return Err(DumpError::Version(version));
        }
        let scheme = Scheme::from_tag(take(1)?[0]).ok_or(DumpError::Header("unknown scheme"))?;
        let n = u32::from_be_bytes(take(4)?.try_into().unwrap()) as usize;
        if n == 0 {
            return Err(DumpError::Header("zero width"));
        }
        let count = take(1)?[0];
        let mut peers = Vec::new();
        for _ in 0..count {
            let len = take(1)?[0] as usize;
            let name = std::str::from_utf8(take(len)?)
                .map_err(|_| DumpError::Header("peer name is not utf-8"))?;
            peers.push(name.to_string());
        }
        let mut frames = Vec::new();
        while pos < bytes.len() {
            let index = frames.len();
            let head = bytes.get(pos..pos + 10).ok_or(DumpError::Truncated(pos))?;
            let peer = head[0];
            if peer as usize >= peers.len() {
                return Err(DumpError::UnknownPeer { index, peer });
            }
            let direction = match head[1] {
                0 => Direction::Sent,
                1 => Direction::Received,
                _ => return Err(DumpError::Header("bad direction byte")),
            };
            let timestamp = u64::from_be_bytes(head[2..10].try_into().unwrap());
            pos += 10;
            let (msg, used) =
                wire::decode(&bytes[pos..]).map_err(|source| DumpError::Wire { index, source })?;
            pos += used;
            frames.push(Frame {
                peer,
                direction,
                timestamp,
                msg,
            });
        }
        Ok(Self {
            scheme,
            n,
            peers,
            frames,
        })
    }
}

/// Encodes every record of `trace` with `scheme`. SBMS and SPBMS keep one
/// stream per peer; PPBMS runs a session per peer and delivers each message
/// to the other one.
pub fn encode_trace(trace: &Trace, scheme: Scheme) -> Result<Dump, EncodeError> {
    let peers: Vec<String> = trace.peers().into_iter().map(String::from).collect();
    if peers.len() > u8::MAX as usize {
        return Err(EncodeError::TooManyPeers(peers.len()));
    }
    if scheme == Scheme::Ppbms && peers.len() != 2 {
        return Err(EncodeError::NeedTwoPeers("ppbms", peers.len()));
    }
    if scheme == Scheme::Resync {
        return Err(EncodeError::Resync);
    }
    let n = trace.n;
    let mut spbms: Vec<SpbmsEncoder> = peers.iter().map(|_| SpbmsEncoder::new(n)).collect();
    let mut ppbms: Vec<PpbmsSession> = peers.iter().map(|_| PpbmsSession::new(n)).collect();
    let mut seqs = vec![0u16; peers.len()];
    let mut frames = Vec::with_capacity(trace.records.len());
    for (index, r) in trace.records.iter().enumerate() {
        let p = peers.iter().position(|x| *x == r.peer).unwrap();
        let codec = |source| EncodeError::Codec { index, source };
        let msg = match scheme {
            Scheme::Sbms => {
                seqs[p] = seqs[p].wrapping_add(1);
                sbms_encode(&r.bm, seqs[p].wrapping_sub(1))
            }
            Scheme::Spbms => spbms[p].encode(&r.bm).map_err(codec)?,
            _ => {
                let msg = ppbms[p].encode(&r.bm).map_err(codec)?;
                ppbms[1 - p].receive(msg.clone()).map_err(codec)?;
                msg
            }
        };
        wire::encode(&msg).map_err(|source| EncodeError::Wire { index, source })?;
        frames.push(Frame {
            peer: p as u8,
            direction: r.direction,
            timestamp: r.timestamp,
            msg,
        });
    }
    Ok(Dump {
        scheme,
        n,
        peers,
        frames,
    })
}

/// What a PPBMS receiver learned about the remote peer from one message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnownMap {
    pub timestamp: u64,
    pub peer: String,
    pub offset: ChunkId,
    /// Sender status per window position, `None` where it was not reported.
    pub bits: Vec<Option<bool>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decoded {
    Full(Trace),
    /// Remote peer's maps as seen by the local peer.
    Partial {
        n: usize,
        maps: Vec<KnownMap>,
    },
}

fn desync(index: usize) -> impl Fn(CodecError) -> DecodeError {
    move |source| DecodeError::Desync { index, source }
}

/// Decodes a dump. SBMS and SPBMS dumps rebuild the full trace. PPBMS never
/// transmits positions the receiver announced filled, so decoding runs as
/// the local peer: `local` supplies that peer's own maps, which are
/// re-encoded and checked against the dump, and the output lists what the
/// local peer learned about the remote one.
pub fn decode_dump(dump: &Dump, local: Option<&Trace>) -> Result<Decoded, DecodeError> {
    let n = dump.n;
    match dump.scheme {
        Scheme::Sbms | Scheme::Spbms | Scheme::Resync => {
            let mut spbms: Vec<SpbmsDecoder> =
                dump.peers.iter().map(|_| SpbmsDecoder::new(n)).collect();
            let mut records = Vec::with_capacity(dump.frames.len());
            for (index, f) in dump.frames.iter().enumerate() {
                let bm = match dump.scheme {
                    Scheme::Spbms => spbms[f.peer as usize].decode(&f.msg),
                    _ => sbms_decode(&f.msg, n),
                }
                .map_err(desync(index))?;
                records.push(TraceRecord {
                    timestamp: f.timestamp,
                    peer: dump.peers[f.peer as usize].clone(),
                    direction: f.direction,
                    bm,
                });
            }
            Ok(Decoded::Full(Trace { n, records }))
        }
        Scheme::Ppbms => decode_ppbms(dump, local.ok_or(DecodeError::NeedLocalTrace("ppbms"))?),
    }
}

fn decode_ppbms(dump: &Dump, local: &Trace) -> Result<Decoded, DecodeError> {
    if dump.peers.len() != 2 {
        return Err(DecodeError::NeedTwoPeers("ppbms", dump.peers.len()));
    }
    let local_name = local
        .records
        .iter()
        .find(|r| r.direction == Direction::Sent)
        .or(local.records.first())
        .map(|r| r.peer.clone())
        .unwrap_or_default();
    let me = dump
        .peers
        .iter()
        .position(|p| *p == local_name)
        .ok_or_else(|| DecodeError::UnknownLocal(local_name.clone()))? as u8;
    let mut own = local.records.iter().filter(|r| r.peer == local_name);
    let mut session = PpbmsSession::new(dump.n);
    let mut filled: BTreeSet<ChunkId> = BTreeSet::new();
    let mut maps = Vec::new();
    for (index, f) in dump.frames.iter().enumerate() {
        if f.peer == me {
            let r = own.next().ok_or_else(|| DecodeError::MissingLocal {
                index,
                peer: local_name.clone(),
            })?;
            let msg = session.encode(&r.bm).map_err(desync(index))?;
            if msg != f.msg {
                return Err(DecodeError::LocalMismatch { index });
            }
            continue;
        }
        for part in session.receive(f.msg.clone()).map_err(desync(index))? {
            filled = filled.split_off(&part.offset);
            let mut bits = vec![None; dump.n];
            for &(l, bit) in &part.reports {
                bits[(l - part.offset) as usize] = Some(bit);
                if bit {
                    filled.insert(l);
                }
            }
            for &l in filled.range(part.offset..part.offset + dump.n as ChunkId) {
                bits[(l - part.offset) as usize] = Some(true);
            }
            maps.push(KnownMap {
                timestamp: f.timestamp,
                peer: dump.peers[f.peer as usize].clone(),
                offset: part.offset,
                bits,
            });
        }
    }
    Ok(Decoded::Partial { n: dump.n, maps })
}

/// Text form of a partial decode: the remote map's known positions as a hex
/// mask, then their statuses, both packed like trace bitmaps.
pub fn write_partial(n: usize, maps: &[KnownMap]) -> String {
    let mut out = format!("#bmpartial v1 n={n}\n");
    for m in maps {
        let known: Vec<bool> = m.bits.iter().map(Option::is_some).collect();
        let bits: Vec<bool> = m.bits.iter().map(|b| b.unwrap_or(false)).collect();
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            m.timestamp,
            m.peer,
            m.offset,
            hex::encode(pack_bits(&known)),
            hex::encode(pack_bits(&bits))
        );
    }
    out
}

impl KnownMap {
    /// True when every known position agrees with `bm`.
    pub fn consistent_with(&self, bm: &BufferMap) -> bool {
        bm.offset == self.offset
            && self
                .bits
                .iter()
                .zip(&bm.bits)
                .all(|(k, &b)| k.is_none_or(|k| k == b))
    }
}
