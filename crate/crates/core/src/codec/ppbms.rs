//! Paired-peer codec.
//!
//! Both roles of a peer share one support set: a location leaves it as soon
//! as either side announces it filled. In lossless in-order operation the
//! live support set is all that is needed, and both peers hold the same one
//! whenever no message is in flight.
//!
//! For delayed or reordered traffic every message names the support set it
//! was coded against by two counters: the sender's own message count
//! (LBMR) and the number of counterpart messages it had processed (CBMR).
//! The set for any such pair is
//!
//! ```text
//! { l in [floor, offset + n) : l not announced filled by the sender in its
//!   first LBMR messages, nor by the receiver in its first CBMR messages }
//! ```
//!
//! so each side keeps a short log of which locations every recent message
//! announced filled. References older than the log depth cannot be resolved
//! and require a [`PpbmsSession::full_resync`].

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::vec::Vec;

use super::{check_width, CodecError, CompressedBM, Scheme};
use crate::bitmap::{BufferMap, ChunkId};
use crate::support::{SupportSet, SupportState};

pub const DEFAULT_ARCHIVE_DEPTH: usize = 8;

/// Statuses a PPBMS receiver learned from one message.
///
/// Positions the receiver itself announced filled are never reported, so the
/// sender's full bitmap cannot be rebuilt from these.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialBufferMap {
    pub offset: ChunkId,
    pub reports: Vec<(ChunkId, bool)>,
    /// Set for resync messages, whose reports cover the whole window.
    pub resync: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct LogEntry {
    offset: ChunkId,
    // ascending
    filled: Vec<ChunkId>,
}

/// Locations one side announced filled, message by message.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct KnowledgeLog {
    base: BTreeSet<ChunkId>,
    base_count: u64,
    base_offset: Option<ChunkId>,
    entries: VecDeque<LogEntry>,
}

impl KnowledgeLog {
    fn count(&self) -> u64 {
        self.base_count + self.entries.len() as u64
    }

    fn push(&mut self, entry: LogEntry, depth: usize) {
        self.entries.push_back(entry);
        while self.entries.len() > depth {
            let old = self.entries.pop_front().unwrap();
            self.base.extend(old.filled);
            self.base_count += 1;
            self.base_offset = Some(old.offset);
        }
    }

    fn resolvable(&self, upto: u64) -> bool {
        upto >= self.base_count && upto <= self.count()
    }

    fn known_until(&self, upto: u64, chunk: ChunkId) -> bool {
        let take = (upto - self.base_count) as usize;
        self.base.contains(&chunk)
            || self
                .entries
                .iter()
                .take(take)
                .any(|e| e.filled.binary_search(&chunk).is_ok())
    }

    fn known(&self, chunk: ChunkId) -> bool {
        self.known_until(self.count(), chunk)
    }

    /// Offset of the newest message among the first `upto`.
    fn offset_until(&self, upto: u64) -> Option<ChunkId> {
        if upto > self.base_count {
            Some(self.entries[(upto - self.base_count - 1) as usize].offset)
        } else {
            self.base_offset
        }
    }

    fn prune_below(&mut self, floor: ChunkId) {
        self.base = self.base.split_off(&floor);
    }
}

/// One peer's end of a paired-peer exchange.
#[derive(Debug, Clone)]
pub struct PpbmsSession {
    n: usize,
    depth: usize,
    live: SupportState,
    own: KnowledgeLog,
    peer: KnowledgeLog,
    last_sent_offset: Option<ChunkId>,
    last_recv_offset: Option<ChunkId>,
    // early counterpart messages keyed by their full sequence number
    pending: BTreeMap<u64, CompressedBM>,
    stale: u64,
}

impl PpbmsSession {
    pub fn new(n: usize) -> Self {
        Self::with_depth(n, DEFAULT_ARCHIVE_DEPTH)
    }

    pub fn with_depth(n: usize, depth: usize) -> Self {
        Self {
            n,
            depth: depth.max(1),
            live: SupportState::new(),
            own: KnowledgeLog::default(),
            peer: KnowledgeLog::default(),
            last_sent_offset: None,
            last_recv_offset: None,
            pending: BTreeMap::new(),
            stale: 0,
        }
    }

    /// Session whose window `[offset, offset + n)` is already covered and
    /// whose shared support set is `ss`. Locations outside `ss` are treated as
    /// announced filled by the counterpart.
    pub fn with_support_set(n: usize, offset: ChunkId, ss: SupportSet) -> Self {
        let mut s = Self::new(n);
        s.peer.base = (offset..offset + n as ChunkId)
            .filter(|&l| !ss.contains(l))
            .collect();
        s.peer.base_offset = Some(offset);
        s.live = SupportState::with_window(offset, n, ss);
        s
    }

    pub fn width(&self) -> usize {
        self.n
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn support_set(&self) -> &SupportSet {
        self.live.set()
    }

    /// Locations the next message for a window at `offset` will carry.
    pub fn locations_for(&self, offset: ChunkId) -> Vec<ChunkId> {
        self.live.peek(offset, self.n)
    }

    pub fn sent(&self) -> u64 {
        self.own.count()
    }

    pub fn received(&self) -> u64 {
        self.peer.count()
    }

    /// Early messages waiting for a predecessor.
    pub fn pending(&self) -> usize {
        self.pending.len()
    }

    /// Messages discarded because a resync superseded them.
    pub fn stale_discarded(&self) -> u64 {
        self.stale
    }

    pub fn encode(&mut self, bm: &BufferMap) -> Result<CompressedBM, CodecError> {
        check_width(self.n, bm)?;
        if let Some(prev) = self.last_sent_offset {
            if bm.offset < prev {
                return Err(CodecError::OffsetRegression {
                    prev,
                    cur: bm.offset,
                });
            }
        }
        for (pos, &bit) in bm.bits.iter().enumerate() {
            let chunk = bm.chunk_at(pos);
            if !bit && self.own.known(chunk) {
                return Err(CodecError::NonMonotone { chunk });
            }
        }
        let locs = self.live.advance(bm.offset, self.n);
        let payload: Vec<bool> = locs
            .iter()
            .map(|&l| bm.bits[(l - bm.offset) as usize])
            .collect();
        if payload.len() > u16::MAX as usize {
            return Err(CodecError::PayloadTooLong(payload.len()));
        }
        let filled = self.live.apply(&locs, &payload);
        let msg = CompressedBM {
            scheme: Scheme::Ppbms,
            offset: bm.offset,
            lbmr_seq: self.own.count() as u16,
            cbmr_seq: self.peer.count() as u16,
            payload,
        };
        self.own.push(
            LogEntry {
                offset: bm.offset,
                filled,
            },
            self.depth,
        );
        self.last_sent_offset = Some(bm.offset);
        self.prune();
        Ok(msg)
    }

    /// Uncompressed message carrying the whole bitmap. Afterwards the
    /// receiver's view of this side is rebuilt from it alone.
    pub fn full_resync(&mut self, bm: &BufferMap) -> Result<CompressedBM, CodecError> {
        check_width(self.n, bm)?;
        let msg = CompressedBM {
            scheme: Scheme::Resync,
            offset: bm.offset,
            lbmr_seq: self.own.count() as u16,
            cbmr_seq: self.peer.count() as u16,
            payload: bm.bits.clone(),
        };
        self.live.advance(bm.offset, self.n);
        let filled: Vec<ChunkId> = bm.filled().collect();
        self.live.remove_filled(&filled);
        self.own.push(
            LogEntry {
                offset: bm.offset,
                filled,
            },
            self.depth,
        );
        self.last_sent_offset = Some(
            self.last_sent_offset
                .map_or(bm.offset, |o| o.max(bm.offset)),
        );
        self.prune();
        Ok(msg)
    }

    /// Expands a 16-bit wire counter to the nearest full count at or below
    /// `current`; `None` if it lies ahead.
    fn behind(current: u64, wire: u16) -> Option<u64> {
        let back = (current as u16).wrapping_sub(wire) as u64;
        (back < 0x8000 && back <= current).then(|| current - back)
    }

    /// The support set a counterpart message with these references is coded
    /// against, before the message's own window is applied.
    pub fn resolve(&self, lbmr_seq: u16, cbmr_seq: u16) -> Result<SupportSet, CodecError> {
        let peer_upto = Self::behind(self.peer.count(), lbmr_seq)
            .filter(|&u| self.peer.resolvable(u))
            .ok_or(CodecError::MissingReference {
                expected: self.peer.count() as u16,
                got: lbmr_seq,
            })?;
        let own_upto = self.own_reference(cbmr_seq)?;
        let offsets = [
            self.peer.offset_until(peer_upto),
            self.own.offset_until(own_upto),
        ];
        let Some(floor) = offsets.iter().flatten().copied().max() else {
            return Ok(SupportSet::new());
        };
        let end = floor as u64 + self.n as u64;
        Ok((floor..end as ChunkId)
            .filter(|&l| !self.peer.known_until(peer_upto, l) && !self.own.known_until(own_upto, l))
            .collect())
    }

    fn own_reference(&self, cbmr_seq: u16) -> Result<u64, CodecError> {
        Self::behind(self.own.count(), cbmr_seq)
            .filter(|&u| self.own.resolvable(u))
            .ok_or(CodecError::MissingReference {
                expected: self.own.count() as u16,
                got: cbmr_seq,
            })
    }

    /// Decodes the next in-order counterpart message. On error the session
    /// is left untouched.
    pub fn decode(&mut self, msg: &CompressedBM) -> Result<PartialBufferMap, CodecError> {
        match msg.scheme {
            Scheme::Ppbms => {}
            Scheme::Resync => return self.accept_resync(msg),
            other => return Err(CodecError::WrongScheme(other, Scheme::Ppbms)),
        }
        if msg.lbmr_seq != self.peer.count() as u16 {
            return Err(CodecError::MissingReference {
                expected: self.peer.count() as u16,
                got: msg.lbmr_seq,
            });
        }
        if let Some(prev) = self.last_recv_offset {
            if msg.offset < prev {
                return Err(CodecError::OffsetRegression {
                    prev,
                    cur: msg.offset,
                });
            }
        }
        let own_upto = self.own_reference(msg.cbmr_seq)?;
        let locs = if own_upto == self.own.count() {
            let expected = self.live.expected_len(msg.offset, self.n);
            if msg.payload.len() != expected {
                return Err(CodecError::Desync {
                    expected,
                    got: msg.payload.len(),
                });
            }
            self.live.advance(msg.offset, self.n)
        } else {
            // Coded before our latest messages reached the sender.
            let floor = [
                Some(msg.offset),
                self.peer.offset_until(self.peer.count()),
                self.own.offset_until(own_upto),
            ]
            .into_iter()
            .flatten()
            .max()
            .unwrap();
            let end = msg.offset as u64 + self.n as u64;
            let locs: Vec<ChunkId> = (floor as u64..end)
                .map(|l| l as ChunkId)
                .filter(|&l| !self.peer.known(l) && !self.own.known_until(own_upto, l))
                .collect();
            if msg.payload.len() != locs.len() {
                return Err(CodecError::Desync {
                    expected: locs.len(),
                    got: msg.payload.len(),
                });
            }
            self.live.advance(msg.offset, self.n);
            locs
        };
        let filled = self.live.apply(&locs, &msg.payload);
        self.peer.push(
            LogEntry {
                offset: msg.offset,
                filled,
            },
            self.depth,
        );
        self.last_recv_offset = Some(msg.offset);
        self.prune();
        Ok(PartialBufferMap {
            offset: msg.offset,
            reports: locs.into_iter().zip(msg.payload.iter().copied()).collect(),
            resync: false,
        })
    }

    fn accept_resync(&mut self, msg: &CompressedBM) -> Result<PartialBufferMap, CodecError> {
        if msg.payload.len() != self.n {
            return Err(CodecError::Desync {
                expected: self.n,
                got: msg.payload.len(),
            });
        }
        let bm = BufferMap::new(msg.offset, msg.payload.clone());
        let ahead = msg.lbmr_seq.wrapping_sub(self.peer.count() as u16) as u64;
        let seq = self.peer.count() + ahead;
        self.peer = KnowledgeLog {
            base: bm.filled().collect(),
            base_count: seq + 1,
            base_offset: Some(bm.offset),
            entries: VecDeque::new(),
        };
        self.pending = self.pending.split_off(&(seq + 1));
        self.last_recv_offset = Some(
            self.last_recv_offset
                .map_or(bm.offset, |o| o.max(bm.offset)),
        );
        self.rebuild_live(bm.offset);
        self.prune();
        Ok(PartialBufferMap {
            offset: bm.offset,
            reports: bm
                .bits
                .iter()
                .enumerate()
                .map(|(i, &b)| (bm.chunk_at(i), b))
                .collect(),
            resync: true,
        })
    }

    fn rebuild_live(&mut self, offset: ChunkId) {
        let floor = self.live.floor().map_or(offset, |f| f.max(offset));
        let end = self
            .live
            .covered_end()
            .map_or(offset as u64 + self.n as u64, |e| {
                e.max(offset as u64 + self.n as u64)
            });
        let set: SupportSet = (floor as u64..end)
            .map(|l| l as ChunkId)
            .filter(|&l| !self.peer.known(l) && !self.own.known(l))
            .collect();
        self.live = SupportState::with_window(floor, (end - floor as u64) as usize, set);
    }

    /// Accepts counterpart messages in any order, buffering early ones and
    /// decoding everything that became decodable.
    ///
    /// A message is only buffered while it is fewer than `depth` messages
    /// ahead of the next expected one. Beyond that the gap would soon outgrow
    /// the counterpart's archive, so [`CodecError::MissingReference`] is
    /// returned and the counterpart must send a
    /// [`full_resync`](Self::full_resync).
    pub fn receive(&mut self, msg: CompressedBM) -> Result<Vec<PartialBufferMap>, CodecError> {
        let expected = self.peer.count();
        let ahead = msg.lbmr_seq.wrapping_sub(expected as u16);
        if ahead >= 0x8000 {
            self.stale += 1;
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        if ahead == 0 || msg.scheme == Scheme::Resync {
            out.push(self.decode(&msg)?);
        } else {
            if ahead as usize >= self.depth {
                return Err(CodecError::MissingReference {
                    expected: expected as u16,
                    got: msg.lbmr_seq,
                });
            }
            self.pending.insert(expected + ahead as u64, msg);
            return Ok(out);
        }
        while let Some(next) = self.pending.remove(&self.peer.count()) {
            out.push(self.decode(&next)?);
        }
        Ok(out)
    }

    fn prune(&mut self) {
        if let (Some(a), Some(b)) = (self.last_sent_offset, self.last_recv_offset) {
            let floor = a.min(b);
            self.own.prune_below(floor);
            self.peer.prune_below(floor);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn bm(offset: ChunkId, s: &str) -> BufferMap {
        BufferMap::from_bit_str(offset, s)
    }

    fn exchange(from: &mut PpbmsSession, to: &mut PpbmsSession, b: &BufferMap) -> PartialBufferMap {
        let msg = from.encode(b).unwrap();
        let got = to.decode(&msg).unwrap();
        assert_eq!(from.support_set(), to.support_set());
        got
    }

    #[test]
    fn shared_support_set_example() {
        let ss = SupportSet::from_sorted(vec![1, 3, 5, 7]).unwrap();
        let mut a = PpbmsSession::with_support_set(8, 0, ss.clone());
        let mut b = PpbmsSession::with_support_set(8, 0, ss);
        let msg = a.encode(&bm(0, "00010001")).unwrap();
        assert_eq!(msg.payload, vec![false, true, false, true]);
        assert_eq!(a.support_set().as_slice(), &[1, 5]);
        let got = b.decode(&msg).unwrap();
        assert_eq!(
            got.reports,
            vec![(1, false), (3, true), (5, false), (7, true)]
        );
        assert_eq!(b.support_set().as_slice(), &[1, 5]);
    }

    #[test]
    fn counterpart_full_buffer_silences_sender() {
        let mut a = PpbmsSession::new(8);
        let mut b = PpbmsSession::new(8);
        let full = bm(0, "11111111");
        let got = exchange(&mut b, &mut a, &full);
        assert_eq!(got.reports.len(), 8);
        let got = exchange(&mut a, &mut b, &bm(0, "00000000"));
        assert!(got.reports.is_empty());
        // one chunk later only the appended position is reported
        let got = exchange(&mut a, &mut b, &bm(1, "00000000"));
        assert_eq!(got.reports, vec![(8, false)]);
    }

    #[test]
    fn identical_bitmaps_report_only_common_gaps() {
        let mut a = PpbmsSession::new(8);
        let mut b = PpbmsSession::new(8);
        let x = bm(0, "11010010");
        exchange(&mut a, &mut b, &x);
        let got = exchange(&mut b, &mut a, &x);
        // positions unfilled in both: 2, 4, 5, 7
        assert_eq!(
            got.reports.iter().map(|r| r.0).collect::<Vec<_>>(),
            vec![2, 4, 5, 7]
        );
        let got = exchange(&mut a, &mut b, &x);
        assert_eq!(got.reports.len(), 4);
    }

    #[test]
    fn resolve_matches_live_in_order() {
        let mut a = PpbmsSession::new(6);
        let mut b = PpbmsSession::new(6);
        let seq = [
            (0, "000000", "100000"),
            (1, "100001", "000011"),
            (2, "100110", "010111"),
            (4, "111100", "111101"),
        ];
        for (off, sa, sb) in seq {
            let m = a.encode(&bm(off, sa)).unwrap();
            assert_eq!(b.resolve(m.lbmr_seq, m.cbmr_seq).unwrap(), *b.support_set());
            b.decode(&m).unwrap();
            let m = b.encode(&bm(off, sb)).unwrap();
            assert_eq!(a.resolve(m.lbmr_seq, m.cbmr_seq).unwrap(), *a.support_set());
            a.decode(&m).unwrap();
            assert_eq!(a.support_set(), b.support_set());
        }
    }

    #[test]
    fn crossing_messages_use_the_archived_reference() {
        let mut a = PpbmsSession::new(6);
        let mut b = PpbmsSession::new(6);
        let ma = a.encode(&bm(0, "100000")).unwrap();
        b.decode(&ma).unwrap();
        // both send before seeing the other's message
        let mb = b.encode(&bm(1, "110001")).unwrap();
        let ma2 = a.encode(&bm(1, "001010")).unwrap();
        assert_eq!(ma2.cbmr_seq, 0);
        let prior = b.resolve(ma2.lbmr_seq, ma2.cbmr_seq).unwrap();
        assert_ne!(prior, *b.support_set());
        let got = b.decode(&ma2).unwrap();
        assert_eq!(got.reports.len(), ma2.payload.len());
        a.decode(&mb).unwrap();
        assert_eq!(a.support_set(), b.support_set());
    }

    #[test]
    fn reference_beyond_depth_is_missing() {
        let mut a = PpbmsSession::with_depth(4, 2);
        let mut b = PpbmsSession::with_depth(4, 2);
        let m = a.encode(&bm(0, "0000")).unwrap();
        b.decode(&m).unwrap();
        for t in 1..5 {
            b.encode(&bm(t, "0000")).unwrap();
        }
        let m = a.encode(&bm(1, "0000")).unwrap();
        assert!(matches!(
            b.decode(&m),
            Err(CodecError::MissingReference { .. })
        ));
        assert!(matches!(
            b.resolve(m.lbmr_seq, 0),
            Err(CodecError::MissingReference { .. })
        ));
    }

    #[test]
    fn receive_reorders_within_depth() {
        let mut a = PpbmsSession::new(8);
        let mut b = PpbmsSession::new(8);
        let m0 = a.encode(&bm(0, "10000000")).unwrap();
        let m1 = a.encode(&bm(1, "10000001")).unwrap();
        let m2 = a.encode(&bm(2, "10000011")).unwrap();
        assert!(b.receive(m1).unwrap().is_empty());
        assert_eq!(b.pending(), 1);
        assert_eq!(b.receive(m0).unwrap().len(), 2);
        assert_eq!(b.receive(m2).unwrap().len(), 1);
        assert_eq!(a.support_set(), b.support_set());
    }

    #[test]
    fn lost_message_recovers_with_resync() {
        let mut a = PpbmsSession::with_depth(8, 3);
        let mut b = PpbmsSession::with_depth(8, 3);
        b.receive(a.encode(&bm(0, "10000000")).unwrap()).unwrap();
        let _lost = a.encode(&bm(1, "10000001")).unwrap();
        b.receive(a.encode(&bm(2, "10000011")).unwrap()).unwrap();
        b.receive(a.encode(&bm(3, "10000111")).unwrap()).unwrap();
        let err = b.receive(a.encode(&bm(4, "10001111")).unwrap());
        assert!(matches!(err, Err(CodecError::MissingReference { .. })));
        let r = a.full_resync(&bm(4, "10001111")).unwrap();
        assert_eq!(r.payload.len(), 8);
        let got = b.receive(r).unwrap();
        assert!(got[0].resync);
        assert_eq!(a.support_set(), b.support_set());
        for (t, s) in [(5, "00111111"), (6, "01111111")] {
            let got = b.receive(a.encode(&bm(t, s)).unwrap()).unwrap();
            assert_eq!(got.len(), 1);
            assert_eq!(a.support_set(), b.support_set());
        }
        // the counterpart direction still works
        a.receive(b.encode(&bm(6, "00000000")).unwrap()).unwrap();
        assert_eq!(a.support_set(), b.support_set());
    }
}
