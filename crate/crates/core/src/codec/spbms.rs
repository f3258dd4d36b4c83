use alloc::vec::Vec;

use super::{check_width, CodecError, CompressedBM, Scheme};
use crate::bitmap::{BufferMap, ChunkId};
use crate::support::{SupportSet, SupportState};

/// Codec state shared by the SPBMS encoder and decoder.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SpbmsState {
    pub n: usize,
    pub ss: SupportState,
    pub last_offset: Option<ChunkId>,
    /// Number of messages processed so far.
    pub seq: u16,
}

impl SpbmsState {
    fn new(n: usize) -> Self {
        Self {
            n,
            ..Self::default()
        }
    }

    fn check_offset(&self, offset: ChunkId) -> Result<(), CodecError> {
        match self.last_offset {
            Some(prev) if offset < prev => Err(CodecError::OffsetRegression { prev, cur: offset }),
            _ => Ok(()),
        }
    }

    fn reset_from(&mut self, bm: &BufferMap) {
        self.ss = SupportState::new();
        let locs = self.ss.advance(bm.offset, self.n);
        self.ss.apply(&locs, &bm.bits);
        self.last_offset = Some(bm.offset);
    }
}

#[derive(Debug, Clone)]
pub struct SpbmsEncoder {
    state: SpbmsState,
}

impl SpbmsEncoder {
    pub fn new(n: usize) -> Self {
        Self {
            state: SpbmsState::new(n),
        }
    }

    pub fn state(&self) -> &SpbmsState {
        &self.state
    }

    pub fn support_set(&self) -> &SupportSet {
        self.state.ss.set()
    }

    /// Locations the next message for a window at `offset` will carry.
    pub fn locations_for(&self, offset: ChunkId) -> Vec<ChunkId> {
        self.state.ss.peek(offset, self.state.n)
    }

    pub fn encode(&mut self, bm: &BufferMap) -> Result<CompressedBM, CodecError> {
        let st = &mut self.state;
        check_width(st.n, bm)?;
        st.check_offset(bm.offset)?;
        // Every position reported filled before must still be filled.
        if let (Some(floor), Some(end)) = (st.ss.floor(), st.ss.covered_end()) {
            let start = floor.max(bm.offset);
            let stop = end.min(bm.window_end());
            for chunk in start..stop as ChunkId {
                if !st.ss.set().contains(chunk) && bm.status(chunk) == Some(false) {
                    return Err(CodecError::NonMonotone { chunk });
                }
            }
        }
        let locs = st.ss.advance(bm.offset, st.n);
        let payload: Vec<bool> = locs
            .iter()
            .map(|&l| bm.bits[(l - bm.offset) as usize])
            .collect();
        if payload.len() > u16::MAX as usize {
            return Err(CodecError::PayloadTooLong(payload.len()));
        }
        st.ss.apply(&locs, &payload);
        st.last_offset = Some(bm.offset);
        let msg = CompressedBM {
            scheme: Scheme::Spbms,
            offset: bm.offset,
            lbmr_seq: st.seq,
            cbmr_seq: 0,
            payload,
        };
        st.seq = st.seq.wrapping_add(1);
        Ok(msg)
    }

    /// Uncompressed message that reinitializes both ends from `bm`.
    pub fn full_resync(&mut self, bm: &BufferMap) -> Result<CompressedBM, CodecError> {
        check_width(self.state.n, bm)?;
        self.state.reset_from(bm);
        let msg = CompressedBM {
            scheme: Scheme::Resync,
            offset: bm.offset,
            lbmr_seq: self.state.seq,
            cbmr_seq: 0,
            payload: bm.bits.clone(),
        };
        self.state.seq = self.state.seq.wrapping_add(1);
        Ok(msg)
    }
}

#[derive(Debug, Clone)]
pub struct SpbmsDecoder {
    state: SpbmsState,
}

impl SpbmsDecoder {
    pub fn new(n: usize) -> Self {
        Self {
            state: SpbmsState::new(n),
        }
    }

    pub fn state(&self) -> &SpbmsState {
        &self.state
    }

    pub fn support_set(&self) -> &SupportSet {
        self.state.ss.set()
    }

    /// Rebuilds the sender's bitmap. On error the state is left untouched.
    pub fn decode(&mut self, msg: &CompressedBM) -> Result<BufferMap, CodecError> {
        let st = &mut self.state;
        match msg.scheme {
            Scheme::Spbms => {}
            Scheme::Resync => {
                if msg.payload.len() != st.n {
                    return Err(CodecError::Desync {
                        expected: st.n,
                        got: msg.payload.len(),
                    });
                }
                let bm = BufferMap::new(msg.offset, msg.payload.clone());
                st.reset_from(&bm);
                st.seq = msg.lbmr_seq.wrapping_add(1);
                return Ok(bm);
            }
            other => return Err(CodecError::WrongScheme(other, Scheme::Spbms)),
        }
        if msg.lbmr_seq != st.seq {
            return Err(CodecError::MissingReference {
                expected: st.seq,
                got: msg.lbmr_seq,
            });
        }
        st.check_offset(msg.offset)?;
        let expected = st.ss.expected_len(msg.offset, st.n);
        if msg.payload.len() != expected {
            return Err(CodecError::Desync {
                expected,
                got: msg.payload.len(),
            });
        }
        let locs = st.ss.advance(msg.offset, st.n);
        let mut bits = alloc::vec![true; st.n];
        for (&l, &b) in locs.iter().zip(&msg.payload) {
            bits[(l - msg.offset) as usize] = b;
        }
        st.ss.apply(&locs, &msg.payload);
        st.last_offset = Some(msg.offset);
        st.seq = st.seq.wrapping_add(1);
        Ok(BufferMap::new(msg.offset, bits))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn bm(offset: ChunkId, s: &str) -> BufferMap {
        BufferMap::from_bit_str(offset, s)
    }

    #[test]
    fn worked_examples_round_trip() {
        let mut enc = SpbmsEncoder::new(8);
        let mut dec = SpbmsDecoder::new(8);
        let first = bm(0, "10100000");
        let m1 = enc.encode(&first).unwrap();
        assert_eq!(m1.payload, first.bits);
        assert_eq!(enc.support_set().as_slice(), &[1, 3, 4, 5, 6, 7]);
        assert_eq!(dec.decode(&m1).unwrap(), first);

        let second = bm(0, "10110011");
        let m2 = enc.encode(&second).unwrap();
        assert_eq!(m2.payload, vec![false, true, false, false, true, true]);
        assert_eq!(enc.support_set().as_slice(), &[1, 4, 5]);
        assert_eq!(dec.decode(&m2).unwrap(), second);
        assert_eq!(dec.support_set(), enc.support_set());

        // unchanged bitmap: all-zero payload over the remaining support set
        let m3 = enc.encode(&second).unwrap();
        assert_eq!(m3.payload, vec![false; 3]);
        assert_eq!(dec.decode(&m3).unwrap(), second);
    }

    #[test]
    fn window_slide_appends_new_positions() {
        let mut enc = SpbmsEncoder::new(4);
        let mut dec = SpbmsDecoder::new(4);
        let a = bm(10, "1100");
        let b = bm(12, "0111");
        dec.decode(&enc.encode(&a).unwrap()).unwrap();
        let m = enc.encode(&b).unwrap();
        // chunks 12, 13 retained; 14, 15 appended
        assert_eq!(m.payload, vec![false, true, true, true]);
        assert_eq!(dec.decode(&m).unwrap(), b);
        assert_eq!(enc.support_set().as_slice(), &[12]);
    }

    #[test]
    fn stale_state_is_a_desync_without_mutation() {
        let mut enc = SpbmsEncoder::new(8);
        let mut dec = SpbmsDecoder::new(8);
        dec.decode(&enc.encode(&bm(0, "10100000")).unwrap())
            .unwrap();
        let mut m = enc.encode(&bm(0, "10110011")).unwrap();
        m.payload.pop();
        let before = dec.state().clone();
        assert!(matches!(dec.decode(&m), Err(CodecError::Desync { .. })));
        assert_eq!(dec.state(), &before);
    }

    #[test]
    fn out_of_order_is_missing_reference() {
        let mut enc = SpbmsEncoder::new(4);
        let mut dec = SpbmsDecoder::new(4);
        let _m1 = enc.encode(&bm(0, "1000")).unwrap();
        let m2 = enc.encode(&bm(1, "1000")).unwrap();
        assert_eq!(
            dec.decode(&m2),
            Err(CodecError::MissingReference {
                expected: 0,
                got: 1
            })
        );
    }

    #[test]
    fn encoder_rejects_protocol_violations() {
        let mut enc = SpbmsEncoder::new(4);
        enc.encode(&bm(5, "1100")).unwrap();
        assert_eq!(
            enc.encode(&bm(4, "1100")),
            Err(CodecError::OffsetRegression { prev: 5, cur: 4 })
        );
        assert_eq!(
            enc.encode(&bm(5, "1000")),
            Err(CodecError::NonMonotone { chunk: 6 })
        );
        assert!(matches!(
            enc.encode(&bm(5, "11000")),
            Err(CodecError::WidthMismatch { .. })
        ));
    }

    #[test]
    fn resync_recovers_a_broken_pair() {
        let mut enc = SpbmsEncoder::new(8);
        let mut dec = SpbmsDecoder::new(8);
        dec.decode(&enc.encode(&bm(0, "10000000")).unwrap())
            .unwrap();
        // lose one message
        let _lost = enc.encode(&bm(1, "11000000")).unwrap();
        let m = enc.encode(&bm(2, "11100000")).unwrap();
        assert!(dec.decode(&m).is_err());

        let snap = bm(3, "11110000");
        let r = enc.full_resync(&snap).unwrap();
        assert_eq!(r.payload.len(), 8);
        assert_eq!(dec.decode(&r).unwrap(), snap);
        assert_eq!(dec.support_set(), enc.support_set());
        for (t, s) in [(4, "11110001"), (5, "11100011")] {
            let b = bm(t, s);
            assert_eq!(dec.decode(&enc.encode(&b).unwrap()).unwrap(), b);
        }
    }

    #[test]
    fn resync_equals_bootstrap() {
        let snap = bm(7, "01100101");
        let mut fresh = SpbmsEncoder::new(8);
        let boot = fresh.encode(&snap).unwrap();
        let mut used = SpbmsEncoder::new(8);
        used.encode(&bm(3, "00000000")).unwrap();
        let r = used.full_resync(&snap).unwrap();
        assert_eq!(r.payload, boot.payload);
        assert_eq!(used.support_set(), fresh.support_set());
        let next = bm(8, "11001011");
        assert_eq!(
            used.encode(&next).unwrap().payload,
            fresh.encode(&next).unwrap().payload
        );
    }
}
