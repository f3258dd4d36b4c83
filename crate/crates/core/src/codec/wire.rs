//! Byte layout of a [`CompressedBM`].
//!
//! ```text
//! tag:u8  offset:u32  lbmr_seq:u16  cbmr_seq:u16  bits:u16  payload
//! ```
//!
//! Integers are big-endian; the payload is packed most-significant bit first
//! and zero-padded to a byte boundary.

use alloc::vec::Vec;

use thiserror::Error;

use super::{CompressedBM, Scheme};
use crate::bitmap::{pack_bits, unpack_bits};

pub const HEADER_LEN: usize = 11;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WireError {
    #[error("message truncated: need {need} bytes, have {have}")]
    Truncated { need: usize, have: usize },
    #[error("unknown scheme tag {0:#04x}")]
    UnknownScheme(u8),
    #[error("payload padding bits are not zero")]
    Padding,
    #[error("payload of {0} bits does not fit the 16-bit length field")]
    TooLong(usize),
}

/// Total encoded size of a message with `bits` payload bits.
pub fn wire_len(bits: usize) -> usize {
    HEADER_LEN + bits.div_ceil(8)
}

pub fn encode(msg: &CompressedBM) -> Result<Vec<u8>, WireError> {
    let bits = msg.payload.len();
    let count = u16::try_from(bits).map_err(|_| WireError::TooLong(bits))?;
    let mut out = Vec::with_capacity(wire_len(bits));
    out.push(msg.scheme.tag());
    out.extend_from_slice(&msg.offset.to_be_bytes());
    out.extend_from_slice(&msg.lbmr_seq.to_be_bytes());
    out.extend_from_slice(&msg.cbmr_seq.to_be_bytes());
    out.extend_from_slice(&count.to_be_bytes());
    out.extend_from_slice(&pack_bits(&msg.payload));
    Ok(out)
}

/// Decodes one message from the front of `bytes`, returning it with the
/// number of bytes consumed.
pub fn decode(bytes: &[u8]) -> Result<(CompressedBM, usize), WireError> {
    if bytes.len() < HEADER_LEN {
        return Err(WireError::Truncated {
            need: HEADER_LEN,
            have: bytes.len(),
        });
    }
    let scheme = Scheme::from_tag(bytes[0]).ok_or(WireError::UnknownScheme(bytes[0]))?;
    let be16 = |i: usize| u16::from_be_bytes([bytes[i], bytes[i + 1]]);
    let offset = u32::from_be_bytes([bytes[1], bytes[2], bytes[3], bytes[4]]);
    let bits = be16(9) as usize;
    let total = wire_len(bits);
    if bytes.len() < total {
        return Err(WireError::Truncated {
            need: total,
            have: bytes.len(),
        });
    }
    let payload = unpack_bits(&bytes[HEADER_LEN..total], bits).map_err(|_| WireError::Padding)?;
    let msg = CompressedBM {
        scheme,
        offset,
        lbmr_seq: be16(5),
        cbmr_seq: be16(7),
        payload,
    };
    Ok((msg, total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitmap::BufferMap;
    use crate::codec::{PpbmsSession, SpbmsEncoder};
    use crate::support::SupportSet;
    use alloc::vec;

    fn unhex(s: &str) -> Vec<u8> {
        let s: Vec<u8> = s.bytes().filter(|b| !b.is_ascii_whitespace()).collect();
        s.chunks(2)
            .map(|p| u8::from_str_radix(core::str::from_utf8(p).unwrap(), 16).unwrap())
            .collect()
    }

    #[test]
    fn golden_spbms_examples() {
        let mut enc = SpbmsEncoder::new(8);
        let msgs = [
            enc.encode(&BufferMap::from_bit_str(0, "10100000")).unwrap(),
            enc.encode(&BufferMap::from_bit_str(0, "10110011")).unwrap(),
            enc.encode(&BufferMap::from_bit_str(0, "10110011")).unwrap(),
        ];
        let golden = [
            "02 00000000 0000 0000 0008 a0",
            "02 00000000 0001 0000 0006 4c",
            "02 00000000 0002 0000 0003 00",
        ];
        for (m, g) in msgs.iter().zip(golden) {
            let bytes = encode(m).unwrap();
            assert_eq!(bytes, unhex(g));
            assert_eq!(decode(&bytes).unwrap(), (m.clone(), bytes.len()));
        }
    }

    #[test]
    fn golden_ppbms_example() {
        let ss = SupportSet::from_sorted(vec![1, 3, 5, 7]).unwrap();
        let mut a = PpbmsSession::with_support_set(8, 0, ss);
        let m = a.encode(&BufferMap::from_bit_str(0, "00010001")).unwrap();
        assert_eq!(encode(&m).unwrap(), unhex("03 00000000 0000 0000 0004 50"));
    }

    #[test]
    fn resync_is_header_plus_bitmap() {
        let mut enc = SpbmsEncoder::new(12);
        let r = enc
            .full_resync(&BufferMap::from_bit_str(7, "111100001010"))
            .unwrap();
        let bytes = encode(&r).unwrap();
        assert_eq!(bytes.len(), HEADER_LEN + 2);
        assert_eq!(bytes, unhex("04 00000007 0000 0000 000c f0a0"));
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(matches!(
            decode(&[2, 0, 0]),
            Err(WireError::Truncated { .. })
        ));
        assert_eq!(
            decode(&unhex("09 00000000 0000 0000 0000")),
            Err(WireError::UnknownScheme(9))
        );
        assert!(matches!(
            decode(&unhex("02 00000000 0000 0000 0009 ff")),
            Err(WireError::Truncated { need: 13, have: 12 })
        ));
        assert_eq!(
            decode(&unhex("02 00000000 0000 0000 0004 f1")),
            Err(WireError::Padding)
        );
        let long = CompressedBM {
            scheme: Scheme::Sbms,
            offset: 0,
            lbmr_seq: 0,
            cbmr_seq: 0,
            payload: vec![false; 70_000],
        };
        assert_eq!(encode(&long), Err(WireError::TooLong(70_000)));
    }

    #[test]
    fn consumes_one_message_from_a_stream() {
        let mut enc = SpbmsEncoder::new(8);
        let mut stream =
            encode(&enc.encode(&BufferMap::from_bit_str(0, "10100000")).unwrap()).unwrap();
        let first = stream.len();
        stream
            .extend(encode(&enc.encode(&BufferMap::from_bit_str(1, "01100001")).unwrap()).unwrap());
        let (_, used) = decode(&stream).unwrap();
        assert_eq!(used, first);
        let (m2, used2) = decode(&stream[used..]).unwrap();
        assert_eq!(m2.lbmr_seq, 1);
        assert_eq!(used + used2, stream.len());
    }
}
