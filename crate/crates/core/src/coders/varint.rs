//! Unsigned LEB128: 7-bit groups, least significant first, high bit set on
//! every byte but the last.

use alloc::vec::Vec;

use super::CoderError;

pub fn encoded_len(mut v: u64) -> usize {
    let mut n = 1;
    while v >= 0x80 {
        v >>= 7;
        n += 1;
    }
    n
}

pub fn write(out: &mut Vec<u8>, mut v: u64) {
    while v >= 0x80 {
        out.push(v as u8 | 0x80);
        v >>= 7;
    }
    out.push(v as u8);
}

/// Reads one varint starting at `*pos` and advances it.
pub fn read(bytes: &[u8], pos: &mut usize) -> Result<u64, CoderError> {
    let mut v = 0u64;
    for shift in (0..64).step_by(7) {
        let b = *bytes.get(*pos).ok_or(CoderError::BadVarint)?;
        *pos += 1;
        let part = (b & 0x7f) as u64;
        if shift == 63 && part > 1 {
            return Err(CoderError::BadVarint);
        }
        v |= part << shift;
        if b & 0x80 == 0 {
            return Ok(v);
        }
    }
    Err(CoderError::BadVarint)
}
