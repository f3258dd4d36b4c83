use alloc::vec::Vec;

use super::{varint, CoderError};

/// Run-length form of a bit sequence: the value of the first bit and the
/// lengths of the alternating runs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RleStream {
    pub first_bit: bool,
    pub runs: Vec<u64>,
}

impl RleStream {
    pub fn bit_count(&self) -> u64 {
        self.runs.iter().sum()
    }

    /// One flag byte followed by one varint per run.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(1 + self.runs.len());
        out.push(self.first_bit as u8);
        for &r in &self.runs {
            varint::write(&mut out, r);
        }
        out
    }

    pub fn encoded_len(&self) -> usize {
        1 + self
            .runs
            .iter()
            .map(|&r| varint::encoded_len(r))
            .sum::<usize>()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CoderError> {
        let (&flag, _) = bytes.split_first().ok_or(CoderError::EmptyInput)?;
        if flag > 1 {
            return Err(CoderError::Corrupt("run-length flag byte"));
        }
        let mut pos = 1;
        let mut runs = Vec::new();
        while pos < bytes.len() {
            let r = varint::read(bytes, &mut pos)?;
            if r == 0 {
                return Err(CoderError::Corrupt("zero-length run"));
            }
            runs.push(r);
        }
        if runs.is_empty() {
            return Err(CoderError::Corrupt("no runs"));
        }
        Ok(Self {
            first_bit: flag == 1,
            runs,
        })
    }
}

pub fn rle_encode(bits: &[bool]) -> Result<RleStream, CoderError> {
    let (&first_bit, _) = bits.split_first().ok_or(CoderError::EmptyInput)?;
    let mut runs = Vec::new();
    let mut cur = first_bit;
    let mut len = 0u64;
    for &b in bits {
        if b == cur {
            len += 1;
        } else {
            runs.push(len);
            cur = b;
            len = 1;
        }
    }
    runs.push(len);
    Ok(RleStream { first_bit, runs })
}

pub fn rle_decode(stream: &RleStream) -> Vec<bool> {
    let mut out = Vec::with_capacity(stream.bit_count() as usize);
    let mut bit = stream.first_bit;
    for &r in &stream.runs {
        out.extend(core::iter::repeat_n(bit, r as usize));
        bit = !bit;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn bits(s: &str) -> Vec<bool> {
        s.bytes().map(|b| b == b'1').collect()
    }

    #[test]
    fn simple_runs() {
        let s = rle_encode(&bits("00001111")).unwrap();
        assert!(!s.first_bit);
        assert_eq!(s.runs, vec![4, 4]);
        assert_eq!(rle_decode(&s), bits("00001111"));
    }

    #[test]
    fn alternating_input_expands() {
        let alt: Vec<bool> = (0..64).map(|i| i % 2 == 1).collect();
        let s = rle_encode(&alt).unwrap();
        assert_eq!(s.runs, vec![1; 64]);
        assert_eq!(s.to_bytes().len(), 65);
        assert!(s.encoded_len() > alt.len() / 8);
    }

    #[test]
    fn long_zero_run_is_three_bytes() {
        let s = rle_encode(&[false; 456]).unwrap();
        assert_eq!(s.runs, vec![456]);
        let bytes = s.to_bytes();
        assert_eq!(bytes, vec![0x00, 0xc8, 0x03]);
        assert_eq!(RleStream::from_bytes(&bytes).unwrap(), s);
    }

    #[test]
    fn errors() {
        assert_eq!(rle_encode(&[]), Err(CoderError::EmptyInput));
        assert_eq!(
            RleStream::from_bytes(&[0, 0x80]),
            Err(CoderError::BadVarint)
        );
        assert!(RleStream::from_bytes(&[2, 1]).is_err());
        assert!(RleStream::from_bytes(&[0, 0]).is_err());
    }
}
