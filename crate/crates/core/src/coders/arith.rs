//! Binary range coder with 32-bit registers and carry propagation.
//!
//! Without a model the coder adapts order-0 counts (both starting at 1),
//! reset on every call. With a model, `model[i]` is the probability that bit
//! `i` is 1, quantized to 16 bits.
//!
//! The flush picks the value in the final interval with the most trailing
//! zero bits and drops trailing zero bytes; the decoder reads zeros past the
//! end of its input.

use alloc::vec::Vec;

use super::CoderError;
use crate::math;

const TOP: u32 = 1 << 24;
const PROB_BITS: u32 = 16;
const MAX_TOTAL: u32 = 1 << 16;

#[derive(Debug, Clone, Copy)]
struct Adaptive {
    c0: u32,
    c1: u32,
}

impl Adaptive {
    fn new() -> Self {
        Self { c0: 1, c1: 1 }
    }

    fn bound(&self, range: u32) -> u32 {
        (range / (self.c0 + self.c1)) * self.c0
    }

    fn update(&mut self, bit: bool) {
        if bit {
            self.c1 += 1;
        } else {
            self.c0 += 1;
        }
        if self.c0 + self.c1 >= MAX_TOTAL {
            self.c0 = self.c0.div_ceil(2);
            self.c1 = self.c1.div_ceil(2);
        }
    }
}

fn quantized_zero_prob(p1: f64) -> u32 {
    let p0 = math::round((1.0 - p1) * (1u32 << PROB_BITS) as f64);
    (p0 as i64).clamp(1, (1 << PROB_BITS) - 1) as u32
}

fn model_bound(range: u32, p1: f64) -> u32 {
    (range >> PROB_BITS) * quantized_zero_prob(p1)
}

struct Encoder {
    low: u64,
    range: u32,
    cache: u8,
    cache_size: u64,
    started: bool,
    out: Vec<u8>,
}

impl Encoder {
    fn new() -> Self {
        Self {
            low: 0,
            range: u32::MAX,
            cache: 0,
            cache_size: 1,
            started: false,
            out: Vec::new(),
        }
    }

    fn emit(&mut self, b: u8) {
        // the first byte is always the initial zero cache
        if self.started {
            self.out.push(b);
        } else {
            debug_assert_eq!(b, 0);
            self.started = true;
        }
    }

    fn shift_low(&mut self) {
        if (self.low as u32) < 0xff00_0000 || self.low >> 32 != 0 {
            let carry = (self.low >> 32) as u8;
            let mut temp = self.cache;
            loop {
                self.emit(temp.wrapping_add(carry));
                temp = 0xff;
                self.cache_size -= 1;
                if self.cache_size == 0 {
                    break;
                }
            }
            self.cache = (self.low >> 24) as u8;
        }
        self.cache_size += 1;
        self.low = (self.low & 0x00ff_ffff) << 8;
    }

    fn encode(&mut self, bit: bool, bound: u32) {
        if bit {
            self.low += bound as u64;
            self.range -= bound;
        } else {
            self.range = bound;
        }
        while self.range < TOP {
            self.range <<= 8;
            self.shift_low();
        }
    }

    fn finish(mut self) -> Vec<u8> {
        let hi = self.low + self.range as u64 - 1;
        for k in (0..=32).rev() {
            let mask = (1u64 << k) - 1;
            let v = (self.low + mask) & !mask;
            if v <= hi {
                self.low = v;
                break;
            }
        }
        for _ in 0..5 {
            self.shift_low();
        }
        while self.out.last() == Some(&0) {
            self.out.pop();
        }
        self.out
    }
}

struct Decoder<'a> {
    code: u32,
    range: u32,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Decoder<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        let mut d = Self {
            code: 0,
            range: u32::MAX,
            bytes,
            pos: 0,
        };
        for _ in 0..4 {
            d.code = (d.code << 8) | d.next() as u32;
        }
        d
    }

    fn next(&mut self) -> u8 {
        let b = self.bytes.get(self.pos).copied().unwrap_or(0);
        self.pos += 1;
        b
    }

    fn decode(&mut self, bound: u32) -> bool {
        let bit = if self.code < bound {
            self.range = bound;
            false
        } else {
            self.code -= bound;
            self.range -= bound;
            true
        };
        while self.range < TOP {
            self.range <<= 8;
            self.code = (self.code << 8) | self.next() as u32;
        }
        bit
    }
}

fn check_model(n: usize, model: Option<&[f64]>) -> Result<(), CoderError> {
    match model {
        Some(m) if m.len() < n => Err(CoderError::ModelLength {
            expected: n,
            got: m.len(),
        }),
        _ => Ok(()),
    }
}

pub fn arith_encode(bits: &[bool], model: Option<&[f64]>) -> Result<Vec<u8>, CoderError> {
    check_model(bits.len(), model)?;
    let mut enc = Encoder::new();
    let mut adaptive = Adaptive::new();
    for (i, &bit) in bits.iter().enumerate() {
        match model {
            Some(m) => enc.encode(bit, model_bound(enc.range, m[i])),
            None => {
                enc.encode(bit, adaptive.bound(enc.range));
                adaptive.update(bit);
            }
        }
    }
    Ok(enc.finish())
}

pub fn arith_decode(
    bytes: &[u8],
    n: usize,
    model: Option<&[f64]>,
) -> Result<Vec<bool>, CoderError> {
    check_model(n, model)?;
    let mut dec = Decoder::new(bytes);
    let mut adaptive = Adaptive::new();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let bit = match model {
            Some(m) => dec.decode(model_bound(dec.range, m[i])),
            None => {
                let bit = dec.decode(adaptive.bound(dec.range));
                adaptive.update(bit);
                bit
            }
        };
        out.push(bit);
    }
    if bytes.len() > dec.pos.max(4) {
        return Err(CoderError::Corrupt("trailing bytes"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn h(p: f64) -> f64 {
        if p <= 0.0 || p >= 1.0 {
            0.0
        } else {
            -p * math::log2(p) - (1.0 - p) * math::log2(1.0 - p)
        }
    }

    #[test]
    fn constant_input_is_tiny() {
        let zeros = vec![false; 456];
        let enc = arith_encode(&zeros, None).unwrap();
        assert!(enc.len() <= 3, "{} bytes", enc.len());
        assert_eq!(arith_decode(&enc, 456, None).unwrap(), zeros);
        let ones = vec![true; 456];
        let enc = arith_encode(&ones, None).unwrap();
        assert!(enc.len() <= 3, "{} bytes", enc.len());
        assert_eq!(arith_decode(&enc, 456, None).unwrap(), ones);
    }

    #[test]
    fn empty_input() {
        assert!(arith_encode(&[], None).unwrap().is_empty());
        assert!(arith_decode(&[], 0, None).unwrap().is_empty());
    }

    #[test]
    fn fair_coin_is_incompressible() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let bits: Vec<bool> = (0..10_000).map(|_| rng.gen()).collect();
        let enc = arith_encode(&bits, None).unwrap();
        let ratio = (enc.len() * 8) as f64 / bits.len() as f64;
        assert!(ratio > 0.98 && ratio < 1.02, "ratio {ratio}");
        assert_eq!(arith_decode(&enc, bits.len(), None).unwrap(), bits);
    }

    #[test]
    fn adaptive_length_is_near_empirical_entropy() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for &(p, n) in &[(0.1, 5_000usize), (0.3, 2_000), (0.02, 10_000), (0.5, 300)] {
            let bits: Vec<bool> = (0..n).map(|_| rng.gen::<f64>() < p).collect();
            let ones = bits.iter().filter(|&&b| b).count();
            let bound = n as f64 * h(ones as f64 / n as f64) + 64.0;
            let enc = arith_encode(&bits, None).unwrap();
            assert!(
                ((enc.len() * 8) as f64) <= bound,
                "p={p}: {} > {bound}",
                enc.len() * 8
            );
            assert_eq!(arith_decode(&enc, n, None).unwrap(), bits);
        }
    }

    #[test]
    fn per_position_model_reaches_model_entropy() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 20_000;
        let model: Vec<f64> = (0..n).map(|i| (i % 100) as f64 / 100.0).collect();
        let bits: Vec<bool> = model.iter().map(|&p| rng.gen::<f64>() < p).collect();
        let ideal: f64 = bits
            .iter()
            .zip(&model)
            .map(|(&b, &p)| -math::log2(if b { p } else { 1.0 - p }))
            .sum();
        let enc = arith_encode(&bits, Some(&model)).unwrap();
        let got = (enc.len() * 8) as f64;
        assert!(got < ideal * 1.01 + 64.0, "{got} vs ideal {ideal}");
        assert_eq!(arith_decode(&enc, n, Some(&model)).unwrap(), bits);
    }

    #[test]
    fn impossible_bits_still_round_trip() {
        let model = [0.0, 1.0, 0.0, 1.0];
        let bits = [true, false, false, true];
        let enc = arith_encode(&bits, Some(&model)).unwrap();
        assert_eq!(arith_decode(&enc, 4, Some(&model)).unwrap(), bits);
    }

    #[test]
    fn carry_heavy_inputs_round_trip() {
        // long runs of ones push `low` through repeated carries
        for n in [1, 2, 7, 8, 9, 31, 32, 33, 1000, 5000] {
            let bits: Vec<bool> = (0..n).map(|i| i % 97 != 0).collect();
            let enc = arith_encode(&bits, None).unwrap();
            assert_eq!(arith_decode(&enc, n, None).unwrap(), bits, "n={n}");
            let model = vec![0.001; n];
            let enc = arith_encode(&bits, Some(&model)).unwrap();
            assert_eq!(arith_decode(&enc, n, Some(&model)).unwrap(), bits, "n={n}");
        }
    }

    #[test]
    fn model_length_is_checked() {
        assert_eq!(
            arith_encode(&[true, false], Some(&[0.5])),
            Err(CoderError::ModelLength {
                expected: 2,
                got: 1
            })
        );
    }
}
