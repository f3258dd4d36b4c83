//! Stationary buffer-filling model.
//!
//! Positions are indexed by *age*: age 0 is the newest position in the window
//! (the chunk that just entered the buffer) and age `n - 1` the oldest. A
//! curve stores `p_i`, the probability that the chunk at age `i` is already
//! buffered, so a valid curve is nondecreasing in `i`.
//!
//! A chunk's fill delay `d` is the age at which it becomes buffered; it stays
//! buffered afterwards. Sampling `d` by inverse CDF gives `Pr(d <= i) = p_i`,
//! which makes the curve both the marginal law of every bitmap position and
//! the source of the conditional probabilities used by the support-set codecs.

use alloc::vec::Vec;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurveError {
    #[error("curve must have at least one position")]
    Empty,
    #[error("probability {value} at age {index} is outside [0, 1]")]
    OutOfUnitRange { index: usize, value: f64 },
    #[error("curve is not monotone: p[{index}] = {value} is below p[{prev}] = {prev_value}")]
    NotMonotone {
        prev: usize,
        prev_value: f64,
        index: usize,
        value: f64,
    },
    #[error("age {index} outside curve of width {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("transition requires i < j, got i = {i}, j = {j}")]
    BadTransition { i: usize, j: usize },
    #[error("conditional fill probability is undefined: p[{index}] = 1")]
    UndefinedConditional { index: usize },
    #[error("need at least 3 samples to fit a two-segment curve, got {0}")]
    InsufficientData(usize),
    #[error("invalid two-segment parameters: {0}")]
    InvalidParams(&'static str),
}

/// Buffer-filling probability per age index (0 = newest).
#[derive(Debug, Clone, PartialEq)]
pub struct SCurve {
    probs: Vec<f64>,
}

impl SCurve {
    pub fn new(probs: Vec<f64>) -> Result<Self, CurveError> {
        if probs.is_empty() {
            return Err(CurveError::Empty);
        }
        for (index, &value) in probs.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(CurveError::OutOfUnitRange { index, value });
            }
            if index > 0 && value < probs[index - 1] {
                return Err(CurveError::NotMonotone {
                    prev: index - 1,
                    prev_value: probs[index - 1],
                    index,
                    value,
                });
            }
        }
        Ok(Self { probs })
    }

    pub fn from_two_segment(n: usize, params: &TwoSegmentParams) -> Result<Self, CurveError> {
        params.validate(n)?;
        Self::new(params.probabilities(n))
    }

    /// A curve with the same probability at every age.
    pub fn flat(n: usize, p: f64) -> Result<Self, CurveError> {
        Self::new(alloc::vec![p; n])
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn eval(&self, i: usize) -> Result<f64, CurveError> {
        self.probs
            .get(i)
            .copied()
            .ok_or(CurveError::IndexOutOfRange {
                index: i,
                n: self.len(),
            })
    }

    /// `q_{i,j} = (p_j - p_i) / (1 - p_i)`: probability that a chunk still
    /// unfilled at age `i` is filled by age `j`.
    pub fn transition_prob(&self, i: usize, j: usize) -> Result<f64, CurveError> {
        if i >= j {
            return Err(CurveError::BadTransition { i, j });
        }
        let pi = self.eval(i)?;
        let pj = self.eval(j)?;
        let miss = 1.0 - pi;
        if miss <= 0.0 {
            return Err(CurveError::UndefinedConditional { index: i });
        }
        Ok(((pj - pi) / miss).clamp(0.0, 1.0))
    }

    /// Inverse-CDF sample of a fill delay from `u` uniform in `[0, 1)`.
    ///
    /// Returns the smallest age `d` with `p_d > u`, or `None` when the chunk is
    /// never filled inside the window (`u >= p_{n-1}`).
    pub fn sample_fill_delay(&self, u: f64) -> Option<u32> {
        let d = self.probs.partition_point(|&p| p <= u);
        (d < self.probs.len()).then_some(d as u32)
    }
}

/// Piecewise-linear S-curve: `initial` at age 0, `p_break` at `breakpoint`,
/// `terminal` at age `n - 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoSegmentParams {
    pub breakpoint: usize,
    pub p_break: f64,
    pub terminal: f64,
    pub initial: f64,
}

impl TwoSegmentParams {
    /// Standard shape: rises from 0 at the newest age and reaches 1 at the oldest.
    pub fn new(breakpoint: usize, p_break: f64) -> Self {
        Self {
            breakpoint,
            p_break,
            terminal: 1.0,
            initial: 0.0,
        }
    }

    pub fn validate(&self, n: usize) -> Result<(), CurveError> {
        if n == 0 {
            return Err(CurveError::Empty);
        }
        if self.breakpoint > n - 1 {
            return Err(CurveError::InvalidParams("breakpoint beyond last age"));
        }
        let ordered = 0.0 <= self.initial
            && self.initial <= self.p_break
            && self.p_break <= self.terminal
            && self.terminal <= 1.0;
        if !ordered {
            return Err(CurveError::InvalidParams(
                "levels must satisfy 0 <= initial <= p_break <= terminal <= 1",
            ));
        }
        Ok(())
    }

    pub fn probabilities(&self, n: usize) -> Vec<f64> {
        (0..n).map(|i| self.at(n, i)).collect()
    }

    pub(crate) fn at(&self, n: usize, i: usize) -> f64 {
        let b = self.breakpoint;
        let v = if i <= b {
            if b == 0 {
                self.p_break
            } else {
                let r = i as f64 / b as f64;
                self.initial + (self.p_break - self.initial) * r
            }
        } else {
            let span = (n - 1 - b) as f64;
            let s = (i - b) as f64 / span;
            self.p_break + (self.terminal - self.p_break) * s
        };
        v.clamp(self.initial.min(self.p_break), self.terminal)
    }

    /// Sum of squared residuals of this curve against `(age, probability)` samples.
    pub fn sse(&self, n: usize, samples: &[(usize, f64)]) -> f64 {
        samples
            .iter()
            .map(|&(i, y)| {
                let r = self.at(n, i) - y;
                r * r
            })
            .sum()
    }
}

/// Least-squares two-segment fit over every breakpoint in `[0, n - 1]`.
///
/// For each breakpoint the three levels are linear in the hat basis, so they
/// are solved in closed form and then projected onto the ordered unit box.
/// Ties keep the smallest breakpoint.
pub fn fit_two_segment(samples: &[(usize, f64)], n: usize) -> Result<TwoSegmentParams, CurveError> {
    if samples.len() < 3 {
        return Err(CurveError::InsufficientData(samples.len()));
    }
    if let Some(&(index, _)) = samples.iter().find(|&&(i, _)| i >= n) {
        return Err(CurveError::IndexOutOfRange { index, n });
    }
    let mut best: Option<(f64, TwoSegmentParams)> = None;
    for b in 0..n {
        let params = fit_at_breakpoint(samples, n, b);
        let sse = params.sse(n, samples);
        match best {
            Some((best_sse, _)) if sse >= best_sse - 1e-12 => {}
            _ => best = Some((sse, params)),
        }
    }
    // n >= 1 and the loop ran at least once.
    Ok(best.map(|(_, p)| p).unwrap())
}

fn hat_features(n: usize, b: usize, i: usize) -> [f64; 3] {
    if i <= b && b > 0 {
        let r = i as f64 / b as f64;
        [1.0 - r, r, 0.0]
    } else if b == n - 1 {
        // Single-segment curve; only reachable when b == 0 == n - 1.
        [0.0, 1.0, 0.0]
    } else {
        let s = (i - b) as f64 / (n - 1 - b) as f64;
        [0.0, 1.0 - s, s]
    }
}

fn fit_at_breakpoint(samples: &[(usize, f64)], n: usize, b: usize) -> TwoSegmentParams {
    let mut ata = [[0.0f64; 3]; 3];
    let mut aty = [0.0f64; 3];
    let mut mean = 0.0;
    for &(i, y) in samples {
        let f = hat_features(n, b, i);
        for r in 0..3 {
            aty[r] += f[r] * y;
            for c in 0..3 {
                ata[r][c] += f[r] * f[c];
            }
        }
        mean += y;
    }
    mean /= samples.len() as f64;
    // Tiny ridge toward the sample mean keeps levels with no support defined.
    const RIDGE: f64 = 1e-9;
    for r in 0..3 {
        ata[r][r] += RIDGE;
        aty[r] += RIDGE * mean;
    }
    let x = solve3(ata, aty);
    let mut levels = [x[0], x[1], x[2]].map(|v| v.clamp(0.0, 1.0));
    if b == 0 {
        levels[0] = levels[1];
    }
    if b == n - 1 {
        levels[2] = levels[1];
    }
    isotonic3(&mut levels);
    TwoSegmentParams {
        breakpoint: b,
        initial: levels[0],
        p_break: levels[1],
        terminal: levels[2],
    }
}

fn solve3(mut a: [[f64; 3]; 3], mut y: [f64; 3]) -> [f64; 3] {
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&r, &s| crate::math::abs(a[r][col]).total_cmp(&crate::math::abs(a[s][col])))
            .unwrap();
        a.swap(col, pivot);
        y.swap(col, pivot);
        let d = a[col][col];
        for row in col + 1..3 {
            let f = a[row][col] / d;
            for c in col..3 {
                a[row][c] -= f * a[col][c];
            }
            y[row] -= f * y[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut acc = y[row];
        for c in row + 1..3 {
            acc -= a[row][c] * x[c];
        }
        x[row] = acc / a[row][row];
    }
    x
}

// Pool-adjacent-violators on three equally weighted levels.
fn isotonic3(v: &mut [f64; 3]) {
    for _ in 0..2 {
        for k in 0..2 {
            if v[k] > v[k + 1] {
                let m = (v[k] + v[k + 1]) / 2.0;
                v[k] = m;
                v[k + 1] = m;
            }
        }
    }
    if v[0] > v[1] || v[1] > v[2] {
        let m = (v[0] + v[1] + v[2]) / 3.0;
        *v = [m; 3];
    }
}
