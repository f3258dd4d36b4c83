//! Information-quantity limits of the BM schemes over an S-curve.
//!
//! All quantities are in bits per message and use age indexing (0 = newest).
//! With period `T` a message appends `T` new positions; a position of age
//! `a >= T` was already in the sender's previous message at age `a - T`.
//!
//! - SBMS codes every position independently: `sum h(p_a)`.
//! - SPBMS only codes positions still unfilled at the previous report, whose
//!   fill law is the conditional `q(a - T, a)`.
//! - PPBMS further drops positions the counterpart announced filled in its
//!   latest message, sent `lag` chunk-times before. For the pair A, B with B
//!   sending at `iT` and A at `iT + tau`, A->B has lag `tau` and B->A has lag
//!   `T - tau`.

use alloc::vec::Vec;

use thiserror::Error;

use crate::fill::{SCurve, TwoSegmentParams};
use crate::math;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("invalid exchange parameters: {0}")]
    InvalidParams(&'static str),
    #[error("period T = {period} exceeds buffer width {n}")]
    PeriodTooLong { period: usize, n: usize },
    #[error("exchange delay tau = {tau} must satisfy 0 < tau <= T = {period}")]
    BadDelay { period: usize, tau: usize },
    #[error("counterpart curve width {got} differs from sender width {expected}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("cannot calibrate a curve of width {n} to H_SBMS = {target} bits")]
    Calibration { target: f64, n: usize },
}

/// BM sending period `T`, exchange delay `tau` and buffer width `n`, all in
/// chunk-time units.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExchangeParams {
    pub period: usize,
    pub tau: usize,
    pub n: usize,
}

impl ExchangeParams {
    pub fn new(period: usize, tau: usize, n: usize) -> Result<Self, AnalysisError> {
        if period == 0 {
            return Err(AnalysisError::InvalidParams("period must be positive"));
        }
        if period > n {
            return Err(AnalysisError::PeriodTooLong { period, n });
        }
        if tau == 0 || tau > period {
            return Err(AnalysisError::BadDelay { period, tau });
        }
        Ok(Self { period, tau, n })
    }
}

/// Binary entropy in bits, with `0 log 0 = 0`.
pub fn h_binary(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * math::log2(p) - (1.0 - p) * math::log2(1.0 - p)
    }
}

pub fn h_sbms(curve: &SCurve) -> f64 {
    curve.probs().iter().map(|&p| h_binary(p)).sum()
}

// Entropy of the fill status at age `a` given it was unfilled at age `prev`,
// weighted by the probability of having been unfilled.
fn conditional_term(p: &[f64], prev: usize, a: usize) -> f64 {
    let unfilled = 1.0 - p[prev];
    if unfilled <= 0.0 {
        return 0.0;
    }
    let q = ((p[a] - p[prev]) / unfilled).clamp(0.0, 1.0);
    unfilled * h_binary(q)
}

pub fn h_spbms(curve: &SCurve, period: usize) -> Result<f64, AnalysisError> {
    if period == 0 {
        return Err(AnalysisError::InvalidParams("period must be positive"));
    }
    let p = curve.probs();
    let n = p.len();
    let t = period.min(n);
    let appended: f64 = p[..t].iter().map(|&x| h_binary(x)).sum();
    let updated: f64 = (t..n).map(|a| conditional_term(p, a - t, a)).sum();
    Ok(appended + updated)
}

/// One PPBMS direction with separate sender and counterpart curves.
///
/// `lag` is how long before this message the counterpart sent its latest
/// message (`0 <= lag <= period`). With a counterpart that never fills this
/// reduces to [`h_spbms`].
pub fn h_directed(
    sender: &SCurve,
    counterpart: &SCurve,
    period: usize,
    lag: usize,
) -> Result<f64, AnalysisError> {
    let p = sender.probs();
    let c = counterpart.probs();
    let n = p.len();
    if c.len() != n {
        return Err(AnalysisError::WidthMismatch {
            expected: n,
            got: c.len(),
        });
    }
    if period == 0 {
        return Err(AnalysisError::InvalidParams("period must be positive"));
    }
    if period > n {
        return Err(AnalysisError::PeriodTooLong { period, n });
    }
    if lag > period {
        return Err(AnalysisError::BadDelay { period, tau: lag });
    }
    let complete: f64 = p[..lag].iter().map(|&x| h_binary(x)).sum();
    let partial: f64 = (lag..period)
        .map(|a| (1.0 - c[a - lag]) * h_binary(p[a]))
        .sum();
    let updated: f64 = (period..n)
        .map(|a| (1.0 - c[a - lag]) * conditional_term(p, a - period, a))
        .sum();
    Ok(complete + partial + updated)
}

/// A->B direction: the counterpart's latest message is `tau` old.
pub fn h_ab(curve: &SCurve, period: usize, tau: usize) -> Result<f64, AnalysisError> {
    ExchangeParams::new(period, tau, curve.len())?;
    h_directed(curve, curve, period, tau)
}

/// B->A direction: the counterpart's latest message is `T - tau` old.
pub fn h_ba(curve: &SCurve, period: usize, tau: usize) -> Result<f64, AnalysisError> {
    ExchangeParams::new(period, tau, curve.len())?;
    h_directed(curve, curve, period, period - tau)
}

pub fn h_ppbms(curve: &SCurve, period: usize, tau: usize) -> Result<f64, AnalysisError> {
    Ok((h_ab(curve, period, tau)? + h_ba(curve, period, tau)?) / 2.0)
}

/// Bits per chunk-time of a scheme sending `bits` every `period` chunk-times.
pub fn overhead(bits: f64, period: usize) -> Result<f64, AnalysisError> {
    if period == 0 {
        return Err(AnalysisError::InvalidParams("period must be positive"));
    }
    Ok(bits / period as f64)
}

/// Secondary calibration target: `h_spbms(curve, period) ~= bits`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpbmsAnchor {
    pub period: usize,
    pub bits: f64,
}

fn mean_fill(params: &TwoSegmentParams, n: usize) -> f64 {
    (0..n).map(|i| params.at(n, i)).sum::<f64>() / n as f64
}

fn h_sbms_params(params: &TwoSegmentParams, n: usize) -> f64 {
    (0..n).map(|i| h_binary(params.at(n, i))).sum()
}

const SCAN_STEPS: usize = 64;
const BISECT_ROUNDS: usize = 60;

// Largest p_break (scanning down from 1) at which the curve with breakpoint `b`
// reaches `target`.
fn solve_p_break(n: usize, b: usize, target: f64) -> Option<f64> {
    let f = |pb: f64| h_sbms_params(&TwoSegmentParams::new(b, pb), n) - target;
    let mut hi = 1.0;
    let mut f_hi = f(hi);
    if f_hi == 0.0 {
        return Some(hi);
    }
    for k in (0..SCAN_STEPS).rev() {
        let lo = k as f64 / SCAN_STEPS as f64;
        let f_lo = f(lo);
        if f_lo == 0.0 {
            return Some(lo);
        }
        if (f_lo < 0.0) != (f_hi < 0.0) {
            let (mut a, mut z, f_a) = (lo, hi, f_lo);
            for _ in 0..BISECT_ROUNDS {
                let mid = 0.5 * (a + z);
                if (f(mid) < 0.0) == (f_a < 0.0) {
                    a = mid;
                } else {
                    z = mid;
                }
            }
            return Some(0.5 * (a + z));
        }
        hi = lo;
        f_hi = f_lo;
    }
    None
}

/// Two-segment curve of width `n` with `h_sbms == target_h_sbms`.
///
/// Searches every breakpoint of the standard shape (0 at age 0, 1 at the
/// oldest age) and solves `p_break` by bisection. Curves whose window is on
/// average at least half buffered are preferred; the others are only used
/// when no such curve exists. Among the admissible curves, `anchor` picks the
/// one whose SPBMS limit is closest to the anchor; without an anchor the
/// smallest breakpoint wins. Targets the standard shape cannot reach fall
/// back to a flat curve `p <= 0.5`.
pub fn calibrate_curve(
    target_h_sbms: f64,
    n: usize,
    anchor: Option<SpbmsAnchor>,
) -> Result<TwoSegmentParams, AnalysisError> {
    let fail = AnalysisError::Calibration {
        target: target_h_sbms,
        n,
    };
    if n == 0 || !(0.0..=n as f64).contains(&target_h_sbms) {
        return Err(fail);
    }
    // (sparse window, score)
    let mut best: Option<((bool, f64), TwoSegmentParams)> = None;
    for b in 1..n.saturating_sub(1) {
        let Some(pb) = solve_p_break(n, b, target_h_sbms) else {
            continue;
        };
        let params = TwoSegmentParams::new(b, pb);
        let sparse = mean_fill(&params, n) < 0.5;
        let score = match anchor {
            Some(a) => {
                let curve = SCurve::from_two_segment(n, &params).map_err(|_| fail.clone())?;
                math::abs(h_spbms(&curve, a.period)? - a.bits)
            }
            None => b as f64,
        };
        let key = (sparse, score);
        if best.as_ref().is_none_or(|(k, _)| key < *k) {
            best = Some((key, params));
        }
    }
    if let Some((_, params)) = best {
        return Ok(params);
    }
    // n * h(c) is increasing on [0, 0.5] and spans [0, n].
    let per = target_h_sbms / n as f64;
    let (mut lo, mut hi) = (0.0, 0.5);
    for _ in 0..BISECT_ROUNDS {
        let mid = 0.5 * (lo + hi);
        if h_binary(mid) < per {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c = 0.5 * (lo + hi);
    Ok(TwoSegmentParams {
        breakpoint: 0,
        p_break: c,
        terminal: c,
        initial: c,
    })
}

/// How `tau` is chosen for each period of a report grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TauPolicy {
    /// The listed delays (each must satisfy `0 < tau <= T`).
    Fixed(Vec<usize>),
    /// Every `tau` in `1..=T`.
    Sweep,
    /// The `tau` in `1..=T` minimizing `h_ppbms`. Because the two-way average
    /// is symmetric about `T/2`, `tau = T` gives the `tau -> 0` limit.
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ReportScheme {
    Sbms,
    Spbms,
    PpbmsAb,
    PpbmsBa,
    Ppbms,
}

impl ReportScheme {
    pub fn name(self) -> &'static str {
        match self {
            Self::Sbms => "SBMS",
            Self::Spbms => "SPBMS",
            Self::PpbmsAb => "PPBMS_AB",
            Self::PpbmsBa => "PPBMS_BA",
            Self::Ppbms => "PPBMS",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub scheme: ReportScheme,
    pub period: usize,
    pub tau: usize,
    pub bits_per_msg: f64,
    pub bits_per_chunktime: f64,
    /// `1 - H / H_SBMS`.
    pub gain_vs_sbms: Option<f64>,
    /// `1 - H / H_SPBMS`; not defined for SBMS.
    pub gain_vs_spbms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyReport {
    pub n: usize,
    pub rows: Vec<ReportRow>,
}

fn gain(h: f64, baseline: f64) -> f64 {
    if baseline > 0.0 {
        1.0 - h / baseline
    } else {
        0.0
    }
}

impl EntropyReport {
    /// Mean of `gain_vs_sbms` (or `gain_vs_spbms` when `vs_spbms`) over the
    /// rows of `scheme`.
    pub fn mean_gain(&self, scheme: ReportScheme, vs_spbms: bool) -> Option<f64> {
        let gains: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.scheme == scheme)
            .filter_map(|r| {
                if vs_spbms {
                    r.gain_vs_spbms
                } else {
                    r.gain_vs_sbms
                }
            })
            .collect();
        if gains.is_empty() {
            None
        } else {
            Some(gains.iter().sum::<f64>() / gains.len() as f64)
        }
    }

    pub fn row(&self, scheme: ReportScheme, period: usize) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.scheme == scheme && r.period == period)
    }
}

fn min_tau(curve: &SCurve, period: usize) -> Result<usize, AnalysisError> {
    let mut best = (f64::INFINITY, period);
    for tau in 1..=period {
        let h = h_ppbms(curve, period, tau)?;
        if h < best.0 - 1e-12 {
            best = (h, tau);
        }
    }
    Ok(best.1)
}

/// Evaluates every scheme over `periods` x the delays chosen by `policy`.
pub fn report_grid(
    curve: &SCurve,
    periods: &[usize],
    policy: &TauPolicy,
) -> Result<EntropyReport, AnalysisError> {
    if periods.is_empty() {
        return Err(AnalysisError::InvalidParams("no periods given"));
    }
    let sbms = h_sbms(curve);
    let mut rows = Vec::new();
    for &period in periods {
        let taus = match policy {
            TauPolicy::Fixed(list) => list.clone(),
            TauPolicy::Sweep => (1..=period).collect(),
            TauPolicy::Min => alloc::vec![min_tau(curve, period)?],
        };
        if taus.is_empty() {
            return Err(AnalysisError::InvalidParams("no delays given"));
        }
        let spbms = h_spbms(curve, period)?;
        for tau in taus {
            ExchangeParams::new(period, tau, curve.len())?;
            let ab = h_ab(curve, period, tau)?;
            let ba = h_ba(curve, period, tau)?;
            let entries = [
                (ReportScheme::Sbms, sbms),
                (ReportScheme::Spbms, spbms),
                (ReportScheme::PpbmsAb, ab),
                (ReportScheme::PpbmsBa, ba),
                (ReportScheme::Ppbms, (ab + ba) / 2.0),
            ];
            for (scheme, h) in entries {
                rows.push(ReportRow {
                    scheme,
                    period,
                    tau,
                    bits_per_msg: h,
                    bits_per_chunktime: overhead(h, period)?,
                    gain_vs_sbms: Some(gain(h, sbms)),
                    gain_vs_spbms: (scheme != ReportScheme::Sbms).then(|| gain(h, spbms)),
                });
            }
        }
    }
    Ok(EntropyReport {
        n: curve.len(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        math::abs(a - b) <= tol
    }

    fn random_curve(rng: &mut ChaCha8Rng, n: usize) -> SCurve {
        let mut p: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        p.sort_by(|a, b| a.partial_cmp(b).unwrap());
        SCurve::new(p).unwrap()
    }

    // Direct transcription of the three-part A->B sum with explicit q.
    fn h_ab_oracle(p: &[f64], t: usize, tau: usize) -> f64 {
        let n = p.len();
        let mut total = 0.0;
        for a in 0..n {
            let term = if a < tau {
                h_binary(p[a])
            } else if a < t {
                (1.0 - p[a - tau]) * h_binary(p[a])
            } else {
                let prev = a - t;
                if p[prev] >= 1.0 {
                    0.0
                } else {
                    let q = (p[a] - p[prev]) / (1.0 - p[prev]);
                    (1.0 - p[a - tau]) * (1.0 - p[prev]) * h_binary(q)
                }
            };
            total += term;
        }
        total
    }

    #[test]
    fn binary_entropy_values() {
        assert_eq!(h_binary(0.5), 1.0);
        assert_eq!(h_binary(0.0), 0.0);
        assert_eq!(h_binary(1.0), 0.0);
        // -0.11 log2 0.11 - 0.89 log2 0.89 = 0.499915...
        assert!(close(h_binary(0.11), 0.499_915_8, 1e-6));
    }

    #[test]
    fn sbms_limits() {
        let det = SCurve::new(vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        assert_eq!(h_sbms(&det), 0.0);
        let flat = SCurve::flat(456, 0.5).unwrap();
        assert!(close(h_sbms(&flat), 456.0, 1e-9));
    }

    #[test]
    fn spbms_degenerates_at_full_period() {
        let curve = SCurve::from_two_segment(64, &TwoSegmentParams::new(20, 0.9)).unwrap();
        assert!(close(h_spbms(&curve, 64).unwrap(), h_sbms(&curve), 1e-12));
        let step: Vec<f64> = (0..32).map(|i| if i < 9 { 0.0 } else { 1.0 }).collect();
        let step = SCurve::new(step).unwrap();
        for t in 1..=32 {
            assert_eq!(h_spbms(&step, t).unwrap(), 0.0);
        }
    }

    #[test]
    fn directional_sum_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let n = rng.gen_range(8..80);
            let curve = random_curve(&mut rng, n);
            let t = rng.gen_range(1..=n);
            let tau = rng.gen_range(1..=t);
            let got = h_ab(&curve, t, tau).unwrap();
            assert!(close(got, h_ab_oracle(curve.probs(), t, tau), 1e-9));
        }
    }

    #[test]
    fn mirror_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..100 {
            let n = rng.gen_range(4..100);
            let curve = random_curve(&mut rng, n);
            let t = rng.gen_range(2..=n);
            let tau = rng.gen_range(1..t);
            let ab = h_ab(&curve, t, tau).unwrap();
            let ba = h_ba(&curve, t, t - tau).unwrap();
            assert!(close(ab, ba, 1e-9));
        }
        // Applying the mirror twice at the tau = T endpoint.
        let curve = random_curve(&mut rng, 40);
        let ab = h_ab(&curve, 10, 10).unwrap();
        assert_eq!(ab, h_directed(&curve, &curve, 10, 10).unwrap());
        let ba = h_ba(&curve, 10, 10).unwrap();
        assert_eq!(ba, h_directed(&curve, &curve, 10, 0).unwrap());
    }

    #[test]
    fn deterministic_curve_carries_nothing() {
        let det = SCurve::new((0..50).map(|i| if i < 10 { 0.0 } else { 1.0 }).collect()).unwrap();
        assert_eq!(h_ab(&det, 8, 3).unwrap(), 0.0);
        assert_eq!(h_ba(&det, 8, 3).unwrap(), 0.0);
    }

    #[test]
    fn empty_counterpart_reduces_to_spbms() {
        let curve = SCurve::from_two_segment(100, &TwoSegmentParams::new(30, 0.95)).unwrap();
        let zero = SCurve::flat(100, 0.0).unwrap();
        for t in [1, 5, 20, 100] {
            for lag in 0..=t {
                let h = h_directed(&curve, &zero, t, lag).unwrap();
                assert!(close(h, h_spbms(&curve, t).unwrap(), 1e-9));
            }
        }
    }

    #[test]
    fn parameter_checks() {
        let curve = SCurve::flat(10, 0.5).unwrap();
        assert!(matches!(
            h_ab(&curve, 4, 0),
            Err(AnalysisError::BadDelay { .. })
        ));
        assert!(matches!(
            h_ab(&curve, 4, 5),
            Err(AnalysisError::BadDelay { .. })
        ));
        assert!(matches!(
            h_ab(&curve, 11, 5),
            Err(AnalysisError::PeriodTooLong { .. })
        ));
        assert!(h_spbms(&curve, 0).is_err());
        assert!(overhead(1.0, 0).is_err());
    }

    #[test]
    fn overhead_values() {
        assert_eq!(overhead(77.0, 8).unwrap(), 9.625);
        assert_eq!(overhead(0.0, 8).unwrap(), 0.0);
        for t in 1..100 {
            assert!(overhead(77.0, t + 1).unwrap() < overhead(77.0, t).unwrap());
        }
    }

    #[test]
    fn calibration_hits_target() {
        let params = calibrate_curve(77.0, 456, None).unwrap();
        let curve = SCurve::from_two_segment(456, &params).unwrap();
        assert!(close(h_sbms(&curve), 77.0, 0.5));
        let anchored = calibrate_curve(
            77.0,
            456,
            Some(SpbmsAnchor {
                period: 8,
                bits: 28.0,
            }),
        )
        .unwrap();
        let curve = SCurve::from_two_segment(456, &anchored).unwrap();
        assert!(close(h_sbms(&curve), 77.0, 0.5));
        assert!(close(h_spbms(&curve, 8).unwrap(), 28.0, 1.0));
        assert!(mean_fill(&anchored, 456) >= 0.5);
    }

    #[test]
    fn calibration_extremes() {
        let flat = calibrate_curve(64.0, 64, None).unwrap();
        assert!(close(flat.p_break, 0.5, 1e-6));
        assert!(flat.initial == flat.p_break && flat.terminal == flat.p_break);
        assert!(close(64.0 * h_binary(flat.p_break), 64.0, 1e-9));
        let zero = calibrate_curve(0.0, 64, None).unwrap();
        let curve = SCurve::from_two_segment(64, &zero).unwrap();
        assert!(curve.probs().iter().all(|&p| p == 0.0 || p == 1.0));
        assert!(calibrate_curve(65.0, 64, None).is_err());
        assert!(calibrate_curve(-1.0, 64, None).is_err());
    }

    #[test]
    fn report_grid_layout_and_gains() {
        let curve = SCurve::from_two_segment(120, &TwoSegmentParams::new(30, 0.95)).unwrap();
        let report = report_grid(&curve, &[8, 16], &TauPolicy::Min).unwrap();
        assert_eq!(report.rows.len(), 10);
        for r in &report.rows {
            if let Some(g) = r.gain_vs_sbms {
                assert!((0.0..=1.0).contains(&g));
            }
            if let Some(g) = r.gain_vs_spbms {
                assert!((0.0..=1.0).contains(&g), "{r:?}");
            }
        }
        assert_eq!(
            report,
            report_grid(&curve, &[8, 16], &TauPolicy::Min).unwrap()
        );
        assert!(report_grid(&curve, &[], &TauPolicy::Min).is_err());
        assert!(report_grid(&curve, &[8], &TauPolicy::Fixed(vec![9])).is_err());
        let sweep = report_grid(&curve, &[4], &TauPolicy::Sweep).unwrap();
        assert_eq!(sweep.rows.len(), 20);
    }
}
