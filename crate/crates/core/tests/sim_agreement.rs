//! The simulator's mean ideal code length converges to the analytic limits.

use bmcomp_core::codec::Scheme;
use bmcomp_core::entropy::{h_ab, h_ba, h_sbms, h_spbms};
use bmcomp_core::fill::{SCurve, TwoSegmentParams};
use bmcomp_core::sim::{run_synthetic, SimConfig};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b
}

#[test]
fn ideal_code_length_matches_limits() {
    let curve = SCurve::from_two_segment(96, &TwoSegmentParams::new(24, 0.9)).unwrap();
    let (period, tau) = (8, 3);
    let mut cfg = SimConfig::new(curve.clone(), period, tau, 4000, 21);
    cfg.coders.clear();
    let res = run_synthetic(&cfg).unwrap();
    let ideal = |scheme, label| {
        res.stream(scheme, label)
            .unwrap()
            .summary()
            .mean_ideal_bits
            .unwrap()
    };
    let sbms = h_sbms(&curve);
    let spbms = h_spbms(&curve, period).unwrap();
    assert!(rel(ideal(Scheme::Sbms, "A->B"), sbms) < 0.03);
    assert!(rel(ideal(Scheme::Spbms, "A->B"), spbms) < 0.03);
    assert!(rel(ideal(Scheme::Spbms, "B->A"), spbms) < 0.03);
    assert!(
        rel(
            ideal(Scheme::Ppbms, "A->B"),
            h_ab(&curve, period, tau).unwrap()
        ) < 0.03
    );
    assert!(
        rel(
            ideal(Scheme::Ppbms, "B->A"),
            h_ba(&curve, period, tau).unwrap()
        ) < 0.03
    );
}

#[test]
fn offset_lag_keeps_codecs_consistent() {
    let curve = SCurve::from_two_segment(64, &TwoSegmentParams::new(10, 0.8)).unwrap();
    for lag in [1, 7, 63, 64, 200] {
        let mut cfg = SimConfig::new(curve.clone(), 6, 2, 200, lag as u64);
        cfg.offset_lag = lag;
        run_synthetic(&cfg).unwrap();
    }
}
