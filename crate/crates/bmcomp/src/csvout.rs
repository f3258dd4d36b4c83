//! CSV renderings of entropy reports and simulation results.
//!
//! Floats are printed with six decimals so equal inputs give byte-identical
//! files.

use bmcomp_core::codec::Scheme;
use bmcomp_core::entropy::EntropyReport;
use bmcomp_core::sim::{SimResult, Summary};

pub const REPORT_COLUMNS: [&str; 7] = [
    "scheme",
    "T",
    "tau",
    "bits_per_msg",
    "bits_per_chunktime",
    "gain_vs_sbms",
    "gain_vs_spbms",
];

/// Sizes are bytes per message.
pub const SIM_COLUMNS: [&str; 10] = [
    "scheme",
    "direction",
    "messages",
    "limit",
    "ideal",
    "basic",
    "basic_std",
    "rle",
    "huffman_after_rle",
    "ac",
];

fn f(v: f64) -> String {
    format!("{v:.6}")
}

fn opt(v: Option<f64>) -> String {
    v.map(f).unwrap_or_default()
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    // writing into a Vec cannot fail
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv output is utf-8")
}

pub fn report_csv(report: &EntropyReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(REPORT_COLUMNS).expect("in-memory csv");
    for r in &report.rows {
        w.write_record([
            r.scheme.name().to_string(),
            r.period.to_string(),
            r.tau.to_string(),
            f(r.bits_per_msg),
            f(r.bits_per_chunktime),
            opt(r.gain_vs_sbms),
            opt(r.gain_vs_spbms),
        ])
        .expect("in-memory csv");
    }
    finish(w)
}

/// Analytic limits in bits per message, one per output row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Limits {
    pub sbms: f64,
    pub spbms: f64,
    pub ppbms: f64,
    pub ppbms_ab: f64,
    pub ppbms_ba: f64,
}

fn sim_row(scheme: &str, direction: &str, s: &Summary, limit: Option<f64>) -> [String; 10] {
    let bytes = |bits: f64| bits / 8.0;
    [
        scheme.to_string(),
        direction.to_string(),
        s.messages.to_string(),
        opt(limit.map(bytes)),
        opt(s.mean_ideal_bits.map(bytes)),
        f(bytes(s.mean_bits)),
        f(bytes(s.std_bits)),
        opt(s.mean_rle_bytes),
        opt(s.mean_huffman_bytes),
        opt(s.mean_ac_bytes),
    ]
}

/// One row for the raw bitmap, one per simulated scheme over both
/// directions, then one per direction for PPBMS.
pub fn sim_csv(result: &SimResult, n: usize, limits: Option<&Limits>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SIM_COLUMNS).expect("in-memory csv");
    let messages: usize = result
        .streams
        .first()
        .map(|first| {
            result
                .streams
                .iter()
                .filter(|s| s.scheme == first.scheme)
                .map(|s| s.messages.len())
                .sum()
        })
        .unwrap_or(0);
    let raw = n as f64 / 8.0;
    w.write_record([
        "ORIGINAL".to_string(),
        "all".to_string(),
        messages.to_string(),
        String::new(),
        String::new(),
        f(raw),
        f(0.0),
        String::new(),
        String::new(),
        String::new(),
    ])
    .expect("in-memory csv");
    let mut schemes: Vec<Scheme> = result.streams.iter().map(|s| s.scheme).collect();
    schemes.dedup();
    for &scheme in &schemes {
        let limit = limits.map(|l| match scheme {
            Scheme::Sbms => l.sbms,
            Scheme::Spbms => l.spbms,
            _ => l.ppbms,
        });
        let name = scheme.name().to_uppercase();
        w.write_record(sim_row(&name, "all", &result.summary(scheme), limit))
            .expect("in-memory csv");
    }
    if schemes.contains(&Scheme::Ppbms) {
        let streams = result.streams.iter().filter(|s| s.scheme == Scheme::Ppbms);
        for s in streams {
            let limit = limits.and_then(|l| match s.label.as_str() {
                "A->B" => Some(l.ppbms_ab),
                "B->A" => Some(l.ppbms_ba),
                _ => None,
            });
            w.write_record(sim_row("PPBMS", &s.label, &s.summary(), limit))
                .expect("in-memory csv");
        }
    }
    finish(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use bmcomp_core::entropy::{report_grid, TauPolicy};
    use bmcomp_core::fill::{SCurve, TwoSegmentParams};
    use bmcomp_core::sim::{run_synthetic, SimConfig};

    #[test]
    fn report_has_fixed_columns() {
        let curve = SCurve::from_two_segment(64, &TwoSegmentParams::new(16, 0.9)).unwrap();
        let report = report_grid(&curve, &[4, 8], &TauPolicy::Min).unwrap();
        let text = report_csv(&report);
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), REPORT_COLUMNS.join(","));
        let sbms: Vec<&str> = text.lines().filter(|l| l.starts_with("SBMS,")).collect();
        assert_eq!(sbms.len(), 2);
        assert!(sbms[0].ends_with(','), "SBMS has no gain over SPBMS");
        assert_eq!(text.lines().count(), 11);
    }

    #[test]
    fn sim_rows() {
        let curve = SCurve::from_two_segment(64, &TwoSegmentParams::new(16, 0.9)).unwrap();
        let res = run_synthetic(&SimConfig::new(curve, 8, 2, 20, 3)).unwrap();
        let text = sim_csv(&res, 64, None);
        let first: Vec<&str> = text.lines().map(|l| l.split(',').next().unwrap()).collect();
        assert_eq!(
            first,
            ["scheme", "ORIGINAL", "SBMS", "SPBMS", "PPBMS", "PPBMS", "PPBMS"]
        );
        assert!(text.contains("ORIGINAL,all,40,,,8.000000,"));
        assert!(text.contains("PPBMS,A->B,20,"));
    }
}
