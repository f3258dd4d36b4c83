use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bmcomp::tracefile;
use bmcomp::wiredump::Dump;
use bmcomp_core::trace::dedupe;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn bmcomp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bmcomp"))
        .args(args)
        .output()
        .expect("run bmcomp")
}

fn ok(args: &[&str]) -> String {
    let out = bmcomp(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn column(csv: &str, scheme: &str, col: usize) -> Vec<f64> {
    csv.lines()
        .filter(|l| l.split(',').next() == Some(scheme))
        .map(|l| l.split(',').nth(col).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn analyze_default_grid() {
    let csv = ok(&["analyze"]);
    assert_eq!(csv.lines().count(), 1 + 4 * 5);
    let sbms = column(&csv, "SBMS", 3);
    assert_eq!(sbms.len(), 4);
    for h in &sbms {
        assert!((h - 77.0).abs() <= 0.5, "SBMS row {h}");
        assert_eq!(*h, sbms[0]);
    }
    let periods = column(&csv, "SBMS", 1);
    assert_eq!(periods, [8.0, 16.0, 24.0, 32.0]);
}

#[test]
fn analyze_period_sweep_is_nondecreasing() {
    let csv = ok(&["analyze", "--T", "8:400:8"]);
    for scheme in ["SPBMS", "PPBMS", "PPBMS_AB", "PPBMS_BA"] {
        let h = column(&csv, scheme, 3);
        assert_eq!(h.len(), 50);
        assert!(h.windows(2).all(|w| w[0] <= w[1] + 1e-9), "{scheme}");
    }
}

#[test]
fn analyze_usage_errors() {
    assert_eq!(code(&bmcomp(&["analyze", "--T", ""])), 1);
    assert_eq!(code(&bmcomp(&["analyze", "--T", "8", "--tau", "9"])), 1);
    assert_eq!(
        code(&bmcomp(&[
            "analyze",
            "--curve",
            "x.csv",
            "--calibrate-hsbms",
            "70"
        ])),
        1
    );
    let out = bmcomp(&["analyze", "--n", "50", "--calibrate-hsbms", "60"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("calibrat"));
}

#[test]
fn analyze_with_curve_file() {
    let curve = fixture("curve64.csv");
    let csv = ok(&[
        "analyze",
        "--curve",
        curve.to_str().unwrap(),
        "--T",
        "4",
        "--tau",
        "1,2,3,4",
    ]);
    assert_eq!(csv.lines().count(), 1 + 4 * 5);
}

#[test]
fn simulate_is_deterministic() {
    let args = [
        "simulate",
        "--n",
        "64",
        "--calibrate-hsbms",
        "20",
        "--anchor",
        "none",
        "--T",
        "8",
        "--tau",
        "3",
        "--rounds",
        "300",
        "--seed",
        "9",
    ];
    let a = ok(&args);
    assert_eq!(a, ok(&args));
    let mut other = args;
    other[14] = "10";
    assert_ne!(a, ok(&other));
}

#[test]
fn simulate_usage_errors() {
    assert_eq!(code(&bmcomp(&["simulate", "--T", "4", "--tau", "5"])), 1);
    assert_eq!(
        code(&bmcomp(&[
            "simulate",
            "--rounds",
            "0",
            "--n",
            "64",
            "--calibrate-hsbms",
            "20"
        ])),
        1
    );
    assert_eq!(code(&bmcomp(&["simulate", "--scheme", "zip"])), 1);
}

#[test]
fn simulate_trace_matches_golden() {
    let trace = fixture("synthetic.tsv");
    let curve = fixture("curve64.csv");
    let csv = ok(&[
        "simulate",
        "--trace",
        trace.to_str().unwrap(),
        "--curve",
        curve.to_str().unwrap(),
    ]);
    assert_eq!(
        csv,
        std::fs::read_to_string(fixture("synthetic_sim.csv")).unwrap()
    );
}

#[test]
fn encode_decode_golden() {
    let dir = tempfile::tempdir().unwrap();
    let trace = fixture("synthetic.tsv");
    let dump = dir.path().join("out.bin");
    ok(&[
        "encode",
        "--trace",
        trace.to_str().unwrap(),
        "--scheme",
        "spbms",
        "--out",
        dump.to_str().unwrap(),
    ]);
    assert_eq!(
        std::fs::read(&dump).unwrap(),
        std::fs::read(fixture("synthetic.spbms.bin")).unwrap()
    );
    let back = ok(&["decode", dump.to_str().unwrap()]);
    assert_eq!(back, std::fs::read_to_string(&trace).unwrap());

    let sbms = dir.path().join("sbms.bin");
    ok(&[
        "encode",
        "--trace",
        trace.to_str().unwrap(),
        "--scheme",
        "sbms",
        "--out",
        sbms.to_str().unwrap(),
    ]);
    assert_eq!(ok(&["decode", sbms.to_str().unwrap()]), back);
}

#[test]
fn desynced_decode_fails() {
    let dir = tempfile::tempdir().unwrap();
    let mut dump =
        Dump::from_bytes(&std::fs::read(fixture("synthetic.spbms.bin")).unwrap()).unwrap();
    dump.frames.remove(10);
    let path = dir.path().join("gap.bin");
    std::fs::write(&path, dump.to_bytes().unwrap()).unwrap();
    let out = bmcomp(&["decode", path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("desync"));

    std::fs::write(&path, b"BMWD\x01").unwrap();
    assert_eq!(code(&bmcomp(&["decode", path.to_str().unwrap()])), 2);
}

#[test]
fn ppbms_needs_both_directions() {
    let dir = tempfile::tempdir().unwrap();
    let full = tracefile::parse(&fixture("synthetic.tsv")).unwrap();
    let mut one = full.clone();
    one.records.retain(|r| r.peer == "A");
    let one_path = dir.path().join("a.tsv");
    tracefile::write(&one_path, &one).unwrap();
    let dump = dir.path().join("p.bin");
    let out = bmcomp(&[
        "encode",
        "--trace",
        one_path.to_str().unwrap(),
        "--scheme",
        "ppbms",
        "--out",
        dump.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);

    let trace = fixture("synthetic.tsv");
    ok(&[
        "encode",
        "--trace",
        trace.to_str().unwrap(),
        "--scheme",
        "ppbms",
        "--out",
        dump.to_str().unwrap(),
    ]);
    assert_eq!(code(&bmcomp(&["decode", dump.to_str().unwrap()])), 1);
    let partial = ok(&[
        "decode",
        dump.to_str().unwrap(),
        "--trace",
        one_path.to_str().unwrap(),
    ]);
    let mut lines = partial.lines();
    assert_eq!(lines.next(), Some("#bmpartial v1 n=64"));
    assert_eq!(
        lines.count(),
        full.records.iter().filter(|r| r.peer == "B").count()
    );
}

#[test]
fn gen_trace_is_deterministic_and_valid() {
    let args = [
        "gen-trace",
        "--n",
        "64",
        "--calibrate-hsbms",
        "20",
        "--T",
        "4",
        "--tau",
        "2",
        "--rounds",
        "50",
    ];
    let a = ok(&args);
    assert_eq!(a, ok(&args));
    let t = tracefile::parse_str(&a).unwrap();
    assert_eq!(t.records.len(), 100);
    assert_eq!(tracefile::write_string(&t), a);
}

#[test]
fn fit_recovers_generating_curve() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.tsv");
    let curve = fixture("curve64.csv");
    ok(&[
        "gen-trace",
        "--curve",
        curve.to_str().unwrap(),
        "--T",
        "1",
        "--tau",
        "1",
        "--rounds",
        "4000",
        "--seed",
        "3",
        "--out",
        trace.to_str().unwrap(),
    ]);
    let fitted = ok(&["fit-curve", "--trace", trace.to_str().unwrap()]);
    let head = fitted.lines().next().unwrap();
    let field = |k: &str| -> f64 {
        head.split_whitespace()
            .find_map(|w| w.strip_prefix(k))
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!((field("breakpoint=") - 16.0).abs() <= 2.0, "{head}");
    assert!((field("p_break=") - 0.9).abs() <= 0.03, "{head}");
    assert!(
        field("initial=") <= 0.03 && field("terminal=") >= 0.97,
        "{head}"
    );
}

#[test]
fn fit_with_two_samples_is_insufficient() {
    let dir = tempfile::tempdir().unwrap();
    let samples = dir.path().join("s.csv");
    std::fs::write(&samples, "age,p\n0,0\n10,1\n").unwrap();
    let out = bmcomp(&[
        "fit-curve",
        "--curve",
        samples.to_str().unwrap(),
        "--n",
        "20",
    ]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("insufficient"));
}

#[test]
fn trace_files() {
    let text = std::fs::read_to_string(fixture("synthetic.tsv")).unwrap();
    let t = tracefile::parse_str(&text).unwrap();
    assert_eq!(tracefile::write_string(&t), text);

    let d = tracefile::parse(&fixture("dedupe10.tsv")).unwrap();
    assert_eq!(d.records.len(), 10);
    let kept: Vec<u64> = dedupe(d.records).iter().map(|r| r.timestamp).collect();
    assert_eq!(kept, [0, 0, 2, 2, 3, 4, 5]);

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.tsv");
    std::fs::write(
        &bad,
        "#bmtrace v1 n=4\n0\tA\tsent\t0\t30\n1\tA\tsent\t1\t10\n",
    )
    .unwrap();
    let out = bmcomp(&["simulate", "--trace", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(out.stdout.is_empty());
}

#[test]
fn help_and_unknown_commands() {
    assert_eq!(code(&bmcomp(&["--help"])), 0);
    assert!(ok(&["simulate", "--help"]).contains("--rounds"));
    assert_eq!(code(&bmcomp(&["frobnicate"])), 1);
    assert_eq!(code(&bmcomp(&[])), 1);
}
