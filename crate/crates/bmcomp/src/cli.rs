//! `bmcomp` command line.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use bmcomp_core::codec::Scheme;
use bmcomp_core::entropy::{
    calibrate_curve, h_ab, h_ba, h_ppbms, h_sbms, h_spbms, report_grid, AnalysisError, SpbmsAnchor,
    TauPolicy,
};
use bmcomp_core::fill::{fit_two_segment, CurveError, SCurve, TwoSegmentParams};
use bmcomp_core::sim::{run_synthetic, run_trace, Coder, SimConfig, SimError, TraceSimConfig};
use bmcomp_core::trace::generate;
use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::csvout::{self, Limits};
use crate::curvefile::{self, CurveFileError};
use crate::tracefile::{self, Trace, TraceFileError};
use crate::wiredump::{self, DecodeError, Decoded, Dump, DumpError, EncodeError};

pub const DEFAULT_HSBMS: f64 = 77.0;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Internal(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Io { .. } => 1,
            Self::Validation(_) => 2,
            Self::Internal(_) => 3,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

impl From<TraceFileError> for CliError {
    fn from(e: TraceFileError) -> Self {
        match e {
            TraceFileError::Io { path, source } => Self::Io { path, source },
            other => Self::Validation(other.to_string()),
        }
    }
}

impl From<CurveFileError> for CliError {
    fn from(e: CurveFileError) -> Self {
        match e {
            CurveFileError::Io { path, source } => Self::Io { path, source },
            other => Self::Validation(other.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::InvalidConfig(_) | SimError::NoRounds | SimError::NeedTwoPeers(_) => {
                Self::Usage(e.to_string())
            }
            SimError::Trace(_) | SimError::ModelViolation { .. } => Self::Validation(e.to_string()),
            SimError::Codec { .. } | SimError::Invariant { .. } => Self::Internal(e.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Calibration { .. } => Self::Validation(e.to_string()),
            other => Self::Usage(other.to_string()),
        }
    }
}

impl From<DumpError> for CliError {
    fn from(e: DumpError) -> Self {
        Self::Validation(format!("malformed dump: {e}"))
    }
}

impl From<DecodeError> for CliError {
    fn from(e: DecodeError) -> Self {
        match e {
            DecodeError::NeedLocalTrace(_)
            | DecodeError::NeedTwoPeers(..)
            | DecodeError::UnknownLocal(_) => Self::Usage(e.to_string()),
            other => Self::Validation(other.to_string()),
        }
    }
}

impl From<EncodeError> for CliError {
    fn from(e: EncodeError) -> Self {
        match e {
            EncodeError::NeedTwoPeers(..) | EncodeError::TooManyPeers(_) | EncodeError::Resync => {
                Self::Usage(e.to_string())
            }
            other => Self::Validation(other.to_string()),
        }
    }
}

/// Buffer-map compression analysis, simulation and codec tooling.
#[derive(Debug, Parser)]
#[command(name = "bmcomp", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Information quantity of every scheme over a T x tau grid, as CSV.
    Analyze(AnalyzeArgs),
    /// Two-peer exchange simulation (synthetic, or replaying --trace), as CSV.
    Simulate(SimulateArgs),
    /// Encode a trace file into a binary wire dump.
    Encode(EncodeArgs),
    /// Decode a wire dump back into a trace file.
    Decode(DecodeArgs),
    /// Write a synthetic two-peer trace drawn from the fill model.
    GenTrace(GenTraceArgs),
    /// Fit a two-segment curve to samples or to a trace's fill frequencies.
    FitCurve(FitCurveArgs),
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    /// Curve file (CSV `age,p`). Without it a curve is calibrated.
    #[arg(long, conflicts_with = "calibrate_hsbms")]
    pub curve: Option<PathBuf>,
    /// Target SBMS information per message for the calibrated curve [default: 77]
    #[arg(long = "calibrate-hsbms")]
    pub calibrate_hsbms: Option<f64>,
    /// SPBMS anchor `T:bits` choosing among calibrated curves, or `none`
    #[arg(long, default_value = "8:28")]
    pub anchor: String,
    /// Buffer width in chunks
    #[arg(long, default_value_t = 456)]
    pub n: usize,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub curve: CurveArgs,
    /// Sending periods: comma list and/or `start:end:step` ranges
    #[arg(long = "T", default_value = "8,16,24,32")]
    pub periods: String,
    /// Delays: comma list, `sweep` (every 1..=T) or `min` (the minimizing tau)
    #[arg(long, default_value = "min")]
    pub tau: String,
    /// Output file [default: stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub curve: CurveArgs,
    /// Sending period in chunk-times
    #[arg(long = "T", default_value_t = 20)]
    pub period: usize,
    /// Delay of A's messages after B's, 0 < tau <= T
    #[arg(long, default_value_t = 5)]
    pub tau: usize,
    /// Measured periods after a warm-up of one buffer width
    #[arg(long, default_value_t = 10_000)]
    pub rounds: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Schemes: comma list of sbms, spbms, ppbms
    #[arg(long, default_value = "sbms,spbms,ppbms")]
    pub scheme: String,
    /// Post-coders: comma list of rle, huffman, ac
    #[arg(long, default_value = "rle,huffman,ac")]
    pub coder: String,
    /// Replay this trace instead of a synthetic exchange
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[arg(long)]
    pub trace: PathBuf,
    /// sbms, spbms or ppbms (ppbms needs a two-peer trace)
    #[arg(long, default_value = "spbms")]
    pub scheme: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    /// Wire dump written by `encode`
    pub dump: PathBuf,
    /// The local peer's own trace; required for ppbms dumps, whose output
    /// lists what the local peer learned about the remote one
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenTraceArgs {
    #[command(flatten)]
    pub curve: CurveArgs,
    #[arg(long = "T", default_value_t = 20)]
    pub period: usize,
    #[arg(long, default_value_t = 5)]
    pub tau: usize,
    #[arg(long, default_value_t = 1000)]
    pub rounds: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitCurveArgs {
    /// Samples to fit (CSV `age,p`, any subset of ages)
    #[arg(long, conflicts_with = "trace", required_unless_present = "trace")]
    pub curve: Option<PathBuf>,
    /// Fit the per-age fill frequencies of this trace instead
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Curve width for sample files [default: largest sampled age + 1]
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn write_out(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, bytes).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|source| CliError::Io {
                path: "<stdout>".to_string(),
                source,
            }),
    }
}

fn parse_anchor(s: &str) -> Result<Option<SpbmsAnchor>, CliError> {
    if s == "none" {
        return Ok(None);
    }
    let bad = || usage(format!("bad --anchor {s:?}, expected T:bits or none"));
    let (t, bits) = s.split_once(':').ok_or_else(bad)?;
    Ok(Some(SpbmsAnchor {
        period: t.parse().map_err(|_| bad())?,
        bits: bits.parse().map_err(|_| bad())?,
    }))
}

fn curve_err(e: CurveError) -> CliError {
    CliError::Validation(e.to_string())
}

/// The curve and, when calibrated, its parameters.
pub fn resolve_curve(args: &CurveArgs) -> Result<(SCurve, Option<TwoSegmentParams>), CliError> {
    if let Some(path) = &args.curve {
        return Ok((curvefile::read_curve(path)?, None));
    }
    if args.n == 0 {
        return Err(usage("--n must be positive"));
    }
    let target = args.calibrate_hsbms.unwrap_or(DEFAULT_HSBMS);
    let params = calibrate_curve(target, args.n, parse_anchor(&args.anchor)?)?;
    let curve = SCurve::from_two_segment(args.n, &params).map_err(curve_err)?;
    Ok((curve, Some(params)))
}

fn parse_list(s: &str, what: &str) -> Result<Vec<usize>, CliError> {
    let bad = |part: &str| usage(format!("bad {what} entry {part:?}"));
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let nums: Vec<usize> = part
            .split(':')
            .map(|x| x.trim().parse().map_err(|_| bad(part)))
            .collect::<Result<_, _>>()?;
        match nums[..] {
            [v] => out.push(v),
            [a, b] => out.extend(a..=b),
            [a, b, step] if step > 0 => out.extend((a..=b).step_by(step)),
            _ => return Err(bad(part)),
        }
    }
    if out.is_empty() {
        return Err(usage(format!("empty {what} list")));
    }
    Ok(out)
}

fn parse_schemes(s: &str) -> Result<Vec<Scheme>, CliError> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let scheme = parse_scheme(part)?;
        if !out.contains(&scheme) {
            out.push(scheme);
        }
    }
    if out.is_empty() {
        return Err(usage("empty --scheme list"));
    }
    out.sort();
    Ok(out)
}

fn parse_scheme(s: &str) -> Result<Scheme, CliError> {
    match s.to_ascii_lowercase().as_str() {
        "sbms" => Ok(Scheme::Sbms),
        "spbms" => Ok(Scheme::Spbms),
        "ppbms" => Ok(Scheme::Ppbms),
        _ => Err(usage(format!("unknown scheme {s:?}"))),
    }
}

fn parse_coders(s: &str) -> Result<Vec<Coder>, CliError> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let coder = match part.to_ascii_lowercase().as_str() {
            "rle" | "rl" => Coder::Rle,
            "huffman" => Coder::Huffman,
            "ac" | "arith" => Coder::Arith,
            _ => return Err(usage(format!("unknown coder {part:?}"))),
        };
        if !out.contains(&coder) {
            out.push(coder);
        }
    }
    Ok(out)
}

fn check_exchange(period: usize, tau: usize, n: usize) -> Result<(), CliError> {
    if period == 0 || period > n {
        return Err(usage(format!("--T must be in 1..={n}, got {period}")));
    }
    if tau == 0 || tau > period {
        return Err(usage(format!(
            "--tau must satisfy 0 < tau <= T, got tau={tau}, T={period}"
        )));
    }
    Ok(())
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<String, CliError> {
    let periods = parse_list(&args.periods, "--T")?;
    let policy = match args.tau.trim() {
        "min" => TauPolicy::Min,
        "sweep" => TauPolicy::Sweep,
        list => TauPolicy::Fixed(parse_list(list, "--tau")?),
    };
    let (curve, _) = resolve_curve(&args.curve)?;
    let report = report_grid(&curve, &periods, &policy)?;
    Ok(csvout::report_csv(&report))
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<String, CliError> {
    check_exchange(args.period, args.tau, usize::MAX)?;
    let schemes = parse_schemes(&args.scheme)?;
    let coders = parse_coders(&args.coder)?;
    if let Some(path) = &args.trace {
        let trace = tracefile::parse(path)?;
        let explicit = args.curve.curve.is_some() || args.curve.calibrate_hsbms.is_some();
        let curve = if explicit {
            let (c, _) = resolve_curve(&CurveArgs {
                n: trace.n,
                curve: args.curve.curve.clone(),
                calibrate_hsbms: args.curve.calibrate_hsbms,
                anchor: args.curve.anchor.clone(),
            })?;
            Some(c)
        } else {
            None
        };
        let config = TraceSimConfig {
            schemes,
            coders,
            curve,
            ..TraceSimConfig::default()
        };
        let records = bmcomp_core::trace::dedupe(trace.records);
        let result = run_trace(&records, trace.n, &config)?;
        return Ok(csvout::sim_csv(&result, trace.n, None));
    }
    let (curve, _) = resolve_curve(&args.curve)?;
    let n = curve.len();
    check_exchange(args.period, args.tau, n)?;
    if args.rounds == 0 {
        return Err(usage("--rounds must be at least 1"));
    }
    let limits = Limits {
        sbms: h_sbms(&curve),
        spbms: h_spbms(&curve, args.period)?,
        ppbms: h_ppbms(&curve, args.period, args.tau)?,
        ppbms_ab: h_ab(&curve, args.period, args.tau)?,
        ppbms_ba: h_ba(&curve, args.period, args.tau)?,
    };
    let mut config = SimConfig::new(curve, args.period, args.tau, args.rounds, args.seed);
    config.schemes = schemes;
    config.coders = coders;
    let result = run_synthetic(&config)?;
    Ok(csvout::sim_csv(&result, n, Some(&limits)))
}

pub fn cmd_encode(args: &EncodeArgs) -> Result<Vec<u8>, CliError> {
    let scheme = parse_scheme(&args.scheme)?;
    let trace = tracefile::parse(&args.trace)?;
    if trace.records.is_empty() {
        return Err(usage("trace has no records"));
    }
    let dump = wiredump::encode_trace(&trace, scheme)?;
    dump.to_bytes().map_err(|e| {
        CliError::Internal(format!("encoded message does not fit the wire format: {e}"))
    })
}

pub fn cmd_decode(args: &DecodeArgs) -> Result<String, CliError> {
    let bytes = fs::read(&args.dump).map_err(|source| CliError::Io {
        path: args.dump.display().to_string(),
        source,
    })?;
    let dump = Dump::from_bytes(&bytes)?;
    let local = args.trace.as_deref().map(tracefile::parse).transpose()?;
    Ok(match wiredump::decode_dump(&dump, local.as_ref())? {
        Decoded::Full(trace) => tracefile::write_string(&trace),
        Decoded::Partial { n, maps } => wiredump::write_partial(n, &maps),
    })
}

pub fn cmd_gen_trace(args: &GenTraceArgs) -> Result<String, CliError> {
    check_exchange(args.period, args.tau, usize::MAX)?;
    let (curve, _) = resolve_curve(&args.curve)?;
    check_exchange(args.period, args.tau, curve.len())?;
    let records = generate(&curve, args.period, args.tau, args.rounds, args.seed);
    Ok(tracefile::write_string(&Trace {
        n: curve.len(),
        records,
    }))
}

/// Per-age fill frequency over every record of a trace.
pub fn trace_fill_frequencies(trace: &Trace) -> Vec<(usize, f64)> {
    let mut ones = vec![0u64; trace.n];
    for r in &trace.records {
        for (pos, &b) in r.bm.bits.iter().enumerate() {
            if b {
                ones[r.bm.age_of_position(pos)] += 1;
            }
        }
    }
    let total = trace.records.len().max(1) as f64;
    ones.iter()
        .enumerate()
        .map(|(age, &k)| (age, k as f64 / total))
        .collect()
}

pub fn cmd_fit_curve(args: &FitCurveArgs) -> Result<String, CliError> {
    let (samples, n) = match (&args.trace, &args.curve) {
        (Some(path), _) => {
            let trace = tracefile::parse(path)?;
            if args.n.is_some_and(|n| n != trace.n) {
                return Err(usage("--n differs from the trace width"));
            }
            let samples = if trace.records.is_empty() {
                Vec::new()
            } else {
                trace_fill_frequencies(&trace)
            };
            (samples, trace.n)
        }
        (None, Some(path)) => {
            let samples = curvefile::read_samples(path)?;
            let n = args
                .n
                .unwrap_or_else(|| samples.iter().map(|s| s.0 + 1).max().unwrap_or(0));
            (samples, n)
        }
        (None, None) => return Err(usage("fit-curve needs --curve or --trace")),
    };
    let params = fit_two_segment(&samples, n).map_err(|e| match e {
        CurveError::InsufficientData(_) => CliError::Validation(format!("insufficient data: {e}")),
        other => curve_err(other),
    })?;
    let curve = SCurve::from_two_segment(n, &params).map_err(curve_err)?;
    Ok(curvefile::write_string(&curve, Some(&params)))
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Analyze(a) => write_out(a.out.as_deref(), cmd_analyze(a)?.as_bytes()),
        Command::Simulate(a) => write_out(a.out.as_deref(), cmd_simulate(a)?.as_bytes()),
        Command::Encode(a) => write_out(Some(&a.out), &cmd_encode(a)?),
        Command::Decode(a) => write_out(a.out.as_deref(), cmd_decode(a)?.as_bytes()),
        Command::GenTrace(a) => write_out(a.out.as_deref(), cmd_gen_trace(a)?.as_bytes()),
        Command::FitCurve(a) => write_out(a.out.as_deref(), cmd_fit_curve(a)?.as_bytes()),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            let kind = match e.exit_code() {
                1 => "usage error",
                2 => "validation error",
                _ => "internal error",
            };
            eprintln!("bmcomp: {kind}: {e}");
            e.exit_code()
        }
    }
}
