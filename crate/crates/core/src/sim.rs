//! Two-peer exchange simulator.
//!
//! Peer B sends a BM every `period` chunk-times and peer A sends `tau` later,
//! so A->B messages see a counterpart map `tau` old and B->A messages one
//! `period - tau` old. Every selected scheme encodes the same snapshots, the
//! receiving side decodes them, and codec state equality is checked after
//! every message.
//!
//! Besides payload sizes, each message gets an *ideal code length*: the sum of
//! `-log2 Pr(bit)` over its payload under the true fill model, where a
//! location the sender last reported unfilled at age `a'` has fill
//! probability `q(a', a)` and any other location `p_a`. Its mean converges to
//! the analytic limits in [`crate::entropy`].

use alloc::collections::{BTreeMap, VecDeque};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::bitmap::{BufferMap, ChunkId, PeerBufferState};
use crate::codec::{
    sbms_decode, sbms_encode, CodecError, CompressedBM, PpbmsSession, Scheme, SpbmsDecoder,
    SpbmsEncoder, DEFAULT_ARCHIVE_DEPTH,
};
use crate::coders::{arith_encode, rle_encode, HuffmanModel};
use crate::fill::SCurve;
use crate::math;
use crate::trace::{validate, TraceError, TraceRecord};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("no measured rounds")]
    NoRounds,
    #[error("{stream} message {message}: {source}")]
    Codec {
        stream: String,
        message: u64,
        source: CodecError,
    },
    #[error("{stream} message {message}: invariant broken: {detail}")]
    Invariant {
        stream: String,
        message: u64,
        detail: String,
    },
    #[error("payload bit at chunk {chunk} has probability zero under the fill model")]
    ModelViolation { chunk: ChunkId },
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("PPBMS replay needs exactly two peers, trace has {0}")]
    NeedTwoPeers(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Coder {
    Rle,
    Huffman,
    Arith,
}

impl Coder {
    pub const ALL: [Coder; 3] = [Coder::Rle, Coder::Huffman, Coder::Arith];

    pub fn name(self) -> &'static str {
        match self {
            Self::Rle => "rle",
            Self::Huffman => "huffman",
            Self::Arith => "ac",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub curve: SCurve,
    pub period: usize,
    pub tau: usize,
    /// Measured periods after the warm-up.
    pub rounds: u64,
    pub seed: u64,
    pub schemes: Vec<Scheme>,
    pub coders: Vec<Coder>,
    /// How far B's window runs ahead of A's, in chunks.
    pub offset_lag: u32,
    /// Unmeasured lead-in in chunk-times; defaults to the buffer width.
    pub warmup: Option<u64>,
    pub depth: usize,
    /// Keep every measured payload in the result.
    pub keep_payloads: bool,
}

impl SimConfig {
    pub fn new(curve: SCurve, period: usize, tau: usize, rounds: u64, seed: u64) -> Self {
        Self {
            curve,
            period,
            tau,
            rounds,
            seed,
            schemes: alloc::vec![Scheme::Sbms, Scheme::Spbms, Scheme::Ppbms],
            coders: Coder::ALL.to_vec(),
            offset_lag: 0,
            warmup: None,
            depth: DEFAULT_ARCHIVE_DEPTH,
            keep_payloads: false,
        }
    }

    fn check(&self) -> Result<(), SimError> {
        if self.period == 0 || self.period > self.curve.len() {
            return Err(SimError::InvalidConfig("period must be in 1..=n"));
        }
        if self.tau == 0 || self.tau > self.period {
            return Err(SimError::InvalidConfig(
                "tau must satisfy 0 < tau <= period",
            ));
        }
        if self.rounds == 0 {
            return Err(SimError::NoRounds);
        }
        if self.schemes.contains(&Scheme::Resync) {
            return Err(SimError::InvalidConfig(
                "resync is not a scheme to simulate",
            ));
        }
        Ok(())
    }
}

/// Independent fill-delay seeds for peers A and B.
pub fn peer_seeds(seed: u64) -> (u64, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (rng.gen(), rng.gen())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MessageStats {
    pub time: u64,
    pub bits: usize,
    pub ideal_bits: Option<f64>,
    pub rle_bytes: Option<usize>,
    pub huffman_bytes: Option<usize>,
    pub ac_bytes: Option<usize>,
    /// Sender's support-set size after the message.
    pub ss_size: Option<usize>,
}

impl MessageStats {
    pub fn payload_bytes(&self) -> usize {
        self.bits.div_ceil(8)
    }
}

// payload, ideal code length, sender's support-set size
type Sent = (Vec<bool>, Option<f64>, Option<usize>);

/// Measured messages of one scheme in one direction.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamStats {
    pub scheme: Scheme,
    /// `"A->B"` style label.
    pub label: String,
    pub messages: Vec<MessageStats>,
    /// Filled only with [`SimConfig::keep_payloads`].
    pub payloads: Vec<Vec<bool>>,
}

impl StreamStats {
    pub fn summary(&self) -> Summary {
        Summary::of(self.messages.iter())
    }
}

/// Means over a set of messages. Optional fields are `None` when any message
/// lacks the measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub messages: usize,
    pub mean_bits: f64,
    pub std_bits: f64,
    pub mean_ideal_bits: Option<f64>,
    pub mean_payload_bytes: f64,
    pub mean_rle_bytes: Option<f64>,
    pub mean_huffman_bytes: Option<f64>,
    pub mean_ac_bytes: Option<f64>,
    pub total_payload_bytes: u64,
    pub total_ac_bytes: Option<u64>,
}

fn mean_of<'a, I>(msgs: I, f: impl Fn(&MessageStats) -> Option<f64>) -> Option<f64>
where
    I: Iterator<Item = &'a MessageStats>,
{
    let mut sum = 0.0;
    let mut k = 0usize;
    for m in msgs {
        sum += f(m)?;
        k += 1;
    }
    (k > 0).then(|| sum / k as f64)
}

impl Summary {
    pub fn of<'a, I>(msgs: I) -> Self
    where
        I: Iterator<Item = &'a MessageStats> + Clone,
    {
        let k = msgs.clone().count();
        let mean_bits = mean_of(msgs.clone(), |m| Some(m.bits as f64)).unwrap_or(0.0);
        let var = mean_of(msgs.clone(), |m| {
            let d = m.bits as f64 - mean_bits;
            Some(d * d)
        })
        .unwrap_or(0.0);
        Self {
            messages: k,
            mean_bits,
            std_bits: math::sqrt(var),
            mean_ideal_bits: mean_of(msgs.clone(), |m| m.ideal_bits),
            mean_payload_bytes: mean_of(msgs.clone(), |m| Some(m.payload_bytes() as f64))
                .unwrap_or(0.0),
            mean_rle_bytes: mean_of(msgs.clone(), |m| m.rle_bytes.map(|v| v as f64)),
            mean_huffman_bytes: mean_of(msgs.clone(), |m| m.huffman_bytes.map(|v| v as f64)),
            mean_ac_bytes: mean_of(msgs.clone(), |m| m.ac_bytes.map(|v| v as f64)),
            total_payload_bytes: msgs.clone().map(|m| m.payload_bytes() as u64).sum(),
            total_ac_bytes: msgs.map(|m| m.ac_bytes.map(|v| v as u64)).sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub streams: Vec<StreamStats>,
    pub resyncs: u64,
    /// Delayed messages that arrived after a resync superseded them.
    pub stale: u64,
}

impl SimResult {
    pub fn stream(&self, scheme: Scheme, label: &str) -> Option<&StreamStats> {
        self.streams
            .iter()
            .find(|s| s.scheme == scheme && s.label == label)
    }

    /// Summary over every direction of `scheme`.
    pub fn summary(&self, scheme: Scheme) -> Summary {
        Summary::of(
            self.streams
                .iter()
                .filter(|s| s.scheme == scheme)
                .flat_map(|s| s.messages.iter()),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dir {
    AtoB,
    BtoA,
}

impl Dir {
    fn sender(self) -> usize {
        match self {
            Self::AtoB => 0,
            Self::BtoA => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultAction {
    /// Deliver right after the `k`-th later message of the same direction.
    Delay(u32),
    Drop,
}

/// Delivery faults keyed by direction and the sender's message index
/// (0-based, warm-up included).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReorderScript {
    faults: BTreeMap<(u8, u64), FaultAction>,
}

impl ReorderScript {
    pub fn new() -> Self {
        Self::default()
    }

    fn key(dir: Dir, message: u64) -> (u8, u64) {
        (dir.sender() as u8, message)
    }

    pub fn delay(mut self, dir: Dir, message: u64, k: u32) -> Self {
        self.faults
            .insert(Self::key(dir, message), FaultAction::Delay(k));
        self
    }

    pub fn drop_message(mut self, dir: Dir, message: u64) -> Self {
        self.faults
            .insert(Self::key(dir, message), FaultAction::Drop);
        self
    }

    /// Swaps messages `2k` and `2k + 1` for every `k` with `2k + 1 < count`.
    pub fn swap_pairs(mut self, dir: Dir, count: u64) -> Self {
        for m in (0..count.saturating_sub(1)).step_by(2) {
            self = self.delay(dir, m, 1);
        }
        self
    }

    fn get(&self, sender: usize, message: u64) -> Option<FaultAction> {
        self.faults.get(&(sender as u8, message)).copied()
    }
}

// Last unfilled report per location, kept as the report's window offset.
#[derive(Debug, Clone, Default)]
struct ReportTracker {
    last: BTreeMap<ChunkId, ChunkId>,
}

impl ReportTracker {
    fn ideal(
        &mut self,
        curve: &SCurve,
        offset: ChunkId,
        locations: &[ChunkId],
        bits: &[bool],
    ) -> Result<f64, SimError> {
        let n = curve.len() as u64;
        let p = curve.probs();
        let age = |off: ChunkId, l: ChunkId| (off as u64 + n - 1 - l as u64) as usize;
        let mut total = 0.0;
        for (&l, &bit) in locations.iter().zip(bits) {
            let a = age(offset, l);
            let p1 = match self.last.get(&l) {
                Some(&prev) => {
                    let a0 = age(prev, l);
                    if a0 >= a {
                        0.0
                    } else {
                        curve
                            .transition_prob(a0, a)
                            .map_err(|_| SimError::ModelViolation { chunk: l })?
                    }
                }
                None => p[a],
            };
            let pr = if bit { p1 } else { 1.0 - p1 };
            if pr <= 0.0 {
                return Err(SimError::ModelViolation { chunk: l });
            }
            total -= math::log2(pr);
            if bit {
                self.last.remove(&l);
            } else {
                self.last.insert(l, offset);
            }
        }
        self.last = self.last.split_off(&offset);
        Ok(total)
    }
}

fn sbms_ideal(curve: &SCurve, bm: &BufferMap) -> Result<f64, SimError> {
    let p = curve.probs();
    let mut total = 0.0;
    for (pos, &bit) in bm.bits.iter().enumerate() {
        let p1 = p[bm.age_of_position(pos)];
        let pr = if bit { p1 } else { 1.0 - p1 };
        if pr <= 0.0 {
            return Err(SimError::ModelViolation {
                chunk: bm.chunk_at(pos),
            });
        }
        total -= math::log2(pr);
    }
    Ok(total)
}

#[derive(Debug)]
struct Side {
    spbms_enc: SpbmsEncoder,
    // decodes the counterpart's SPBMS stream
    spbms_dec: SpbmsDecoder,
    ppbms: PpbmsSession,
    trackers: [ReportTracker; 2],
    sent: u64,
    // bitmaps of own PPBMS messages by offset, for checking the receiver
    ppbms_sent: BTreeMap<ChunkId, BufferMap>,
}

#[derive(Debug)]
struct Held {
    release_after: u64,
    msg: CompressedBM,
}

#[derive(Debug)]
struct Exchange<'a> {
    n: usize,
    curve: Option<&'a SCurve>,
    schemes: Vec<Scheme>,
    coders: Vec<Coder>,
    labels: [String; 2],
    sides: [Side; 2],
    streams: Vec<StreamStats>,
    script: Option<&'a ReorderScript>,
    held: [VecDeque<Held>; 2],
    resyncs: u64,
}

impl<'a> Exchange<'a> {
    fn new(
        n: usize,
        depth: usize,
        curve: Option<&'a SCurve>,
        schemes: Vec<Scheme>,
        coders: Vec<Coder>,
        labels: [String; 2],
        script: Option<&'a ReorderScript>,
    ) -> Self {
        let side = || Side {
            spbms_enc: SpbmsEncoder::new(n),
            spbms_dec: SpbmsDecoder::new(n),
            ppbms: PpbmsSession::with_depth(n, depth),
            trackers: Default::default(),
            sent: 0,
            ppbms_sent: BTreeMap::new(),
        };
        let mut streams = Vec::new();
        for &scheme in &schemes {
            for label in &labels {
                streams.push(StreamStats {
                    scheme,
                    label: label.clone(),
                    messages: Vec::new(),
                    payloads: Vec::new(),
                });
            }
        }
        Self {
            n,
            curve,
            schemes,
            coders,
            labels,
            sides: [side(), side()],
            streams,
            script,
            held: Default::default(),
            resyncs: 0,
        }
    }

    fn stream_index(&self, scheme: Scheme, sender: usize) -> usize {
        let k = self.schemes.iter().position(|&s| s == scheme).unwrap();
        2 * k + sender
    }

    fn codec_err(&self, sender: usize, source: CodecError) -> SimError {
        SimError::Codec {
            stream: self.labels[sender].clone(),
            message: self.sides[sender].sent,
            source,
        }
    }

    fn invariant(&self, sender: usize, detail: String) -> SimError {
        SimError::Invariant {
            stream: self.labels[sender].clone(),
            message: self.sides[sender].sent,
            detail,
        }
    }

    fn pair(&mut self, sender: usize) -> (&mut Side, &mut Side) {
        let [a, b] = &mut self.sides;
        if sender == 0 {
            (a, b)
        } else {
            (b, a)
        }
    }

    fn send(
        &mut self,
        sender: usize,
        bm: &BufferMap,
        time: u64,
        measured: bool,
    ) -> Result<(), SimError> {
        for k in 0..self.schemes.len() {
            let scheme = self.schemes[k];
            let (payload, ideal, ss_size) = match scheme {
                Scheme::Sbms => self.send_sbms(sender, bm)?,
                Scheme::Spbms => self.send_spbms(sender, bm)?,
                _ => self.send_ppbms(sender, bm)?,
            };
            if measured {
                self.record(scheme, sender, time, payload, ideal, ss_size);
            }
        }
        self.sides[sender].sent += 1;
        Ok(())
    }

    fn send_sbms(&mut self, sender: usize, bm: &BufferMap) -> Result<Sent, SimError> {
        let msg = sbms_encode(bm, self.sides[sender].sent as u16);
        let got = sbms_decode(&msg, self.n).map_err(|e| self.codec_err(sender, e))?;
        if got != *bm {
            return Err(self.invariant(sender, "SBMS round trip differs".to_string()));
        }
        let ideal = self.curve.map(|c| sbms_ideal(c, bm)).transpose()?;
        Ok((msg.payload, ideal, None))
    }

    fn send_spbms(&mut self, sender: usize, bm: &BufferMap) -> Result<Sent, SimError> {
        let curve = self.curve;
        let (tx, rx) = self.pair(sender);
        let locs = tx.spbms_enc.locations_for(bm.offset);
        let encoded = tx.spbms_enc.encode(bm);
        let decoded = encoded.clone().and_then(|m| rx.spbms_dec.decode(&m));
        let same_ss = tx.spbms_enc.support_set() == rx.spbms_dec.support_set();
        let ss_size = tx.spbms_enc.support_set().len();
        let msg = encoded.map_err(|e| self.codec_err(sender, e))?;
        let got = decoded.map_err(|e| self.codec_err(sender, e))?;
        if got != *bm {
            return Err(self.invariant(sender, format!("SPBMS decoded {got:?}, sent {bm:?}")));
        }
        if !same_ss {
            return Err(self.invariant(sender, "SPBMS support sets differ".to_string()));
        }
        let ideal = match curve {
            Some(c) => {
                Some(self.sides[sender].trackers[0].ideal(c, bm.offset, &locs, &msg.payload)?)
            }
            None => None,
        };
        Ok((msg.payload, ideal, Some(ss_size)))
    }

    fn send_ppbms(&mut self, sender: usize, bm: &BufferMap) -> Result<Sent, SimError> {
        let curve = self.curve;
        let index = self.sides[sender].sent;
        let side = &mut self.sides[sender];
        let locs = side.ppbms.locations_for(bm.offset);
        let msg = side.ppbms.encode(bm).map_err(|e| SimError::Codec {
            stream: self.labels[sender].clone(),
            message: index,
            source: e,
        })?;
        let ss_size = side.ppbms.support_set().len();
        side.ppbms_sent.insert(bm.offset, bm.clone());
        let ideal = match curve {
            Some(c) => Some(side.trackers[1].ideal(c, bm.offset, &locs, &msg.payload)?),
            None => None,
        };
        let payload = msg.payload.clone();
        match self.script.and_then(|s| s.get(sender, index)) {
            None => self.deliver(sender, msg, bm)?,
            Some(FaultAction::Drop) => {}
            Some(FaultAction::Delay(k)) => self.held[sender].push_back(Held {
                release_after: index + k as u64,
                msg,
            }),
        }
        while let Some(pos) = self.held[sender]
            .iter()
            .position(|h| h.release_after == index)
        {
            let h = self.held[sender].remove(pos).unwrap();
            self.deliver(sender, h.msg, bm)?;
        }
        Ok((payload, ideal, Some(ss_size)))
    }

    // `now` is the sender's current bitmap, used if a resync is needed.
    fn deliver(
        &mut self,
        sender: usize,
        msg: CompressedBM,
        now: &BufferMap,
    ) -> Result<(), SimError> {
        let (tx, rx) = self.pair(sender);
        let parts = match rx.ppbms.receive(msg) {
            Ok(parts) => parts,
            Err(CodecError::MissingReference { .. }) => {
                let resync = tx.ppbms.full_resync(now);
                tx.ppbms_sent.insert(now.offset, now.clone());
                let parts = resync.and_then(|r| rx.ppbms.receive(r));
                self.resyncs += 1;
                parts.map_err(|e| self.codec_err(sender, e))?
            }
            Err(e) => return Err(self.codec_err(sender, e)),
        };
        let nothing_held = self.held.iter().all(|h| h.is_empty());
        let (tx, rx) = self.pair(sender);
        for part in &parts {
            let Some(orig) = tx.ppbms_sent.get(&part.offset) else {
                return Err(
                    self.invariant(sender, format!("no sent map at offset {}", part.offset))
                );
            };
            if let Some(&(l, bit)) = part
                .reports
                .iter()
                .find(|&&(l, bit)| orig.status(l) != Some(bit))
            {
                return Err(self.invariant(sender, format!("PPBMS reported chunk {l} as {bit}")));
            }
        }
        if let Some(last) = parts.last() {
            tx.ppbms_sent = tx.ppbms_sent.split_off(&last.offset);
        }
        let quiet = nothing_held
            && rx.ppbms.pending() == 0
            && tx.ppbms.pending() == 0
            && tx.ppbms.sent() == rx.ppbms.received()
            && rx.ppbms.sent() == tx.ppbms.received();
        if quiet && tx.ppbms.support_set() != rx.ppbms.support_set() {
            return Err(self.invariant(sender, "PPBMS support sets differ".to_string()));
        }
        Ok(())
    }

    fn record(
        &mut self,
        scheme: Scheme,
        sender: usize,
        time: u64,
        payload: Vec<bool>,
        ideal: Option<f64>,
        ss_size: Option<usize>,
    ) {
        let has = |c| self.coders.contains(&c);
        let rle_bytes =
            has(Coder::Rle).then(|| rle_encode(&payload).map_or(0, |s| s.encoded_len()));
        let ac_bytes =
            has(Coder::Arith).then(|| arith_encode(&payload, None).map_or(0, |b| b.len()));
        let i = self.stream_index(scheme, sender);
        let stream = &mut self.streams[i];
        stream.messages.push(MessageStats {
            time,
            bits: payload.len(),
            ideal_bits: ideal,
            rle_bytes,
            huffman_bytes: None,
            ac_bytes,
            ss_size,
        });
        stream.payloads.push(payload);
    }

    fn finish(mut self, keep_payloads: bool) -> SimResult {
        let huffman = self.coders.contains(&Coder::Huffman);
        for s in &mut self.streams {
            if huffman {
                let runs = s
                    .payloads
                    .iter()
                    .filter_map(|p| rle_encode(p).ok())
                    .flat_map(|r| r.runs);
                let model = HuffmanModel::from_runs(runs).ok();
                for (m, p) in s.messages.iter_mut().zip(&s.payloads) {
                    let bits = model.as_ref().map_or(0, |model| model.encoded_bits(p));
                    m.huffman_bytes = Some(bits.div_ceil(8));
                }
            }
            if !keep_payloads {
                s.payloads = Vec::new();
            }
        }
        let stale = self.sides.iter().map(|s| s.ppbms.stale_discarded()).sum();
        SimResult {
            streams: self.streams,
            resyncs: self.resyncs,
            stale,
        }
    }
}

fn synthetic_labels() -> [String; 2] {
    ["A->B".to_string(), "B->A".to_string()]
}

fn run_schedule(
    config: &SimConfig,
    schemes: Vec<Scheme>,
    script: Option<&ReorderScript>,
) -> Result<SimResult, SimError> {
    config.check()?;
    let n = config.curve.len();
    let (seed_a, seed_b) = peer_seeds(config.seed);
    let mut peers = [
        PeerBufferState::from_curve(0, config.curve.clone(), 0, 0, seed_a),
        PeerBufferState::from_curve(1, config.curve.clone(), 0, config.offset_lag, seed_b),
    ];
    let mut ex = Exchange::new(
        n,
        config.depth,
        Some(&config.curve),
        schemes,
        config.coders.clone(),
        synthetic_labels(),
        script,
    );
    let period = config.period as u64;
    let warmup = config.warmup.unwrap_or(n as u64);
    let first = warmup.div_ceil(period);
    for i in 0..first + config.rounds {
        let measured = i >= first;
        let tb = i * period;
        let ta = tb + config.tau as u64;
        let bm = peers[1].snapshot(tb);
        ex.send(1, &bm, tb, measured)?;
        let bm = peers[0].snapshot(ta);
        ex.send(0, &bm, ta, measured)?;
    }
    Ok(ex.finish(config.keep_payloads))
}

/// Runs every configured scheme over a synthetic stationary exchange.
pub fn run_synthetic(config: &SimConfig) -> Result<SimResult, SimError> {
    run_schedule(config, config.schemes.clone(), None)
}

/// PPBMS exchange with scripted delays and drops. Deliveries go through the
/// archive-resolving receive path; a gap the archive cannot bridge triggers
/// a full resync from the sender, counted in [`SimResult::resyncs`].
pub fn reorder_fault_run(
    config: &SimConfig,
    script: &ReorderScript,
) -> Result<SimResult, SimError> {
    run_schedule(config, alloc::vec![Scheme::Ppbms], Some(script))
}

/// Options for [`run_trace`].
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSimConfig {
    pub schemes: Vec<Scheme>,
    pub coders: Vec<Coder>,
    /// Enables ideal code lengths; must match the trace width.
    pub curve: Option<SCurve>,
    pub depth: usize,
}

impl Default for TraceSimConfig {
    fn default() -> Self {
        Self {
            schemes: alloc::vec![Scheme::Sbms, Scheme::Spbms, Scheme::Ppbms],
            coders: Coder::ALL.to_vec(),
            curve: None,
            depth: DEFAULT_ARCHIVE_DEPTH,
        }
    }
}

/// Replays recorded maps in order, each record being a message from its
/// peer to the other one. Every record is measured.
pub fn run_trace(
    records: &[TraceRecord],
    n: usize,
    config: &TraceSimConfig,
) -> Result<SimResult, SimError> {
    validate(records, n)?;
    if config.schemes.contains(&Scheme::Resync) {
        return Err(SimError::InvalidConfig(
            "resync is not a scheme to simulate",
        ));
    }
    if let Some(c) = &config.curve {
        if c.len() != n {
            return Err(SimError::InvalidConfig(
                "curve width differs from trace width",
            ));
        }
    }
    let mut peers: Vec<&str> = Vec::new();
    for r in records {
        if !peers.contains(&r.peer.as_str()) {
            peers.push(&r.peer);
        }
    }
    if peers.len() > 2 || (peers.len() != 2 && config.schemes.contains(&Scheme::Ppbms)) {
        return Err(SimError::NeedTwoPeers(peers.len()));
    }
    let name = |i: usize| peers.get(i).copied().unwrap_or("*");
    let labels = [
        format!("{}->{}", name(0), name(1)),
        format!("{}->{}", name(1), name(0)),
    ];
    let mut ex = Exchange::new(
        n,
        config.depth,
        config.curve.as_ref(),
        config.schemes.clone(),
        config.coders.clone(),
        labels,
        None,
    );
    for r in records {
        let sender = if r.peer == name(0) { 0 } else { 1 };
        ex.send(sender, &r.bm, r.timestamp, true)?;
    }
    Ok(ex.finish(false))
}
