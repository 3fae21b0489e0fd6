//! Link-level Monte Carlo simulation: channel and noise generation, trial
//! scheduling, error counting, and CSV reporting.
//!
//! Every trial derives its randomness from `(seed, trial index)` alone, so
//! results are byte-identical for a given configuration no matter how many
//! worker threads run the batch. Early stopping on a word-error target is
//! checked only at batch boundaries, which keeps the set of executed trials
//! independent of scheduling as well.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::bicm::{
    conv_encode, deinterleave, frame_to_symbols, interleave, viterbi_decode, CodeConfig,
    FrameConfig,
};
use crate::constellation::{build_qam, Constellation};
use crate::detect::{lord_hard, ml_exhaustive, zf_detect, HardDecision};
use crate::lattice::{realize_channel, realize_observation, ComplexChannel};
use crate::preprocess::{project_observation, summarize_channel, triangularize, AntennaOrdering};
use crate::softbits::lord_llr;
use crate::{Error, Result};

/// Total transmit energy per channel use. The SNR grid is interpreted as
/// `Es/N0` per receive antenna against this constant.
pub const SYMBOL_ENERGY: f64 = 1.0;

/// Trials evaluated between stopping checks. Fixed so that early stopping
/// does not depend on the number of workers.
const TRIALS_PER_BATCH: u64 = 1024;

/// Converts an `Es/N0` value in dB into a total noise variance per receive
/// antenna.
pub fn snr_db_to_n0(snr_db: f64, es: f64) -> f64 {
    es * 10f64.powf(-snr_db / 10.0)
}

/// The random stream for one trial: one generator per `(seed, trial)` pair.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial + 1);
    rng
}

/// Draws an i.i.d. Rayleigh-fading channel with unit average entry power,
/// row by row, real part before imaginary part.
pub fn draw_channel(lr: usize, rng: &mut impl Rng) -> ComplexChannel {
    let spread = 0.5f64.sqrt();
    let entries: Vec<Complex64> = (0..2 * lr)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re * spread, im * spread)
        })
        .collect();
    ComplexChannel::new(lr, entries).expect("gaussian channel entries are finite")
}

/// Draws circularly symmetric complex noise with total variance `n0` per
/// receive antenna.
pub fn draw_noise(lr: usize, n0: f64, rng: &mut impl Rng) -> Vec<Complex64> {
    let spread = (n0 / 2.0).sqrt();
    (0..lr)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re * spread, im * spread)
        })
        .collect()
}

/// Which detector produces the per-use decisions or soft outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorKind {
    Lord,
    Zf,
    MlExhaustive,
}

/// Whether the channel stays fixed for a whole coded frame or changes on
/// every channel use. Uncoded runs draw a fresh channel per trial either way.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FadingMode {
    Fast,
    Block,
}

/// What the demapper hands to the decoder: bit LLRs, or hard decisions
/// encoded as unit pseudo-LLRs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitMetric {
    Soft,
    Hard,
}

/// Uncoded symbol transmission or the convolutionally coded frame chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkMode {
    Uncoded,
    Coded,
}

impl FromStr for DetectorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "lord" => Ok(Self::Lord),
            "zf" => Ok(Self::Zf),
            "ml" => Ok(Self::MlExhaustive),
            other => Err(Error::InvalidConfig(format!("unknown detector {other:?}"))),
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Lord => "lord",
            Self::Zf => "zf",
            Self::MlExhaustive => "ml",
        })
    }
}

impl FromStr for FadingMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "fast" => Ok(Self::Fast),
            "block" => Ok(Self::Block),
            other => Err(Error::InvalidConfig(format!("unknown fading {other:?}"))),
        }
    }
}

impl fmt::Display for FadingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Fast => "fast",
            Self::Block => "block",
        })
    }
}

impl FromStr for BitMetric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "soft" => Ok(Self::Soft),
            "hard" => Ok(Self::Hard),
            other => Err(Error::InvalidConfig(format!("unknown metric {other:?}"))),
        }
    }
}

impl fmt::Display for BitMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Soft => "soft",
            Self::Hard => "hard",
        })
    }
}

impl FromStr for LinkMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "uncoded" => Ok(Self::Uncoded),
            "coded" => Ok(Self::Coded),
            other => Err(Error::InvalidConfig(format!("unknown link {other:?}"))),
        }
    }
}

impl fmt::Display for LinkMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Uncoded => "uncoded",
            Self::Coded => "coded",
        })
    }
}

/// Full description of one simulation campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub order: usize,
    pub detector: DetectorKind,
    pub link: LinkMode,
    pub metric: BitMetric,
    pub lr: usize,
    pub snr_grid_db: Vec<f64>,
    pub trials: u64,
    pub target_errors: u64,
    pub fading: FadingMode,
    pub seed: u64,
    pub workers: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            order: 64,
            detector: DetectorKind::Lord,
            link: LinkMode::Uncoded,
            metric: BitMetric::Soft,
            lr: 2,
            snr_grid_db: vec![10.0, 12.0, 14.0, 16.0, 18.0],
            trials: 100_000,
            target_errors: 100,
            fading: FadingMode::Fast,
            seed: 1,
            workers: 1,
        }
    }
}

impl SimConfig {
    /// Rejects configurations the simulator cannot run.
    pub fn validate(&self) -> Result<()> {
        if ![4, 16, 64].contains(&self.order) {
            return Err(Error::UnsupportedOrder(self.order));
        }
        if self.lr < 2 {
            return Err(Error::TooFewRows(self.lr));
        }
        if self.workers == 0 {
            return Err(Error::InvalidConfig("workers must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be positive".into()));
        }
        if self.target_errors == 0 {
            return Err(Error::InvalidConfig(
                "target word errors must be positive".into(),
            ));
        }
        if self.snr_grid_db.is_empty() {
            return Err(Error::InvalidConfig("empty SNR grid".into()));
        }
        if self.snr_grid_db.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("non-finite SNR point".into()));
        }
        if self.link == LinkMode::Coded
            && self.metric == BitMetric::Soft
            && self.detector != DetectorKind::Lord
        {
            return Err(Error::InvalidConfig(
                "soft bit metrics require the lord detector".into(),
            ));
        }
        Ok(())
    }
}

/// Error counts for one SNR point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub snr_db: f64,
    pub trials: u64,
    pub bits: u64,
    pub bit_errors: u64,
    pub words: u64,
    pub word_errors: u64,
    pub seconds: f64,
    pub detector_failures: u64,
}

impl PointResult {
    /// Bit error rate at this point.
    pub fn ber(&self) -> f64 {
        if self.bits == 0 {
            0.0
        } else {
            self.bit_errors as f64 / self.bits as f64
        }
    }

    /// Word (symbol vector or frame) error rate at this point.
    pub fn wer(&self) -> f64 {
        if self.words == 0 {
            0.0
        } else {
            self.word_errors as f64 / self.words as f64
        }
    }
}

/// Results over a whole SNR grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub points: Vec<PointResult>,
}

impl SimResult {
    /// Writes the results as CSV with a fixed header row.
    pub fn write_csv<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(
            out,
            "snr_db,trials,bits,bit_errors,ber,words,word_errors,wer,seconds"
        )?;
        for p in &self.points {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                p.snr_db,
                p.trials,
                p.bits,
                p.bit_errors,
                p.ber(),
                p.words,
                p.word_errors,
                p.wer(),
                p.seconds
            )?;
        }
        Ok(())
    }
}

/// Per-trial error counts, merged associatively across workers.
#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    words: u64,
    word_errors: u64,
    bits: u64,
    bit_errors: u64,
    failures: u64,
}

impl Tally {
    fn merge(a: Self, b: Self) -> Self {
        Self {
            words: a.words + b.words,
            word_errors: a.word_errors + b.word_errors,
            bits: a.bits + b.bits,
            bit_errors: a.bit_errors + b.bit_errors,
            failures: a.failures + b.failures,
        }
    }
}

fn build_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))
}

fn run_point<F>(cfg: &SimConfig, snr_db: f64, pool: &rayon::ThreadPool, trial: F) -> PointResult
where
    F: Fn(u64) -> Tally + Sync,
{
    let start = Instant::now();
    let mut tally = Tally::default();
    let mut done = 0u64;
    while done < cfg.trials && tally.word_errors < cfg.target_errors {
        let batch = TRIALS_PER_BATCH.min(cfg.trials - done);
        let part = pool.install(|| {
            (done..done + batch)
                .into_par_iter()
                .map(&trial)
                .reduce(Tally::default, Tally::merge)
        });
        tally = Tally::merge(tally, part);
        done += batch;
    }
    PointResult {
        snr_db,
        trials: done,
        bits: tally.bits,
        bit_errors: tally.bit_errors,
        words: tally.words,
        word_errors: tally.word_errors,
        seconds: start.elapsed().as_secs_f64(),
        detector_failures: tally.failures,
    }
}

fn hard_detect(
    detector: DetectorKind,
    h: &ComplexChannel,
    y: &[Complex64],
    c: &Constellation,
) -> Result<HardDecision> {
    match detector {
        DetectorKind::Zf => zf_detect(h, y, c, SYMBOL_ENERGY),
        DetectorKind::MlExhaustive => {
            let lat = realize_channel(h, SYMBOL_ENERGY)?;
            let y_r = realize_observation(y)?;
            Ok(ml_exhaustive(&lat, &y_r, c))
        }
        DetectorKind::Lord => {
            let lat = realize_channel(h, SYMBOL_ENERGY)?;
            let y_r = realize_observation(y)?;
            let cs = summarize_channel(&lat)?;
            let op = project_observation(&lat, &y_r)?;
            let tm = triangularize(&cs, &op, AntennaOrdering::Antenna1First)?;
            lord_hard(&tm, c)
        }
    }
}

fn soft_demap(
    h: &ComplexChannel,
    y: &[Complex64],
    c: &Constellation,
    n0: f64,
) -> Result<Vec<f64>> {
    let lat = realize_channel(h, SYMBOL_ENERGY)?;
    let y_r = realize_observation(y)?;
    let cs = summarize_channel(&lat)?;
    let op = project_observation(&lat, &y_r)?;
    Ok(lord_llr(&cs, &op, c, n0)?.values)
}

fn received_vector(
    h: &ComplexChannel,
    tx: [Complex64; 2],
    noise: &[Complex64],
) -> Vec<Complex64> {
    let gain = (SYMBOL_ENERGY / 2.0).sqrt();
    h.apply(tx)
        .iter()
        .zip(noise)
        .map(|(s, n)| s * gain + n)
        .collect()
}

fn uncoded_trial(cfg: &SimConfig, c: &Constellation, n0: f64, trial: u64) -> Tally {
    let mut rng = trial_rng(cfg.seed, trial);
    let h = draw_channel(cfg.lr, &mut rng);
    let m = c.order_per_dim();
    let tx = [
        rng.gen_range(0..m),
        rng.gen_range(0..m),
        rng.gen_range(0..m),
        rng.gen_range(0..m),
    ];
    let noise = draw_noise(cfg.lr, n0, &mut rng);
    let x1 = Complex64::new(c.level(tx[0]), c.level(tx[1]));
    let x2 = Complex64::new(c.level(tx[2]), c.level(tx[3]));
    let y = received_vector(&h, [x1, x2], &noise);
    let bits = 2 * c.bits_per_symbol() as u64;
    match hard_detect(cfg.detector, &h, &y, c) {
        Ok(d) => {
            let tx1 = c.symbol_label(tx[0], tx[1]);
            let tx2 = c.symbol_label(tx[2], tx[3]);
            let rx1 = c.symbol_label(d.x_r_hat[0], d.x_r_hat[1]);
            let rx2 = c.symbol_label(d.x_r_hat[2], d.x_r_hat[3]);
            let bit_errors = ((tx1 ^ rx1).count_ones() + (tx2 ^ rx2).count_ones()) as u64;
            Tally {
                words: 1,
                word_errors: (d.x_r_hat != tx) as u64,
                bits,
                bit_errors,
                failures: 0,
            }
        }
        Err(_) => Tally {
            words: 1,
            word_errors: 1,
            bits,
            bit_errors: bits,
            failures: 1,
        },
    }
}

fn coded_trial(
    cfg: &SimConfig,
    c: &Constellation,
    code: &CodeConfig,
    fc: &FrameConfig,
    n0: f64,
    trial: u64,
) -> Tally {
    let mut rng = trial_rng(cfg.seed, trial);
    let info: Vec<bool> = (0..fc.info_bits).map(|_| rng.gen_bool(0.5)).collect();
    let coded = conv_encode(&info, code);
    let sent = interleave(&coded, fc).expect("frame matches interleaver block");
    let uses = frame_to_symbols(&sent, c).expect("frame splits into channel uses");
    let block_h = match cfg.fading {
        FadingMode::Block => Some(draw_channel(cfg.lr, &mut rng)),
        FadingMode::Fast => None,
    };
    let bits_per_use = 2 * c.bits_per_symbol();
    let mut wire = Vec::with_capacity(fc.coded_bits);
    let mut failures = 0u64;
    for pair in &uses {
        let fresh;
        let h = match &block_h {
            Some(hb) => hb,
            None => {
                fresh = draw_channel(cfg.lr, &mut rng);
                &fresh
            }
        };
        let noise = draw_noise(cfg.lr, n0, &mut rng);
        let y = received_vector(h, *pair, &noise);
        let demapped = match cfg.metric {
            BitMetric::Soft => soft_demap(h, &y, c, n0),
            BitMetric::Hard => hard_detect(cfg.detector, h, &y, c)
                .map(|d| d.bits(c).iter().map(|&b| if b { 1.0 } else { -1.0 }).collect()),
        };
        match demapped {
            Ok(values) => wire.extend_from_slice(&values),
            Err(_) => {
                wire.extend(std::iter::repeat(0.0).take(bits_per_use));
                failures += 1;
            }
        }
    }
    let descrambled = deinterleave(&wire, fc).expect("wire matches interleaver block");
    let decoded = viterbi_decode(&descrambled, code);
    let bit_errors = decoded.iter().zip(&info).filter(|(a, b)| a != b).count() as u64;
    Tally {
        words: 1,
        word_errors: (bit_errors > 0) as u64,
        bits: fc.info_bits as u64,
        bit_errors,
        failures,
    }
}

/// Runs an uncoded campaign: one symbol vector per trial, a fresh channel
/// per trial, word = the four-dimensional symbol decision.
pub fn run_uncoded(cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    let c = build_qam(cfg.order)?;
    let pool = build_pool(cfg.workers)?;
    let mut points = Vec::with_capacity(cfg.snr_grid_db.len());
    for &snr_db in &cfg.snr_grid_db {
        let n0 = snr_db_to_n0(snr_db, SYMBOL_ENERGY);
        points.push(run_point(cfg, snr_db, &pool, |t| {
            uncoded_trial(cfg, &c, n0, t)
        }));
    }
    Ok(SimResult { points })
}

/// Runs a coded campaign: one interleaved convolutional frame per trial,
/// word = the frame, bits = information bits.
pub fn run_bicm(cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    let c = build_qam(cfg.order)?;
    let code = CodeConfig::rate_half_k7();
    let fc = FrameConfig::standard();
    let pool = build_pool(cfg.workers)?;
    let mut points = Vec::with_capacity(cfg.snr_grid_db.len());
    for &snr_db in &cfg.snr_grid_db {
        let n0 = snr_db_to_n0(snr_db, SYMBOL_ENERGY);
        points.push(run_point(cfg, snr_db, &pool, |t| {
            coded_trial(cfg, &c, &code, &fc, n0, t)
        }));
    }
    Ok(SimResult { points })
}

/// Dispatches on the configured link mode.
pub fn run(cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    match cfg.link {
        LinkMode::Uncoded => run_uncoded(cfg),
        LinkMode::Coded => run_bicm(cfg),
    }
}

/// Parses an SNR grid given either as a single value or as
/// `start:step:stop` (inclusive of the stop within a small tolerance).
pub fn parse_snr_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let parse = |s: &str| -> Result<f64> {
        let v: f64 = s
            .trim()
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad SNR value {s:?}")))?;
        if !v.is_finite() {
            return Err(Error::InvalidConfig(format!("bad SNR value {s:?}")));
        }
        Ok(v)
    };
    match parts.as_slice() {
        [single] => Ok(vec![parse(single)?]),
        [start, step, stop] => {
            let (start, step, stop) = (parse(start)?, parse(step)?, parse(stop)?);
            if step <= 0.0 {
                return Err(Error::InvalidConfig("SNR step must be positive".into()));
            }
            if stop < start {
                return Err(Error::InvalidConfig("SNR stop below start".into()));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            if count > 10_000 {
                return Err(Error::InvalidConfig("SNR grid too large".into()));
            }
            Ok((0..count).map(|i| start + i as f64 * step).collect())
        }
        _ => Err(Error::InvalidConfig(format!(
            "expected SNR or start:step:stop, got {text:?}"
        ))),
    }
}

/// Parses `key = value` lines. Blank lines and lines starting with `#` are
/// skipped; keys are lowercased, values kept verbatim (trimmed).
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::InvalidConfig(format!("expected key=value, got {line:?}")))?;
        pairs.push((key.trim().to_lowercase(), value.trim().to_string()));
    }
    Ok(pairs)
}
