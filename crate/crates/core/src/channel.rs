//! BPSK over AWGN and the seeded Monte Carlo BER driver.
//!
//! Every frame draws from its own ChaCha stream selected by the frame index,
//! and frames are merged in index order, so results do not depend on how many
//! threads run the frames.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bp::{clip, DEFAULT_MAX_ITERS};
use crate::coupling::{Exchange, System};
use crate::error::{config_err, Error, Result};
use crate::Bit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SnrConvention {
    #[default]
    EbN0,
    EsN0,
}

impl fmt::Display for SnrConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::EbN0 => "EbN0",
            Self::EsN0 => "EsN0",
        })
    }
}

impl FromStr for SnrConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ebn0" | "eb/n0" => Ok(Self::EbN0),
            "esn0" | "es/n0" => Ok(Self::EsN0),
            _ => Err(Error::Parse(format!("unknown SNR convention {s:?}"))),
        }
    }
}

/// One SNR operating point. Symbols have unit energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelPoint {
    pub snr_db: f64,
    pub convention: SnrConvention,
    /// Code rate used to convert Eb/N0 to Es/N0.
    pub rate: f64,
}

impl ChannelPoint {
    pub fn new(snr_db: f64, convention: SnrConvention, rate: f64) -> Self {
        Self {
            snr_db,
            convention,
            rate,
        }
    }

    /// Es/N0 in linear scale.
    pub fn es_n0(&self) -> f64 {
        let snr = 10f64.powf(self.snr_db / 10.0);
        match self.convention {
            SnrConvention::EbN0 => snr * self.rate,
            SnrConvention::EsN0 => snr,
        }
    }

    /// Noise variance per real dimension, `1 / (2 Es/N0)`.
    pub fn noise_var(&self) -> f64 {
        1.0 / (2.0 * self.es_n0())
    }
}

/// Bit 0 to +1, bit 1 to -1.
pub fn modulate(bits: &[Bit]) -> Vec<f64> {
    bits.iter().map(|&b| if b == 0 { 1.0 } else { -1.0 }).collect()
}

/// Adds i.i.d. zero-mean Gaussian noise of variance `noise_var`.
pub fn transmit<R: Rng + ?Sized>(symbols: &[f64], noise_var: f64, rng: &mut R) -> Result<Vec<f64>> {
    if noise_var.is_nan() || noise_var <= 0.0 {
        return config_err(format!("noise variance {noise_var} must be positive"));
    }
    let sigma = noise_var.sqrt();
    Ok(symbols
        .iter()
        .map(|&s| {
            let n: f64 = StandardNormal.sample(rng);
            s + sigma * n
        })
        .collect())
}

/// Channel LLRs `2y / sigma^2`, positive favouring bit 0, clipped.
pub fn llr(received: &[f64], noise_var: f64) -> Result<Vec<f64>> {
    if noise_var.is_nan() || noise_var <= 0.0 {
        return config_err(format!("noise variance {noise_var} must be positive"));
    }
    Ok(received.iter().map(|&y| clip(2.0 * y / noise_var)).collect())
}

/// Stop a point once `min_frame_errors` are collected or after `max_frames`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopRule {
    pub min_frame_errors: u64,
    pub max_frames: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            min_frame_errors: 100,
            max_frames: 100_000,
        }
    }
}

/// Decoder settings used for every frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeOptions {
    pub max_iters: usize,
    pub early_stop: bool,
    pub exchange: Exchange,
}

impl Default for DecodeOptions {
    fn default() -> Self {
        Self {
            max_iters: DEFAULT_MAX_ITERS,
            early_stop: false,
            exchange: Exchange::Coupled,
        }
    }
}

/// Tallies of one SNR point.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub point: ChannelPoint,
    pub frames: u64,
    pub bit_errors: u64,
    /// Sum over frames of the squared per-frame bit-error count.
    pub bit_errors_sq: u64,
    pub frame_errors: u64,
    pub info_bits_total: u64,
    pub iterations_total: u64,
    pub seed: u64,
}

impl SimResult {
    fn empty(point: ChannelPoint, seed: u64) -> Self {
        Self {
            point,
            frames: 0,
            bit_errors: 0,
            bit_errors_sq: 0,
            frame_errors: 0,
            info_bits_total: 0,
            iterations_total: 0,
            seed,
        }
    }

    fn add_frame(&mut self, k: usize, outcome: FrameOutcome) {
        self.frames += 1;
        self.info_bits_total += k as u64;
        self.bit_errors += outcome.bit_errors;
        self.bit_errors_sq += outcome.bit_errors * outcome.bit_errors;
        self.frame_errors += u64::from(outcome.bit_errors > 0);
        self.iterations_total += outcome.iterations as u64;
    }

    pub fn ber(&self) -> f64 {
        ratio(self.bit_errors, self.info_bits_total)
    }

    pub fn fer(&self) -> f64 {
        ratio(self.frame_errors, self.frames)
    }

    pub fn avg_iters(&self) -> f64 {
        ratio(self.iterations_total, self.frames)
    }

    /// 95% confidence interval of the BER, treating frames as the
    /// independent samples (bit errors within a frame are correlated).
    pub fn ber_ci95(&self) -> (f64, f64) {
        if self.frames < 2 || self.info_bits_total == 0 {
            return (0.0, 1.0);
        }
        let f = self.frames as f64;
        let k = self.info_bits_total as f64 / f;
        let mean = self.bit_errors as f64 / f;
        let var = ((self.bit_errors_sq as f64 - f * mean * mean) / (f - 1.0)).max(0.0);
        let half = 1.96 * (var / f).sqrt() / k;
        let ber = mean / k;
        ((ber - half).max(0.0), (ber + half).min(1.0))
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Copy)]
struct FrameOutcome {
    bit_errors: u64,
    iterations: usize,
}

fn frame_rng(seed: u64, frame: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(frame);
    rng
}

fn random_bits(rng: &mut impl Rng, n: usize) -> Vec<Bit> {
    let mut bits = Vec::with_capacity(n);
    while bits.len() < n {
        let word: u64 = rng.random();
        let take = (n - bits.len()).min(64);
        bits.extend((0..take).map(|i| (word >> i & 1) as Bit));
    }
    bits
}

fn run_frame(
    system: &System,
    decoder: &mut crate::coupling::SystemDecoder,
    noise_var: f64,
    opts: &DecodeOptions,
    seed: u64,
    frame: u64,
) -> Result<FrameOutcome> {
    let mut rng = frame_rng(seed, frame);
    let info = random_bits(&mut rng, system.total_k());
    let x = system.encode(&info)?;
    let y = transmit(&modulate(&x), noise_var, &mut rng)?;
    let llrs = llr(&y, noise_var)?;
    let decoded = decoder.decode(&llrs, opts.max_iters, opts.early_stop, opts.exchange)?;
    let bit_errors = info.iter().zip(&decoded.info).filter(|(a, b)| a != b).count() as u64;
    Ok(FrameOutcome {
        bit_errors,
        iterations: decoded.iterations,
    })
}

/// Simulates one SNR point until the stop rule fires.
pub fn run_point(
    system: &System,
    point: ChannelPoint,
    stop: StopRule,
    opts: &DecodeOptions,
    seed: u64,
) -> Result<SimResult> {
    if stop.min_frame_errors == 0 || stop.max_frames == 0 {
        return config_err("stop rule limits must be positive");
    }
    let noise_var = point.noise_var();
    let k = system.total_k();
    let batch = (rayon::current_num_threads() as u64 * 4).max(8);
    let mut result = SimResult::empty(point, seed);
    let mut next = 0u64;
    while next < stop.max_frames {
        let end = (next + batch).min(stop.max_frames);
        let outcomes: Vec<Result<FrameOutcome>> = (next..end)
            .into_par_iter()
            .map_init(
                || system.decoder(),
                |decoder, frame| {
                    let decoder = decoder.as_mut().map_err(|e| Error::Config(e.to_string()))?;
                    run_frame(system, decoder, noise_var, opts, seed, frame)
                },
            )
            .collect();
        for outcome in outcomes {
            result.add_frame(k, outcome?);
            if result.frame_errors >= stop.min_frame_errors {
                return Ok(result);
            }
        }
        next = end;
    }
    Ok(result)
}

/// Runs every point with seed `base_seed + index`.
pub fn run_sweep(
    system: &System,
    points: &[ChannelPoint],
    stop: StopRule,
    opts: &DecodeOptions,
    base_seed: u64,
) -> Result<Vec<SimResult>> {
    points
        .iter()
        .enumerate()
        .map(|(i, &p)| run_point(system, p, stop, opts, base_seed.wrapping_add(i as u64)))
        .collect()
}
