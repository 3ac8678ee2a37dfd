//! Molecule-level Monte Carlo of the drift-diffusion link.
//!
//! Every released molecule gets its own first-passage time and is credited
//! to the slot it lands in, so interference from all earlier slots is kept.
//! Frames are split into fixed-size blocks, each an independent burst with
//! its own warm-up and its own RNG stream; results therefore do not depend
//! on the number of worker threads.

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::aig::{slot_arrival_probs, MediumParams, SlotConfig};
use crate::channel::InputDistribution;
use crate::detector::{map_rule, DetectorModel, DetectorTable};
use crate::error::{invalid, Error, Result};

pub const DEFAULT_WARMUP: usize = 50;
/// Frames per independent block.
pub const BLOCK_FRAMES: u64 = 10_000;
/// Slot offsets tracked by the arrival histogram.
pub const HISTOGRAM_SLOTS: usize = 64;
const Z_95: f64 = 1.959_963_984_540_054;

/// One inverse-Gaussian first-passage time by the Michael-Schucany-Haas
/// transform.
pub fn sample_first_passage<R: rand::Rng + ?Sized>(params: &MediumParams, rng: &mut R) -> f64 {
    let mu = params.mu();
    let lambda = params.lambda();
    let nu: f64 = rng.sample(StandardNormal);
    let phi = mu * nu * nu / (2.0 * lambda);
    // Smaller root of the quadratic, in a form free of cancellation.
    let root = mu / (1.0 + phi + (phi * (phi + 2.0)).sqrt());
    let u: f64 = rng.random();
    if u * (mu + root) <= mu {
        root
    } else {
        mu * mu / root
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub params: MediumParams,
    pub slot: SlotConfig,
    pub a: InputDistribution,
    pub frames: u64,
    pub seed: u64,
    /// Molecules later than this many slots after release are discarded;
    /// 0 keeps every molecule.
    pub memory_truncation: usize,
    pub detector: DetectorModel,
    /// Slots transmitted at the start of each block before errors count.
    pub warmup: usize,
    pub trace: bool,
}

impl SimConfig {
    pub fn new(params: MediumParams, slot: SlotConfig, a: InputDistribution, frames: u64, seed: u64) -> Self {
        Self {
            params,
            slot,
            a,
            frames,
            seed,
            memory_truncation: 0,
            detector: DetectorModel::Stm,
            warmup: DEFAULT_WARMUP,
            trace: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.frames == 0 {
            return Err(invalid("frames", "need at least one frame"));
        }
        if self.a.len() != self.slot.xmax() + 1 {
            return Err(Error::DimensionMismatch {
                expected: self.slot.xmax() + 1,
                actual: self.a.len(),
            });
        }
        Ok(())
    }
}

/// One measured slot of the optional trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceRow {
    pub slot: u64,
    pub x: usize,
    pub y: usize,
    pub x_hat: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub frames_run: u64,
    pub errors: u64,
    pub empirical_pe: f64,
    /// 95% Wilson score interval on the error rate.
    pub ci_low: f64,
    pub ci_high: f64,
    /// `hist[k - 1]` is the fraction of released molecules that arrived in
    /// the `k`-th slot after release.
    pub slot_arrival_hist: Vec<f64>,
    pub molecules: u64,
    pub seed: u64,
    pub trace: Option<Vec<TraceRow>>,
}

impl SimReport {
    pub fn ci_half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }

    /// Fraction of released molecules credited to some slot in the
    /// histogram window.
    pub fn captured_fraction(&self) -> f64 {
        self.slot_arrival_hist.iter().sum()
    }
}

#[derive(Default)]
struct BlockTally {
    frames: u64,
    errors: u64,
    molecules: u64,
    hist: Vec<u64>,
    trace: Vec<TraceRow>,
}

fn run_block(cfg: &SimConfig, table: &DetectorTable, block: u64, frames: u64) -> Result<BlockTally> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(block);
    let symbols = WeightedIndex::new(cfg.a.probs()).map_err(|e| invalid("a", e.to_string()))?;
    let t = cfg.slot.t();
    let total = cfg.warmup + frames as usize;
    let mut sent = Vec::with_capacity(total);
    let mut counts = vec![0usize; total];
    let mut tally = BlockTally {
        frames,
        hist: vec![0; HISTOGRAM_SLOTS],
        ..BlockTally::default()
    };
    for i in 0..total {
        let x = symbols.sample(&mut rng);
        sent.push(x);
        for _ in 0..x {
            let w = sample_first_passage(&cfg.params, &mut rng);
            // Slots elapsed between release and arrival.
            let offset = (w / t).floor();
            if cfg.memory_truncation > 0 && offset >= cfg.memory_truncation as f64 {
                continue;
            }
            if offset < HISTOGRAM_SLOTS as f64 {
                tally.hist[offset as usize] += 1;
            }
            if offset < (total - i) as f64 {
                counts[i + offset as usize] += 1;
            }
        }
        tally.molecules += x as u64;
    }
    for i in cfg.warmup..total {
        let x_hat = table.decide(counts[i]);
        if x_hat != sent[i] {
            tally.errors += 1;
        }
        if cfg.trace {
            tally.trace.push(TraceRow {
                slot: block * BLOCK_FRAMES + (i - cfg.warmup) as u64,
                x: sent[i],
                y: counts[i],
                x_hat,
            });
        }
    }
    Ok(tally)
}

/// Runs the link and scores the configured detector against the
/// transmitted symbols.
pub fn run_link(cfg: &SimConfig) -> Result<SimReport> {
    cfg.validate()?;
    let q = slot_arrival_probs(&cfg.params, cfg.slot.t(), 2)?;
    let table = map_rule(&cfg.a, q.q1(), q.q2(), cfg.slot.xmax(), cfg.detector)?;
    let blocks = cfg.frames.div_ceil(BLOCK_FRAMES);
    let tallies = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let frames = BLOCK_FRAMES.min(cfg.frames - b * BLOCK_FRAMES);
            run_block(cfg, &table, b, frames)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut frames = 0;
    let mut errors = 0;
    let mut molecules = 0;
    let mut hist = vec![0u64; HISTOGRAM_SLOTS];
    let mut trace = cfg.trace.then(Vec::new);
    for tally in tallies {
        frames += tally.frames;
        errors += tally.errors;
        molecules += tally.molecules;
        for (h, c) in hist.iter_mut().zip(&tally.hist) {
            *h += c;
        }
        if let Some(rows) = trace.as_mut() {
            rows.extend(tally.trace);
        }
    }
    let pe = errors as f64 / frames as f64;
    let (ci_low, ci_high) = wilson_interval(errors, frames);
    let slot_arrival_hist = hist
        .iter()
        .map(|&c| if molecules == 0 { 0.0 } else { c as f64 / molecules as f64 })
        .collect();
    Ok(SimReport {
        frames_run: frames,
        errors,
        empirical_pe: pe,
        ci_low,
        ci_high,
        slot_arrival_hist,
        molecules,
        seed: cfg.seed,
        trace,
    })
}

/// 95% Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z_95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Half-width of the 95% band in which the error rate of `trials` frames
/// falls when the true rate is `p`.
pub fn binomial_band(p: f64, trials: u64) -> f64 {
    Z_95 * (p * (1.0 - p) / trials as f64).sqrt()
}
