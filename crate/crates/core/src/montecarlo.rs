//! Event-level simulation of the multiplexed sources.
//!
//! Each trial draws the pair number of every crystal from left to right,
//! fires its heralding detector photon by photon, routes the leftmost
//! heralded crystal (or the first one if none fired) to the output and
//! thins its photons through the switches on its path.
//!
//! Trials are split into fixed chunks, each driven by its own ChaCha8
//! stream derived from `(seed, chunk index)`, so results do not depend on
//! the number of threads.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sources::{HeraldUnit, PhotonStatistics, SourceSpec};

/// Trials per RNG stream.
pub const CHUNK_TRIALS: u64 = 1 << 16;

/// Means below this are sampled by inversion, the rest by the library's
/// accept-reject sampler.
pub const INVERSION_LIMIT: f64 = 10.0;

/// Largest pump mean the sampler accepts.
pub const MAX_PUMP_MEAN: f64 = 1e15;

/// Photon counts above this are detected and thinned in one draw instead of
/// photon by photon.
const PER_PHOTON_LIMIT: u64 = 64;

/// How often each Poisson sampler was used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct McDiagnostics {
    pub inversion_draws: u64,
    pub rejection_draws: u64,
    pub chunks: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct McResult {
    pub trials: u64,
    pub seed: u64,
    /// Output photon-number histogram, all trials.
    pub counts: Vec<u64>,
    /// Histogram of the trials where some heralding detector fired.
    pub counts_click: Vec<u64>,
    pub counts_noclick: Vec<u64>,
    pub clicks: u64,
    pub diagnostics: McDiagnostics,
}

impl McResult {
    pub fn empirical_pmf(&self) -> Vec<f64> {
        frequencies(&self.counts, self.trials)
    }

    pub fn empirical_pmf_click(&self) -> Vec<f64> {
        frequencies(&self.counts_click, self.clicks)
    }

    pub fn empirical_pmf_noclick(&self) -> Vec<f64> {
        frequencies(&self.counts_noclick, self.trials - self.clicks)
    }

    pub fn click_fraction(&self) -> f64 {
        self.clicks as f64 / self.trials as f64
    }

    fn merge(mut self, other: Self) -> Self {
        add_into(&mut self.counts, &other.counts);
        add_into(&mut self.counts_click, &other.counts_click);
        add_into(&mut self.counts_noclick, &other.counts_noclick);
        self.trials += other.trials;
        self.clicks += other.clicks;
        self.diagnostics.inversion_draws += other.diagnostics.inversion_draws;
        self.diagnostics.rejection_draws += other.diagnostics.rejection_draws;
        self.diagnostics.chunks += other.diagnostics.chunks;
        self
    }
}

fn frequencies(counts: &[u64], total: u64) -> Vec<f64> {
    if total == 0 {
        return vec![0.0; counts.len()];
    }
    counts.iter().map(|&c| c as f64 / total as f64).collect()
}

fn add_into(acc: &mut Vec<u64>, other: &[u64]) {
    if acc.len() < other.len() {
        acc.resize(other.len(), 0);
    }
    for (a, b) in acc.iter_mut().zip(other) {
        *a += b;
    }
}

fn bump(hist: &mut Vec<u64>, n: usize) {
    if hist.len() <= n {
        hist.resize(n + 1, 0);
    }
    hist[n] += 1;
}

/// Per-unit sampler prepared once per simulation.
struct UnitSampler {
    mean: f64,
    exp_neg_mean: f64,
    rejection: Option<Poisson<f64>>,
    path_transmittance: f64,
}

impl UnitSampler {
    fn new(unit: &HeraldUnit) -> Result<Self> {
        let mean = unit.pump_mean;
        if !(mean <= MAX_PUMP_MEAN) {
            return Err(Error::InvalidRange(format!("pump mean {mean:e} exceeds {MAX_PUMP_MEAN:e}")));
        }
        let rejection = if mean >= INVERSION_LIMIT {
            Some(Poisson::new(mean).map_err(|e| Error::InvalidRange(e.to_string()))?)
        } else {
            None
        };
        Ok(Self { mean, exp_neg_mean: (-mean).exp(), rejection, path_transmittance: unit.path_transmittance })
    }

    fn draw(&self, rng: &mut ChaCha8Rng, diag: &mut McDiagnostics) -> u64 {
        if let Some(p) = &self.rejection {
            diag.rejection_draws += 1;
            return p.sample(rng) as u64;
        }
        diag.inversion_draws += 1;
        let u: f64 = rng.random();
        let mut k = 0u64;
        let mut p = self.exp_neg_mean;
        let mut cdf = p;
        while u > cdf && p > 0.0 {
            k += 1;
            p *= self.mean / k as f64;
            cdf += p;
        }
        k
    }
}

/// Simulates `trials` pulses of a multiplexed source.
pub fn simulate(spec: &SourceSpec, trials: u64, seed: u64) -> Result<McResult> {
    if trials == 0 {
        return Err(Error::InvalidTrials(trials));
    }
    let units = spec.herald_units()?;
    let samplers = units.iter().map(UnitSampler::new).collect::<Result<Vec<_>>>()?;
    let eta = spec.herald_efficiency();

    let n_chunks = trials.div_ceil(CHUNK_TRIALS);
    let empty = McResult {
        trials: 0,
        seed,
        counts: Vec::new(),
        counts_click: Vec::new(),
        counts_noclick: Vec::new(),
        clicks: 0,
        diagnostics: McDiagnostics::default(),
    };
    let result = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let len = CHUNK_TRIALS.min(trials - chunk * CHUNK_TRIALS);
            run_chunk(&samplers, eta, seed, chunk, len)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(empty, McResult::merge);
    Ok(result)
}

fn run_chunk(samplers: &[UnitSampler], eta: f64, seed: u64, chunk: u64, len: u64) -> McResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    let mut out = McResult {
        trials: len,
        seed,
        counts: Vec::new(),
        counts_click: Vec::new(),
        counts_noclick: Vec::new(),
        clicks: 0,
        diagnostics: McDiagnostics { chunks: 1, ..Default::default() },
    };
    for _ in 0..len {
        let mut selected = None;
        let mut first_pairs = 0;
        for (i, unit) in samplers.iter().enumerate() {
            let pairs = unit.draw(&mut rng, &mut out.diagnostics);
            if i == 0 {
                first_pairs = pairs;
            }
            if herald_fires(pairs, eta, &mut rng) {
                selected = Some((unit, pairs));
                break;
            }
        }
        let clicked = selected.is_some();
        let (unit, pairs) = selected.unwrap_or((&samplers[0], first_pairs));
        let photons = thin(pairs, unit.path_transmittance, &mut rng) as usize;
        bump(&mut out.counts, photons);
        if clicked {
            out.clicks += 1;
            bump(&mut out.counts_click, photons);
        } else {
            bump(&mut out.counts_noclick, photons);
        }
    }
    out
}

/// Threshold detector: fires if any of the `pairs` idler photons is detected.
fn herald_fires(pairs: u64, eta: f64, rng: &mut ChaCha8Rng) -> bool {
    if eta >= 1.0 {
        return pairs > 0;
    }
    if pairs > PER_PHOTON_LIMIT {
        let miss = (pairs as f64 * (-eta).ln_1p()).exp();
        return rng.random::<f64>() >= miss;
    }
    (0..pairs).any(|_| rng.random::<f64>() < eta)
}

fn thin(photons: u64, transmittance: f64, rng: &mut ChaCha8Rng) -> u64 {
    if transmittance >= 1.0 {
        return photons;
    }
    if photons > PER_PHOTON_LIMIT {
        // valid parameters by construction
        return Binomial::new(photons, transmittance).map_or(0, |b| b.sample(rng));
    }
    (0..photons).filter(|_| rng.random::<f64>() < transmittance).count() as u64
}

/// Total-variation distance between an empirical pmf and tabulated
/// statistics, counting the analytic tail mass as disagreement.
pub fn total_variation(empirical: &[f64], analytic: &PhotonStatistics) -> f64 {
    let len = empirical.len().max(analytic.n_max() + 1);
    let sum: f64 = (0..len).map(|n| (empirical.get(n).copied().unwrap_or(0.0) - analytic.get(n)).abs()).sum();
    0.5 * (sum + analytic.tail_mass())
}
