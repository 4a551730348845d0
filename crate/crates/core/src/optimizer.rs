//! Maximisation of the key rate over the pump level, loss sweeps and loss
//! cutoffs.
//!
//! The rate surface is not assumed unimodal: a log-spaced grid scan locates
//! the best cell and a golden-section search refines inside it.

use rayon::prelude::*;

use crate::channel::ChannelDetectorSpec;
use crate::error::{Error, Result};
use crate::protocols::{self, RateInputs};
use crate::sources::{self, SourceKind, SourceSpec, TruncationPolicy};

/// Rates at or below this count as outside the secure region.
pub const CUTOFF_RATE: f64 = 1e-12;

/// Default error-correction inefficiency.
pub const DEFAULT_F_EC: f64 = 1.05;

const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Protocol {
    /// Every multi-photon detection is assumed known to the eavesdropper.
    NoDecoy,
    /// Decoy intensities recover the channel parameters exactly.
    ActiveDecoy,
    /// The heralding outcome splits the pulses into two intensities.
    PassiveDecoy,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::NoDecoy => "no_decoy",
            Protocol::ActiveDecoy => "active_decoy",
            Protocol::PassiveDecoy => "passive_decoy",
        }
    }

    /// Whether sources of `kind` can run this protocol.
    pub fn supports(self, kind: SourceKind) -> bool {
        self != Protocol::PassiveDecoy || kind.has_heralding_detectors()
    }
}

impl std::fmt::Display for Protocol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Search interval and resolution of [`optimize_mu`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    pub mu_min: f64,
    pub mu_max: f64,
    /// Points of the log-spaced coarse scan.
    pub grid_points: usize,
    /// Relative width of the final bracket.
    pub rel_tol: f64,
    pub truncation: TruncationPolicy,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { mu_min: 1e-4, mu_max: 3.0, grid_points: 64, rel_tol: 1e-4, truncation: TruncationPolicy::default() }
    }
}

impl SearchConfig {
    pub fn validate(self) -> Result<Self> {
        if !(self.mu_min > 0.0 && self.mu_max > self.mu_min && self.mu_max.is_finite()) {
            return Err(Error::InvalidSearch(format!(
                "need 0 < mu_min < mu_max, got [{}, {}]",
                self.mu_min, self.mu_max
            )));
        }
        if self.grid_points < 3 {
            return Err(Error::InvalidSearch(format!("grid_points = {} < 3", self.grid_points)));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidSearch(format!("rel_tol = {} must be > 0", self.rel_tol)));
        }
        Ok(self)
    }

    /// The coarse scan, which doubles as the verification grid.
    pub fn grid(&self) -> Vec<f64> {
        let (lo, hi) = (self.mu_min.ln(), self.mu_max.ln());
        let last = self.grid_points - 1;
        (0..self.grid_points)
            .map(|i| match i {
                0 => self.mu_min,
                i if i == last => self.mu_max,
                i => (lo + (hi - lo) * i as f64 / last as f64).exp(),
            })
            .collect()
    }
}

/// A source architecture, a protocol and a link. The source's own `mu` is
/// ignored by the optimizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub source: SourceSpec,
    pub protocol: Protocol,
    pub channel: ChannelDetectorSpec,
    /// Error-correction inefficiency.
    pub f_ec: f64,
}

impl Scenario {
    pub fn new(source: SourceSpec, protocol: Protocol, channel: ChannelDetectorSpec) -> Self {
        Self { source, protocol, channel, f_ec: DEFAULT_F_EC }
    }

    pub fn with_loss(self, loss_db: f64) -> Self {
        Self { channel: self.channel.with_loss(loss_db), ..self }
    }

    /// Rejects unsupported source/protocol pairs and invalid parameters.
    pub fn validate(self) -> Result<Self> {
        self.channel.validate()?;
        if self.source.kind != SourceKind::IdealSinglePhoton {
            // any positive pump level exercises the remaining checks
            self.source.with_mu(1.0).validate()?;
        }
        if !self.protocol.supports(self.source.kind) {
            return Err(Error::UnsupportedSource(self.source.kind.name()));
        }
        if !(self.f_ec >= 1.0 && self.f_ec.is_finite()) {
            return Err(Error::InvalidRange(format!("f_ec = {} must be >= 1", self.f_ec)));
        }
        Ok(self)
    }

    /// Rate and observables at pump level `mu`.
    pub fn evaluate(&self, mu: f64, truncation: &TruncationPolicy) -> Result<Evaluation> {
        let source = self.source.with_mu(mu);
        let mu = (source.kind != SourceKind::IdealSinglePhoton).then_some(mu);
        if self.protocol == Protocol::PassiveDecoy {
            let r = protocols::rate_passive_decoy_with(&source, &self.channel, self.f_ec, truncation)?;
            let total = r.total_observation();
            return Ok(Evaluation {
                mu,
                rate: r.rate,
                gain: total.gain,
                qber: total.qber,
                delta: None,
                passive: Some(PassiveDiagnostics {
                    p_click: r.click.probability,
                    y0_lower: r.bounds.y0_lower,
                    y1_lower: r.bounds.y1_lower,
                    e1_upper: r.bounds.e1_upper,
                }),
            });
        }
        let channel = self.channel.validate()?;
        let stats = sources::pmf(&source, truncation)?;
        let inputs = RateInputs::from_statistics(&stats, &channel, self.f_ec);
        let (rate, delta) = match self.protocol {
            Protocol::NoDecoy => (protocols::rate_no_decoy(&inputs), Some(inputs.delta)),
            _ => (protocols::rate_active_decoy(&inputs), None),
        };
        Ok(Evaluation { mu, rate, gain: inputs.observed.gain, qber: inputs.observed.qber, delta, passive: None })
    }
}

/// Branch diagnostics of the passive scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassiveDiagnostics {
    pub p_click: f64,
    pub y0_lower: f64,
    pub y1_lower: f64,
    /// `None` when the single-photon term was dropped.
    pub e1_upper: Option<f64>,
}

/// Rate and observables at one pump level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    /// `None` for sources without a pump parameter.
    pub mu: Option<f64>,
    pub rate: f64,
    pub gain: f64,
    pub qber: f64,
    /// Multi-photon fraction of the detections (no-decoy only).
    pub delta: Option<f64>,
    pub passive: Option<PassiveDiagnostics>,
}

/// Pump level maximising the rate of `scenario`.
///
/// Points where the rate model fails (for instance a click branch too rare
/// to condition on) are treated as zero rate. Returns [`Error::AllZero`] when
/// no grid point has a positive rate.
pub fn optimize_mu(scenario: &Scenario, search: &SearchConfig) -> Result<Evaluation> {
    let scenario = scenario.validate()?;
    let search = search.validate()?;
    let truncation = search.truncation;
    if scenario.source.kind == SourceKind::IdealSinglePhoton {
        return scenario.evaluate(1.0, &truncation);
    }
    let score = |mu: f64| scenario.evaluate(mu, &truncation).ok();
    let rate_of = |e: &Option<Evaluation>| e.map_or(-1.0, |e| e.rate);

    let grid = search.grid();
    let scan: Vec<Option<Evaluation>> = grid.iter().map(|&mu| score(mu)).collect();
    let (best_idx, _) =
        scan.iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, br), (i, e)| if rate_of(e) > br { (i, rate_of(e)) } else { (bi, br) });
    let mut best = match scan[best_idx] {
        Some(e) if e.rate > 0.0 => e,
        _ => return Err(Error::AllZero),
    };

    let mut lo = grid[best_idx.saturating_sub(1)].ln();
    let mut hi = grid[(best_idx + 1).min(grid.len() - 1)].ln();
    let mut keep = |e: Option<Evaluation>| {
        let r = rate_of(&e);
        if r > best.rate {
            best = e.unwrap();
        }
        r
    };
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = keep(score(x1.exp()));
    let mut f2 = keep(score(x2.exp()));
    while hi - lo > search.rel_tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = keep(score(x1.exp()));
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = keep(score(x2.exp()));
        }
    }
    Ok(best)
}

/// Outcome of one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub enum PointStatus {
    Optimized,
    /// No pump level in the search interval gives a positive rate.
    AllZero,
    /// The rate model failed; the record carries zero rate.
    Failed(Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub loss_db: f64,
    pub mu_opt: Option<f64>,
    pub rate: f64,
    pub gain: Option<f64>,
    pub qber: Option<f64>,
    pub delta: Option<f64>,
    pub passive: Option<PassiveDiagnostics>,
    pub status: PointStatus,
}

impl SweepRecord {
    fn zero(loss_db: f64, status: PointStatus) -> Self {
        Self { loss_db, mu_opt: None, rate: 0.0, gain: None, qber: None, delta: None, passive: None, status }
    }

    fn from_evaluation(loss_db: f64, e: Evaluation) -> Self {
        Self {
            loss_db,
            mu_opt: e.mu,
            rate: e.rate,
            gain: Some(e.gain),
            qber: Some(e.qber),
            delta: e.delta,
            passive: e.passive,
            status: PointStatus::Optimized,
        }
    }
}

/// Optimizes every loss point independently, in parallel. Records come back
/// in the order of `losses`.
pub fn sweep(scenario: &Scenario, losses: &[f64], search: &SearchConfig) -> Result<Vec<SweepRecord>> {
    let scenario = scenario.validate()?;
    let search = search.validate()?;
    if losses.is_empty() {
        return Err(Error::InvalidRange("empty loss grid".into()));
    }
    if let Some(&bad) = losses.iter().find(|l| !(**l >= 0.0)) {
        return Err(Error::NegativeLoss(bad));
    }
    Ok(losses
        .par_iter()
        .map(|&loss| match optimize_mu(&scenario.with_loss(loss), &search) {
            Ok(e) => SweepRecord::from_evaluation(loss, e),
            Err(Error::AllZero) => SweepRecord::zero(loss, PointStatus::AllZero),
            Err(e) => SweepRecord::zero(loss, PointStatus::Failed(e)),
        })
        .collect())
}

/// Largest loss with optimized rate above [`CUTOFF_RATE`], searched on a 1 dB
/// grid over `[0, max_loss]`, refined on a 0.1 dB grid and interpolated
/// linearly to the threshold crossing.
///
/// `None` if the rate is already below the threshold at 0 dB; `max_loss` if
/// it never drops below it.
pub fn loss_cutoff(scenario: &Scenario, search: &SearchConfig, max_loss: f64) -> Result<Option<f64>> {
    let coarse: Vec<f64> = (0..=max_loss.floor() as usize).map(|l| l as f64).collect();
    let rates = sweep(scenario, &coarse, search)?;
    let Some(last) = rates.iter().rposition(|r| r.rate > CUTOFF_RATE) else {
        return Ok(None);
    };
    if last + 1 == rates.len() {
        return Ok(Some(coarse[last]));
    }
    let start = coarse[last];
    let fine: Vec<f64> = (0..=10).map(|k| start + 0.1 * k as f64).collect();
    let rates = sweep(scenario, &fine, search)?;
    let k = rates.iter().rposition(|r| r.rate > CUTOFF_RATE).unwrap_or(0);
    if k + 1 == rates.len() {
        return Ok(Some(fine[k]));
    }
    let (ra, rb) = (rates[k].rate, rates[k + 1].rate);
    let fraction = ((ra - CUTOFF_RATE) / (ra - rb)).clamp(0.0, 1.0);
    Ok(Some(fine[k] + fraction * (fine[k + 1] - fine[k])))
}
