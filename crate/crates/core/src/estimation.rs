//! Bounds on the vacuum yield, single-photon yield and single-photon error
//! rate from the gains and QBERs of two pulse populations with known photon
//! statistics (click and no-click heralding outcomes).
//!
//! Every bound relies on sign properties of the cross products
//! `P_a^(c) P_n^(nc) - P_a^(nc) P_n^(c)`; [`sign_structure_violations`]
//! checks them on the tabulated support.

use crate::channel::{ChannelDetectorSpec, ObservedChannel, DARK_ERROR};
use crate::error::{Error, Result};
use crate::sources::{self, PhotonStatistics, SourceSpec, TruncationPolicy};

/// Denominators at or below this are treated as indistinguishable branches.
const MIN_DENOMINATOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct BranchObservations {
    pub click: ObservedChannel,
    pub noclick: ObservedChannel,
    pub stats_click: PhotonStatistics,
    pub stats_noclick: PhotonStatistics,
}

impl BranchObservations {
    /// Noise-free observations of the two branches of `source` on `channel`.
    pub fn predict(source: &SourceSpec, channel: &ChannelDetectorSpec, policy: &TruncationPolicy) -> Result<Self> {
        let (stats_click, stats_noclick) = sources::branch_statistics(source, policy)?;
        Ok(Self {
            click: channel.predict_observation(&stats_click),
            noclick: channel.predict_observation(&stats_noclick),
            stats_click,
            stats_noclick,
        })
    }

    /// Copy with the click/no-click gains and error gains scaled by the given
    /// factors, for robustness studies.
    pub fn perturbed(&self, gain_click: f64, gain_noclick: f64, errors_click: f64, errors_noclick: f64) -> Self {
        let scale =
            |obs: &ObservedChannel, g: f64, e: f64| ObservedChannel { gain: obs.gain * g, qber: obs.qber * e / g };
        Self {
            click: scale(&self.click, gain_click, errors_click),
            noclick: scale(&self.noclick, gain_noclick, errors_noclick),
            ..self.clone()
        }
    }

    fn c(&self, n: usize) -> f64 {
        self.stats_click.get(n)
    }

    fn nc(&self, n: usize) -> f64 {
        self.stats_noclick.get(n)
    }

    /// `P_a^(c) P_b^(nc) - P_a^(nc) P_b^(c)`.
    fn cross(&self, a: usize, b: usize) -> f64 {
        self.c(a) * self.nc(b) - self.nc(a) * self.c(b)
    }
}

/// Returns `(Y0_lower, Y0_upper)`.
pub fn y0_bounds(obs: &BranchObservations) -> Result<(f64, f64)> {
    let denominator = obs.cross(1, 0);
    if denominator <= MIN_DENOMINATOR {
        return Err(Error::DegenerateStatistics(denominator));
    }
    let upper = [(obs.click.error_gain(), obs.c(0)), (obs.noclick.error_gain(), obs.nc(0))]
        .into_iter()
        .filter(|&(_, p0)| p0 > 0.0)
        .map(|(errors, p0)| errors / (p0 * DARK_ERROR))
        .fold(f64::INFINITY, f64::min);

    let numerator = obs.c(1) * obs.noclick.gain - obs.nc(1) * obs.click.gain;
    let lower = (numerator / denominator).max(0.0);
    Ok((lower, upper))
}

pub fn y1_lower(obs: &BranchObservations, y0_upper: f64) -> Result<f64> {
    let denominator = obs.cross(2, 1);
    if denominator <= MIN_DENOMINATOR {
        return Err(Error::DegenerateStatistics(denominator));
    }
    let vacuum = obs.cross(2, 0);
    let vacuum_term = if vacuum == 0.0 { 0.0 } else { vacuum * y0_upper };
    if vacuum_term.is_infinite() {
        return Ok(0.0);
    }
    let numerator = obs.c(2) * obs.noclick.gain - obs.nc(2) * obs.click.gain - vacuum_term;
    Ok((numerator / denominator).max(0.0))
}

/// Smallest of the three single-photon error bounds, clamped into `[0, 1/2]`.
pub fn e1_upper(obs: &BranchObservations, y0_lower: f64, y1_lower: f64) -> Result<f64> {
    if !(y1_lower > 0.0) {
        return Err(Error::DegenerateBounds);
    }
    let errors_c = obs.click.error_gain();
    let errors_nc = obs.noclick.error_gain();
    let candidates = [
        (obs.nc(0) * errors_c - obs.c(0) * errors_nc, -obs.cross(0, 1) * y1_lower),
        (errors_c - obs.c(0) * y0_lower * DARK_ERROR, obs.c(1) * y1_lower),
        (errors_nc - obs.nc(0) * y0_lower * DARK_ERROR, obs.nc(1) * y1_lower),
    ];
    let bound = candidates.into_iter().filter(|&(_, d)| d > 0.0).map(|(num, d)| num / d).fold(f64::INFINITY, f64::min);
    Ok(bound.clamp(0.0, DARK_ERROR))
}

/// Cross products on the tabulated support that have the wrong sign by more
/// than `tolerance` (relative to the product of the branch probabilities).
///
/// Returns `(n, kind)` pairs where `kind` is 0 for the vacuum-bound products
/// `P_0^(nc) P_n^(c) - P_0^(c) P_n^(nc) >= 0`, 1 for the single-photon
/// products and 2 for the two-photon ones.
pub fn sign_structure_violations(obs: &BranchObservations, tolerance: f64) -> Vec<(usize, u8)> {
    let n_max = obs.stats_click.n_max().min(obs.stats_noclick.n_max());
    let mut bad = Vec::new();
    for n in 0..=n_max {
        let scale = |a: usize| tolerance * (obs.c(a) * obs.nc(n) + obs.nc(a) * obs.c(n));
        // A_{n,0} [1 - (1 - eta)^n] >= 0
        if -obs.cross(0, n) < -scale(0) {
            bad.push((n, 0));
        }
        // A_{n,1} [(1 - eta)^n - (1 - eta)]: >= 0 at n = 0, <= 0 for n >= 2
        let c1 = obs.cross(1, n);
        if (n == 0 && c1 < -scale(1)) || (n >= 2 && c1 > scale(1)) {
            bad.push((n, 1));
        }
        // A_{n,2} [(1 - eta)^n - (1 - eta)^2]: >= 0 for n <= 1, <= 0 for n >= 2
        let c2 = obs.cross(2, n);
        if (n <= 1 && c2 < -scale(2)) || (n >= 2 && c2 > scale(2)) {
            bad.push((n, 2));
        }
    }
    bad
}
