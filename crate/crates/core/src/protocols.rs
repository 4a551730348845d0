//! Asymptotic BB84 key rates per sifted pulse.

use crate::channel::{ChannelDetectorSpec, ObservedChannel};
use crate::error::{Error, Result};
use crate::estimation::{self, BranchObservations};
use crate::sources::{self, PhotonStatistics, SourceSpec, TruncationPolicy};

/// Binary Shannon entropy in bits.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::OutOfDomain(x));
    }
    Ok(entropy(x))
}

fn entropy(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
}

/// Inputs shared by the no-decoy and active-decoy rate formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateInputs {
    pub p0: f64,
    pub p1: f64,
    /// Fraction of detections due to multi-photon pulses.
    pub delta: f64,
    pub y0: f64,
    pub y1: f64,
    pub e1: f64,
    pub observed: ObservedChannel,
    /// Error-correction inefficiency.
    pub f_ec: f64,
}

impl RateInputs {
    /// Inputs for a source whose channel parameters are known exactly, the
    /// way an ideal decoy analysis would recover them.
    pub fn from_statistics(stats: &PhotonStatistics, channel: &ChannelDetectorSpec, f_ec: f64) -> Self {
        let observed = channel.predict_observation(stats);
        let delta = if observed.gain > 0.0 { stats.multi_photon() / observed.gain } else { 1.0 };
        let y1 = channel.predicted_yield(1);
        Self {
            p0: stats.get(0),
            p1: stats.get(1),
            delta,
            y0: channel.dark_yield(),
            y1,
            // predicted_error(1) only fails on a zero yield
            e1: channel.predicted_error(1).unwrap_or(0.5),
            observed,
            f_ec,
        }
    }
}

/// Key rate without decoy states, with every multi-photon detection assumed
/// known to the eavesdropper.
pub fn rate_no_decoy(inputs: &RateInputs) -> f64 {
    let ObservedChannel { gain, qber } = inputs.observed;
    let single = 1.0 - inputs.delta;
    if single <= 0.0 {
        return 0.0;
    }
    let effective = qber / single;
    if effective >= 0.5 {
        return 0.0;
    }
    let rate = gain * (single * (1.0 - entropy(effective)) - inputs.f_ec * entropy(qber));
    rate.max(0.0)
}

/// Key rate with decoy states and exactly known `Y_0`, `Y_1`, `e_1`.
pub fn rate_active_decoy(inputs: &RateInputs) -> f64 {
    let ObservedChannel { gain, qber } = inputs.observed;
    let rate =
        inputs.p0 * inputs.y0 + inputs.p1 * inputs.y1 * (1.0 - entropy(inputs.e1)) - gain * inputs.f_ec * entropy(qber);
    rate.max(0.0)
}

/// Per-branch contribution of the passive scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchRate {
    pub probability: f64,
    pub observed: ObservedChannel,
    /// Branch key rate after clamping at zero.
    pub rate: f64,
}

/// Bounds used by the passive scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassiveBounds {
    pub y0_lower: f64,
    pub y0_upper: f64,
    pub y1_lower: f64,
    /// `None` when `y1_lower` is zero and the single-photon term is dropped.
    pub e1_upper: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PassiveRate {
    pub rate: f64,
    pub click: BranchRate,
    pub noclick: BranchRate,
    pub bounds: PassiveBounds,
}

impl PassiveRate {
    /// Gain and QBER of the whole pulse train.
    pub fn total_observation(&self) -> ObservedChannel {
        ObservedChannel::mix(
            self.click.probability,
            &self.click.observed,
            self.noclick.probability,
            &self.noclick.observed,
        )
    }
}

/// Key rate of the passive one-decoy scheme where the heralding outcome
/// splits the pulses into two statistics, each post-processed separately.
pub fn rate_passive_decoy(source: &SourceSpec, channel: &ChannelDetectorSpec, f_ec: f64) -> Result<PassiveRate> {
    rate_passive_decoy_with(source, channel, f_ec, &TruncationPolicy::default())
}

pub fn rate_passive_decoy_with(
    source: &SourceSpec,
    channel: &ChannelDetectorSpec,
    f_ec: f64,
    policy: &TruncationPolicy,
) -> Result<PassiveRate> {
    let channel = channel.validate()?;
    let p_noclick = sources::p_noclick(source)?;
    let obs = BranchObservations::predict(source, &channel, policy)?;
    let (y0_lower, y0_upper) = estimation::y0_bounds(&obs)?;
    let y1_lower = estimation::y1_lower(&obs, y0_upper)?;
    let e1_upper = match estimation::e1_upper(&obs, y0_lower, y1_lower) {
        Ok(e) => Some(e),
        Err(Error::DegenerateBounds) => None,
        Err(e) => return Err(e),
    };
    let bounds = PassiveBounds { y0_lower, y0_upper, y1_lower, e1_upper };

    let branch_rate = |stats: &PhotonStatistics, observed: &ObservedChannel| {
        let single = match e1_upper {
            Some(e1) => stats.get(1) * y1_lower * (1.0 - entropy(e1)),
            None => 0.0,
        };
        let rate = stats.get(0) * y0_lower + single - observed.gain * f_ec * entropy(observed.qber);
        rate.max(0.0)
    };
    let p_click = 1.0 - p_noclick;
    let click =
        BranchRate { probability: p_click, observed: obs.click, rate: branch_rate(&obs.stats_click, &obs.click) };
    let noclick = BranchRate {
        probability: p_noclick,
        observed: obs.noclick,
        rate: branch_rate(&obs.stats_noclick, &obs.noclick),
    };
    Ok(PassiveRate {
        rate: click.probability * click.rate + noclick.probability * noclick.rate,
        click,
        noclick,
        bounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sources::pmf;

    fn inputs(delta: f64, qber: f64) -> RateInputs {
        RateInputs {
            p0: 0.0,
            p1: 1.0,
            delta,
            y0: 0.0,
            y1: 0.3,
            e1: 0.0,
            observed: ObservedChannel { gain: 0.3, qber },
            f_ec: 1.05,
        }
    }

    #[test]
    fn entropy_values() {
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!((binary_entropy(0.5).unwrap() - 1.0).abs() < 1e-15);
        // 40-digit mpmath evaluation
        assert!((binary_entropy(0.11).unwrap() - 0.499_915_958_164_528).abs() < 1e-15);
        for x in [0.1, 0.3] {
            assert!((binary_entropy(x).unwrap() - binary_entropy(1.0 - x).unwrap()).abs() < 1e-15);
        }
        assert_eq!(binary_entropy(1.5), Err(Error::OutOfDomain(1.5)));
        assert!(binary_entropy(-0.1).is_err());
    }

    #[test]
    fn no_decoy_limits() {
        assert!((rate_no_decoy(&inputs(0.0, 0.0)) - 0.3).abs() < 1e-15);
        assert_eq!(rate_no_decoy(&inputs(1.0, 0.01)), 0.0);
        assert_eq!(rate_no_decoy(&inputs(1.3, 0.01)), 0.0);
        // E/(1 - delta) above 1/2 aborts
        assert_eq!(rate_no_decoy(&inputs(0.9, 0.06)), 0.0);
    }

    #[test]
    fn single_photon_reduces_to_simple_formula() {
        let ch = ChannelDetectorSpec::fibre(0.0);
        let inp = RateInputs::from_statistics(&PhotonStatistics::fock(1), &ch, 1.05);
        assert_eq!(inp.delta, 0.0);
        let e = inp.observed.qber;
        let expected = inp.observed.gain * (1.0 - 2.05 * entropy(e));
        assert_eq!(rate_no_decoy(&inp), expected);
        // mpmath value of Y_1 [1 - (1 + f) h(e_1)] at 0 dB
        assert!((expected - 0.226_722_233_279_558_6).abs() < 1e-14);
    }

    #[test]
    fn active_decoy_limits() {
        let mut inp = inputs(0.0, 0.0);
        assert!((rate_active_decoy(&inp) - 0.3).abs() < 1e-15);
        inp.e1 = 0.5;
        inp.observed.qber = 0.0;
        assert_eq!(rate_active_decoy(&inp), 0.0);
    }

    #[test]
    fn active_decoy_wcs_reference() {
        // independent arithmetic in 40-digit precision
        let stats = pmf(&SourceSpec::wcs(0.5), &TruncationPolicy::default()).unwrap();
        let inp = RateInputs::from_statistics(&stats, &ChannelDetectorSpec::fibre(20.0), 1.05);
        assert!((inp.observed.gain - 0.001_249_619_075_419_133_5).abs() < 1e-18);
        assert!((inp.observed.qber - 0.005_158_448_285_477_388).abs() < 1e-14);
        assert!((rate_active_decoy(&inp) - 0.000_662_460_566_329_796_3).abs() < 1e-15);
    }

    #[test]
    fn passive_decoy_without_click_information_is_zero_rate() {
        let r = rate_passive_decoy(&SourceSpec::amhps(0.25, 4, 0.0, 0.5), &ChannelDetectorSpec::fibre(5.0), 1.05);
        assert!(matches!(r, Err(Error::DegenerateBranch(_))));
    }

    #[test]
    fn passive_decoy_positive_in_clean_channel() {
        let ch = ChannelDetectorSpec { p_dark: 0.0, visibility: 1.0, ..ChannelDetectorSpec::fibre(3.0) };
        let r = rate_passive_decoy(&SourceSpec::amhps(0.25, 4, 0.7, 0.5), &ch, 1.05).unwrap();
        assert!(r.rate > 0.0);
        assert!(r.bounds.e1_upper.unwrap() >= 0.0);
        assert_eq!(r.bounds.y0_lower, 0.0);
    }

    #[test]
    fn passive_decoy_mixture_of_gains() {
        let spec = SourceSpec::smhps(0.4, 8, 0.7, 0.5);
        let ch = ChannelDetectorSpec::fibre(12.0);
        let r = rate_passive_decoy(&spec, &ch, 1.05).unwrap();
        let total = ch.predict_observation(&pmf(&spec, &TruncationPolicy::default()).unwrap());
        let mixed = r.total_observation();
        assert!((mixed.gain - total.gain).abs() < 1e-12);
        assert!((mixed.qber - total.qber).abs() < 1e-12);
    }

    #[test]
    fn passive_decoy_rejects_unheralded_sources() {
        for spec in [SourceSpec::wcs(0.3), SourceSpec::mhps(0.3, 4)] {
            assert!(matches!(
                rate_passive_decoy(&spec, &ChannelDetectorSpec::fibre(0.0), 1.05),
                Err(Error::UnsupportedSource(_))
            ));
        }
    }
}
