//! Depolarizing lossy channel followed by a two-detector threshold receiver.

use crate::error::{Error, Result};
use crate::sources::PhotonStatistics;

/// Error probability of a dark-count click.
pub const DARK_ERROR: f64 = 0.5;

/// How the background is combined with the signal in the yield of an
/// `n`-photon pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum YieldModel {
    /// `Y_n = Y_0 + eta_n`.
    #[default]
    Approximate,
    /// `Y_n = Y_0 + eta_n - Y_0 eta_n`.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelDetectorSpec {
    /// Channel loss in dB.
    pub loss_db: f64,
    pub visibility: f64,
    /// Optical transmittance of the receiver.
    pub t_b: f64,
    /// Quantum efficiency of Bob's detectors.
    pub eta_b: f64,
    /// Per-detector dark-count probability.
    pub p_dark: f64,
    pub yield_model: YieldModel,
}

impl ChannelDetectorSpec {
    /// Typical fibre link: V = 0.99, t_B = 1, eta_B = 0.25, p_d = 2e-7.
    pub fn fibre(loss_db: f64) -> Self {
        Self { loss_db, visibility: 0.99, t_b: 1.0, eta_b: 0.25, p_dark: 2e-7, yield_model: YieldModel::Approximate }
    }

    pub fn with_loss(self, loss_db: f64) -> Self {
        Self { loss_db, ..self }
    }

    pub fn validate(self) -> Result<Self> {
        if self.loss_db < 0.0 {
            return Err(Error::NegativeLoss(self.loss_db));
        }
        if !self.loss_db.is_finite() {
            return Err(Error::InvalidRange(format!("loss {} dB", self.loss_db)));
        }
        for (name, value) in
            [("visibility", self.visibility), ("t_b", self.t_b), ("eta_b", self.eta_b), ("p_dark", self.p_dark)]
        {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::InvalidRange(format!("{name} = {value} outside [0, 1]")));
            }
        }
        Ok(self)
    }

    /// `10^(-L/10)`.
    pub fn transmittance(&self) -> f64 {
        10f64.powf(-self.loss_db / 10.0)
    }

    /// Probability that a single photon reaches and triggers a detector.
    pub fn photon_efficiency(&self) -> f64 {
        self.eta_b * self.t_b * self.transmittance()
    }

    /// Background yield, `2 p_d` for two detectors.
    pub fn dark_yield(&self) -> f64 {
        2.0 * self.p_dark
    }

    /// Probability that a photon hits the wrong detector, `(1 - V)/2`.
    pub fn misalignment_error(&self) -> f64 {
        (1.0 - self.visibility) / 2.0
    }

    /// `eta_n = 1 - (1 - eta_B t_B t)^n`.
    pub fn detection_prob(&self, n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        -(n as f64 * (-self.photon_efficiency()).ln_1p()).exp_m1()
    }

    pub fn predicted_yield(&self, n: usize) -> f64 {
        let y0 = self.dark_yield();
        let eta_n = self.detection_prob(n);
        match self.yield_model {
            YieldModel::Approximate => y0 + eta_n,
            YieldModel::Exact => y0 + eta_n - y0 * eta_n,
        }
    }

    pub fn predicted_error(&self, n: usize) -> Result<f64> {
        let yield_n = self.predicted_yield(n);
        if yield_n <= 0.0 {
            return Err(Error::ZeroYield(n));
        }
        Ok((DARK_ERROR * self.dark_yield() + self.misalignment_error() * self.detection_prob(n)) / yield_n)
    }

    /// Gain and QBER that an experiment with source statistics `stats` would
    /// measure on this channel.
    pub fn predict_observation(&self, stats: &PhotonStatistics) -> ObservedChannel {
        let y0 = self.dark_yield();
        // 1 - sum_n P_n (1 - eta_B t_B t)^n
        let signal = stats.click_mass(self.photon_efficiency());
        let gain = match self.yield_model {
            YieldModel::Approximate => y0 + signal,
            YieldModel::Exact => y0 + (1.0 - y0) * signal,
        };
        let errors = DARK_ERROR * y0 + self.misalignment_error() * signal;
        let qber = if gain > 0.0 { errors / gain } else { DARK_ERROR };
        ObservedChannel { gain, qber }
    }
}

/// `10^(-L/10)`, rejecting negative losses.
pub fn transmittance(loss_db: f64) -> Result<f64> {
    if loss_db < 0.0 {
        return Err(Error::NegativeLoss(loss_db));
    }
    Ok(10f64.powf(-loss_db / 10.0))
}

/// Measured gain `Q` and bit error rate `E`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservedChannel {
    pub gain: f64,
    pub qber: f64,
}

impl ObservedChannel {
    /// `Q E`, the probability of an erroneous click.
    pub fn error_gain(&self) -> f64 {
        self.gain * self.qber
    }

    /// Observation of a mixture of two sub-ensembles with weights `a` and `b`.
    pub fn mix(a: f64, first: &Self, b: f64, second: &Self) -> Self {
        let gain = a * first.gain + b * second.gain;
        let errors = a * first.error_gain() + b * second.error_gain();
        Self { gain, qber: if gain > 0.0 { errors / gain } else { DARK_ERROR } }
    }
}
