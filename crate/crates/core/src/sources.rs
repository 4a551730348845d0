//! Photon-number statistics of the source architectures.
//!
//! Every multiplexed source is modelled as a row of heralded units (one
//! non-linear crystal plus a threshold detector on the idler). Unit `i` is
//! pumped so that `pump_mean_i * path_transmittance_i = mu`, the leftmost unit
//! whose detector fired is routed to the output, and unit 1 is routed when no
//! detector fires. Conditioning a Poisson pair number on the idler outcome and
//! thinning the signal photons through the switch path gives, for every
//! architecture,
//!
//! ```text
//! P_n = P_nc * Pois(mu (1 - eta))(n)
//!     + Pois(mu)(n) * sum_i w_i [1 - (1 - eta)^n exp(-eta (lambda_i - mu))]
//! ```
//!
//! where `w_i` is the probability that units `1..i-1` stay silent and
//! `P_nc` the probability that no unit fires. The per-architecture code
//! below only differs in how `w_i`, `lambda_i` and `P_nc` are obtained.

use crate::error::{Error, Result};

/// Below this distance from 1 the switch-chain sums are evaluated by series.
const GAMMA_SERIES_THRESHOLD: f64 = 1e-6;

/// Smallest branch probability that can be conditioned on.
const MIN_BRANCH_PROBABILITY: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SourceKind {
    /// Attenuated laser with Poisson photon statistics.
    Wcs,
    IdealSinglePhoton,
    /// Multiplexed heralded source with ideal detectors and a lossless m-to-1 switch.
    Mhps,
    /// Symmetric binary tree of 2-to-1 switches.
    Smhps,
    /// Asymmetric chain of 2-to-1 switches.
    Amhps,
}

impl SourceKind {
    pub fn name(self) -> &'static str {
        match self {
            SourceKind::Wcs => "wcs",
            SourceKind::IdealSinglePhoton => "single_photon",
            SourceKind::Mhps => "mhps",
            SourceKind::Smhps => "smhps",
            SourceKind::Amhps => "amhps",
        }
    }

    /// True for the architectures built from heralded units.
    pub fn is_multiplexed(self) -> bool {
        matches!(self, SourceKind::Mhps | SourceKind::Smhps | SourceKind::Amhps)
    }

    /// True for the architectures with finite-efficiency heralding detectors
    /// and lossy switches, i.e. the ones that support click/no-click splitting.
    pub fn has_heralding_detectors(self) -> bool {
        matches!(self, SourceKind::Smhps | SourceKind::Amhps)
    }
}

impl std::fmt::Display for SourceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A source architecture together with its parameters.
///
/// `m`, `eta` and `gamma` are ignored by the kinds that do not use them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceSpec {
    pub kind: SourceKind,
    /// Mean pair number scale (mean photon number for [`SourceKind::Wcs`]).
    pub mu: f64,
    /// Number of heralded units.
    pub m: u32,
    /// Heralding detector efficiency.
    pub eta: f64,
    /// 2-to-1 switch transmittance.
    pub gamma: f64,
}

impl SourceSpec {
    pub fn wcs(mu: f64) -> Self {
        Self { kind: SourceKind::Wcs, mu, m: 1, eta: 1.0, gamma: 1.0 }
    }

    pub fn single_photon() -> Self {
        Self { kind: SourceKind::IdealSinglePhoton, mu: 1.0, m: 1, eta: 1.0, gamma: 1.0 }
    }

    pub fn mhps(mu: f64, m: u32) -> Self {
        Self { kind: SourceKind::Mhps, mu, m, eta: 1.0, gamma: 1.0 }
    }

    pub fn smhps(mu: f64, m: u32, eta: f64, gamma: f64) -> Self {
        Self { kind: SourceKind::Smhps, mu, m, eta, gamma }
    }

    pub fn amhps(mu: f64, m: u32, eta: f64, gamma: f64) -> Self {
        Self { kind: SourceKind::Amhps, mu, m, eta, gamma }
    }

    /// Same architecture at a different pump level.
    pub fn with_mu(self, mu: f64) -> Self {
        Self { mu, ..self }
    }

    /// Checks the parameter invariants and hands the spec back unchanged.
    pub fn validate(self) -> Result<Self> {
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidRange(format!("mu = {} must be finite and >= 0", self.mu)));
        }
        match self.kind {
            SourceKind::Wcs | SourceKind::IdealSinglePhoton => {}
            SourceKind::Mhps => {
                if self.m < 1 {
                    return Err(Error::InvalidM("MHPS needs m >= 1".into()));
                }
            }
            SourceKind::Smhps | SourceKind::Amhps => {
                if self.kind == SourceKind::Smhps && !(self.m >= 1 && self.m.is_power_of_two()) {
                    return Err(Error::InvalidM(format!("SMHPS needs m a power of 2, got {}", self.m)));
                }
                if self.kind == SourceKind::Amhps && self.m < 2 {
                    return Err(Error::InvalidM(format!("AMHPS needs m >= 2, got {}", self.m)));
                }
                if !(0.0..=1.0).contains(&self.eta) {
                    return Err(Error::InvalidRange(format!("eta = {} outside [0, 1]", self.eta)));
                }
                if !(self.gamma > 0.0 && self.gamma <= 1.0) {
                    return Err(Error::InvalidRange(format!("gamma = {} outside (0, 1]", self.gamma)));
                }
            }
        }
        Ok(self)
    }

    /// Efficiency of the heralding detectors; the ideal MHPS has perfect ones.
    pub fn herald_efficiency(&self) -> f64 {
        match self.kind {
            SourceKind::Smhps | SourceKind::Amhps => self.eta,
            _ => 1.0,
        }
    }

    /// Depth of the SMHPS switch tree, `log2 m`.
    pub fn tree_depth(&self) -> u32 {
        self.m.trailing_zeros()
    }

    /// Number of switches traversed by the signal of unit `i` (1-based).
    pub fn switches_for_unit(&self, i: u32) -> u32 {
        match self.kind {
            SourceKind::Smhps => self.tree_depth(),
            SourceKind::Amhps => i.min(self.m - 1),
            _ => 0,
        }
    }

    /// Layout of the heralded units from left (highest priority) to right.
    pub fn herald_units(&self) -> Result<Vec<HeraldUnit>> {
        self.validate()?;
        if !self.kind.is_multiplexed() {
            return Err(Error::UnsupportedSource(self.kind.name()));
        }
        let gamma = if self.kind == SourceKind::Mhps { 1.0 } else { self.gamma };
        Ok((1..=self.m)
            .map(|i| {
                let switches = self.switches_for_unit(i);
                let path_transmittance = gamma.powi(switches as i32);
                HeraldUnit { pump_mean: self.mu / path_transmittance, switches, path_transmittance }
            })
            .collect())
    }
}

/// One crystal of a multiplexed source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeraldUnit {
    /// Mean number of pairs generated per pulse.
    pub pump_mean: f64,
    /// Number of 2-to-1 switches between the crystal and the output.
    pub switches: u32,
    /// `gamma^switches`.
    pub path_transmittance: f64,
}

/// Outcome of the heralding detectors used to split the output statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    /// At least one heralding detector fired.
    Click,
    /// No heralding detector fired.
    NoClick,
}

/// How far photon-number distributions are tabulated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPolicy {
    /// Tabulate at least `0..=min_n_max`.
    pub min_n_max: usize,
    /// Also cover `mean + spread * sqrt(mean)`.
    pub spread: f64,
    /// Grow `n_max` until the certified tail bound is below this.
    pub tail_tolerance: f64,
    pub max_n_max: usize,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self { min_n_max: 50, spread: 12.0, tail_tolerance: 1e-13, max_n_max: 100_000 }
    }
}

impl TruncationPolicy {
    /// Policy that tabulates at least `0..=n_max`.
    pub fn at_least(n_max: usize) -> Self {
        Self { min_n_max: n_max, ..Self::default() }
    }

    /// `n_max` for a distribution bounded by `envelope * Pois(mean)` in the tail.
    fn n_max(&self, mean: f64, envelope: f64) -> usize {
        let spread = (mean + self.spread * mean.sqrt()).ceil();
        let mut n = self.min_n_max.max(spread as usize);
        while n < self.max_n_max && envelope * poisson_tail_bound(mean, n + 1) > self.tail_tolerance {
            n += (n / 8).max(1);
        }
        n.min(self.max_n_max)
    }
}

/// A photon-number distribution tabulated on `0..=n_max`, plus a certified
/// upper bound on the probability mass beyond `n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonStatistics {
    probs: Vec<f64>,
    tail_mass: f64,
}

impl PhotonStatistics {
    pub fn new(probs: Vec<f64>, tail_mass: f64) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidRange("empty distribution".into()));
        }
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidRange(format!("probability {p} outside [0, 1]")));
        }
        if !(tail_mass >= 0.0 && tail_mass.is_finite()) {
            return Err(Error::InvalidRange(format!("tail mass {tail_mass}")));
        }
        Ok(Self { probs, tail_mass })
    }

    /// A pure photon-number state.
    pub fn fock(n: usize) -> Self {
        let mut probs = vec![0.0; n + 1];
        probs[n] = 1.0;
        Self { probs, tail_mass: 0.0 }
    }

    pub fn poisson(mean: f64, n_max: usize) -> Self {
        Self { probs: poisson_pmf(mean, n_max), tail_mass: poisson_tail_bound(mean, n_max + 1) }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn n_max(&self) -> usize {
        self.probs.len() - 1
    }

    /// `P_n`, zero beyond the table.
    pub fn get(&self, n: usize) -> f64 {
        self.probs.get(n).copied().unwrap_or(0.0)
    }

    /// Tabulated mass, `sum_n P_n` for `n <= n_max`.
    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Probability of two or more photons, including the untabulated tail.
    pub fn multi_photon(&self) -> f64 {
        self.probs.iter().skip(2).sum::<f64>() + self.tail_mass
    }

    /// `sum_n P_n x^n` over the table.
    pub fn weighted_sum(&self, x: f64) -> f64 {
        self.probs.iter().rev().fold(0.0, |acc, p| acc * x + p)
    }

    /// `sum_n P_n (1 - x^n)` over the table.
    pub fn weighted_complement(&self, x: f64) -> f64 {
        self.click_mass(1.0 - x)
    }

    /// `sum_n P_n [1 - (1 - efficiency)^n]`: probability that at least one
    /// photon survives independent per-photon losses. Accurate for tiny
    /// efficiencies.
    pub fn click_mass(&self, efficiency: f64) -> f64 {
        if efficiency >= 1.0 {
            return self.probs.iter().skip(1).sum();
        }
        let ln_x = (-efficiency).ln_1p();
        self.probs.iter().enumerate().skip(1).map(|(n, p)| p * -(n as f64 * ln_x).exp_m1()).sum()
    }
}

/// Probability that no heralding detector fires.
pub fn p_noclick(spec: &SourceSpec) -> Result<f64> {
    let spec = spec.validate()?;
    if !spec.kind.has_heralding_detectors() {
        return Err(Error::UnsupportedSource(spec.kind.name()));
    }
    Ok(Mixture::of(&spec).noclick)
}

/// Output photon-number distribution of `spec`.
pub fn pmf(spec: &SourceSpec, policy: &TruncationPolicy) -> Result<PhotonStatistics> {
    let spec = spec.validate()?;
    match spec.kind {
        SourceKind::IdealSinglePhoton => Ok(PhotonStatistics::fock(1)),
        SourceKind::Wcs => {
            let n_max = policy.n_max(spec.mu, 1.0);
            Ok(PhotonStatistics::poisson(spec.mu, n_max))
        }
        _ => {
            let mix = Mixture::of(&spec);
            let envelope = mix.noclick + mix.total_weight();
            let n_max = policy.n_max(spec.mu, envelope);
            let signal = poisson_pmf(spec.mu, n_max);
            let silent = poisson_pmf(spec.mu * (1.0 - mix.eta), n_max);
            let probs = (0..=n_max)
                .map(|n| (mix.noclick * silent[n] + signal[n] * mix.click_factor(n)).clamp(0.0, 1.0))
                .collect();
            Ok(PhotonStatistics { probs, tail_mass: envelope * poisson_tail_bound(spec.mu, n_max + 1) })
        }
    }
}

/// Output statistics conditioned on the heralding outcome.
pub fn pmf_conditional(spec: &SourceSpec, branch: Branch, policy: &TruncationPolicy) -> Result<PhotonStatistics> {
    let spec = spec.validate()?;
    if !spec.kind.has_heralding_detectors() {
        return Err(Error::UnsupportedSource(spec.kind.name()));
    }
    let mix = Mixture::of(&spec);
    match branch {
        Branch::NoClick => {
            // The first unit is routed out; the idler silence thins its pairs.
            let n_max = policy.n_max(spec.mu, 1.0);
            Ok(PhotonStatistics::poisson(spec.mu * (1.0 - spec.eta), n_max))
        }
        Branch::Click => {
            if mix.click < MIN_BRANCH_PROBABILITY {
                return Err(Error::DegenerateBranch(mix.click));
            }
            let envelope = mix.total_weight() / mix.click;
            let n_max = policy.n_max(spec.mu, envelope);
            let signal = poisson_pmf(spec.mu, n_max);
            let probs = (0..=n_max).map(|n| (signal[n] * mix.click_factor(n) / mix.click).clamp(0.0, 1.0)).collect();
            Ok(PhotonStatistics { probs, tail_mass: envelope * poisson_tail_bound(spec.mu, n_max + 1) })
        }
    }
}

/// Click and no-click statistics tabulated on a common `0..=n_max`.
pub fn branch_statistics(spec: &SourceSpec, policy: &TruncationPolicy) -> Result<(PhotonStatistics, PhotonStatistics)> {
    let click = pmf_conditional(spec, Branch::Click, policy)?;
    let common = TruncationPolicy { min_n_max: policy.min_n_max.max(click.n_max()), ..*policy };
    // The click envelope is never below 1, so the no-click table cannot be longer.
    let noclick = pmf_conditional(spec, Branch::NoClick, &common)?;
    debug_assert_eq!(click.n_max(), noclick.n_max());
    Ok((click, noclick))
}

/// Probability generating function `sum_n P_n x^n`, evaluated in closed form.
pub fn weighted_survival(spec: &SourceSpec, x: f64) -> Result<f64> {
    let spec = spec.validate()?;
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidRange(format!("x = {x} outside [0, 1]")));
    }
    let mu = spec.mu;
    Ok(match spec.kind {
        SourceKind::IdealSinglePhoton => x,
        SourceKind::Wcs => (-mu * (1.0 - x)).exp(),
        _ => {
            let mix = Mixture::of(&spec);
            let eta = mix.eta;
            let silent = (-mu * (1.0 - eta) * (1.0 - x)).exp();
            let all = (-mu * (1.0 - x)).exp();
            let undetected = (-mu * (1.0 - (1.0 - eta) * x)).exp();
            let clicked: f64 = mix.groups.iter().map(|g| g.weight * (all - (-g.excess).exp() * undetected)).sum();
            mix.noclick * silent + clicked
        }
    })
}

/// `sum_{j=1}^{a} gamma^{-j} = (gamma^{-a} - 1) / (1 - gamma)`.
pub fn chain_sum(a: u32, gamma: f64) -> f64 {
    let eps = 1.0 - gamma;
    if eps.abs() < GAMMA_SERIES_THRESHOLD {
        let a = a as f64;
        return a + a * (a + 1.0) / 2.0 * eps + a * (a + 1.0) * (a + 2.0) / 6.0 * eps * eps;
    }
    (-(a as f64) * gamma.ln()).exp_m1() / eps
}

/// `((2 - gamma) gamma^{1-m} - 1) / (1 - gamma)`, the total pump seen by the
/// AMHPS detectors in units of `mu`. Tends to `m` as `gamma -> 1`.
pub fn amhps_noclick_exponent(m: u32, gamma: f64) -> f64 {
    let eps = 1.0 - gamma;
    if eps.abs() < GAMMA_SERIES_THRESHOLD {
        let a = (m - 1) as f64;
        return (a + 1.0)
            + (a * (a + 1.0) / 2.0 + a) * eps
            + (a * (a + 1.0) * (a + 2.0) / 6.0 + a * (a + 1.0) / 2.0) * eps * eps;
    }
    // (2 - g) g^{1-m} - 1 = (g^{1-m} - 1) + (1 - g) g^{1-m}
    chain_sum(m - 1, gamma) + gamma.powi(1 - m as i32)
}

/// Units sharing a priority weight and a pump excess.
#[derive(Debug, Clone, Copy)]
struct UnitGroup {
    /// Sum of the probabilities that all units to the left stay silent.
    weight: f64,
    /// `eta (lambda - mu)`: extra idler detections from the photons lost in the switches.
    excess: f64,
}

/// Click/no-click decomposition of a multiplexed source.
#[derive(Debug, Clone)]
struct Mixture {
    eta: f64,
    noclick: f64,
    /// `1 - noclick`, computed without cancellation.
    click: f64,
    groups: Vec<UnitGroup>,
}

impl Mixture {
    fn of(spec: &SourceSpec) -> Self {
        let mu = spec.mu;
        let m = spec.m;
        match spec.kind {
            SourceKind::Mhps => {
                let weight = if mu > 0.0 { (-(m as f64) * mu).exp_m1() / (-mu).exp_m1() } else { m as f64 };
                Self {
                    eta: 1.0,
                    noclick: (-(m as f64) * mu).exp(),
                    click: -(-(m as f64) * mu).exp_m1(),
                    groups: vec![UnitGroup { weight, excess: 0.0 }],
                }
            }
            SourceKind::Smhps => {
                let eta = spec.eta;
                let k = spec.tree_depth() as i32;
                let lambda = mu * spec.gamma.powi(-k);
                let x = eta * lambda;
                let weight = if x > 0.0 { (-(m as f64) * x).exp_m1() / (-x).exp_m1() } else { m as f64 };
                let excess = eta * mu * (-(k as f64) * spec.gamma.ln()).exp_m1();
                Self {
                    eta,
                    noclick: (-(m as f64) * x).exp(),
                    click: -(-(m as f64) * x).exp_m1(),
                    groups: vec![UnitGroup { weight, excess }],
                }
            }
            SourceKind::Amhps => {
                let eta = spec.eta;
                let gamma = spec.gamma;
                let mut groups = Vec::new();
                for i in 1..=m {
                    let weight = (-eta * mu * chain_sum(i - 1, gamma)).exp();
                    if weight == 0.0 {
                        break;
                    }
                    let k_i = spec.switches_for_unit(i) as f64;
                    let excess = eta * mu * (-k_i * gamma.ln()).exp_m1();
                    groups.push(UnitGroup { weight, excess });
                }
                let exponent = eta * mu * amhps_noclick_exponent(m, gamma);
                Self { eta, noclick: (-exponent).exp(), click: -(-exponent).exp_m1(), groups }
            }
            SourceKind::Wcs | SourceKind::IdealSinglePhoton => {
                unreachable!("no heralded units for {}", spec.kind)
            }
        }
    }

    fn total_weight(&self) -> f64 {
        self.groups.iter().map(|g| g.weight).sum()
    }

    /// `sum_i w_i [1 - (1 - eta)^n exp(-excess_i)]`.
    fn click_factor(&self, n: usize) -> f64 {
        let ln_miss = if n == 0 { 0.0 } else { n as f64 * (-self.eta).ln_1p() };
        self.groups.iter().map(|g| g.weight * -(ln_miss - g.excess).exp_m1()).sum()
    }
}

/// `ln n!` for `n` in `0..=n_max`.
fn ln_factorials(n_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for n in 1..=n_max {
        acc += (n as f64).ln();
        out.push(acc);
    }
    out
}

/// Poisson pmf on `0..=n_max`, each term evaluated in log space.
pub(crate) fn poisson_pmf(mean: f64, n_max: usize) -> Vec<f64> {
    if mean <= 0.0 {
        let mut probs = vec![0.0; n_max + 1];
        probs[0] = 1.0;
        return probs;
    }
    let ln_mean = mean.ln();
    ln_factorials(n_max)
        .into_iter()
        .enumerate()
        .map(|(n, ln_fact)| (n as f64 * ln_mean - mean - ln_fact).exp())
        .collect()
}

/// Upper bound on `sum_{n >= from} Pois(mean)(n)`.
pub(crate) fn poisson_tail_bound(mean: f64, from: usize) -> f64 {
    if mean <= 0.0 {
        return if from == 0 { 1.0 } else { 0.0 };
    }
    let ratio = mean / (from as f64 + 1.0);
    if ratio >= 1.0 {
        return 1.0;
    }
    let ln_fact: f64 = (1..=from).map(|k| (k as f64).ln()).sum();
    let head = (from as f64 * mean.ln() - mean - ln_fact).exp();
    (head / (1.0 - ratio)).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn policy() -> TruncationPolicy {
        TruncationPolicy::default()
    }

    #[test]
    fn validate_accepts_reference_smhps() {
        let spec = SourceSpec::smhps(0.1, 4, 0.7, 0.5);
        assert_eq!(spec.validate(), Ok(spec));
    }

    #[test]
    fn validate_rejects_bad_m() {
        assert!(matches!(SourceSpec::smhps(0.1, 3, 0.7, 0.5).validate(), Err(Error::InvalidM(_))));
        assert!(matches!(SourceSpec::amhps(0.1, 1, 0.7, 0.5).validate(), Err(Error::InvalidM(_))));
        assert!(matches!(SourceSpec::mhps(0.1, 0).validate(), Err(Error::InvalidM(_))));
    }

    #[test]
    fn validate_rejects_out_of_range() {
        assert!(matches!(SourceSpec::mhps(-0.1, 4).validate(), Err(Error::InvalidRange(_))));
        assert!(matches!(SourceSpec::smhps(0.1, 4, 1.2, 0.5).validate(), Err(Error::InvalidRange(_))));
        assert!(matches!(SourceSpec::amhps(0.1, 4, 0.7, 0.0).validate(), Err(Error::InvalidRange(_))));
        assert!(matches!(SourceSpec::wcs(f64::NAN).validate(), Err(Error::InvalidRange(_))));
    }

    #[test]
    fn mhps_vacuum_probability() {
        let stats = pmf(&SourceSpec::mhps(0.1, 4), &policy()).unwrap();
        assert!((stats.get(0) - (-0.4f64).exp()).abs() < 1e-15);
        assert!((stats.get(0) - 0.670320).abs() < 1e-6);
    }

    #[test]
    fn mhps_single_unit_is_poisson() {
        for mu in [0.05, 0.3, 1.7] {
            let stats = pmf(&SourceSpec::mhps(mu, 1), &policy()).unwrap();
            let reference = poisson_pmf(mu, stats.n_max());
            for (a, b) in stats.probs().iter().zip(&reference) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn ideal_single_photon_is_fock_one() {
        let stats = pmf(&SourceSpec::single_photon(), &policy()).unwrap();
        assert_eq!(stats.probs(), &[0.0, 1.0]);
        assert_eq!(stats.tail_mass(), 0.0);
    }

    #[test]
    fn smhps_reference_values() {
        // high-precision evaluation of the closed form (typo-repaired first term)
        let expected =
            [0.789_452_206_892_100_5, 0.198_416_026_003_660_5, 0.011_712_863_379_899_78, 0.000_408_349_400_127_160_3];
        let stats = pmf(&SourceSpec::smhps(0.1, 4, 0.7, 0.5), &policy()).unwrap();
        for (n, e) in expected.iter().enumerate() {
            assert!((stats.get(n) - e).abs() < 1e-14, "n={n}: {} vs {e}", stats.get(n));
        }
    }

    #[test]
    fn amhps_reference_values() {
        let expected =
            [0.653_432_625_382_416, 0.307_825_420_498_044_9, 0.036_096_708_912_451_35, 0.002_512_730_598_083_027];
        let stats = pmf(&SourceSpec::amhps(0.2, 8, 0.7, 0.5), &policy()).unwrap();
        for (n, e) in expected.iter().enumerate() {
            assert!((stats.get(n) - e).abs() < 1e-14, "n={n}: {} vs {e}", stats.get(n));
        }
    }

    #[test]
    fn noclick_reference_values() {
        assert_eq!(p_noclick(&SourceSpec::smhps(0.1, 4, 0.0, 0.5)).unwrap(), 1.0);
        let p = p_noclick(&SourceSpec::smhps(0.1, 4, 0.7, 0.5)).unwrap();
        assert!((p - (-1.12f64).exp()).abs() < 1e-15);
        assert!((p - 0.326280).abs() < 1e-6);
        assert!(matches!(p_noclick(&SourceSpec::wcs(0.1)), Err(Error::UnsupportedSource(_))));
        assert!(matches!(p_noclick(&SourceSpec::mhps(0.1, 4)), Err(Error::UnsupportedSource(_))));
    }

    #[test]
    fn amhps_exponent_near_unit_transmittance() {
        // mpmath: ((2-g) g^(1-m) - 1)/(1-g) at m = 8
        assert!((amhps_noclick_exponent(8, 0.999) - 8.035_112_294_673_389).abs() < 1e-9);
        assert!((amhps_noclick_exponent(8, 0.999_999) - 8.000_035_000_112_000).abs() < 1e-12);
        assert!((amhps_noclick_exponent(8, 0.999_999_99) - 8.000_000_350_000_011).abs() < 1e-12);
        for m in [2, 5, 32, 128] {
            assert!((amhps_noclick_exponent(m, 1.0) - m as f64).abs() < 1e-15);
            // closed form on both sides of the series threshold
            let below = amhps_noclick_exponent(m, 1.0 - 0.99e-6);
            let above = amhps_noclick_exponent(m, 1.0 - 1.01e-6);
            assert!((below - above).abs() < 1e-6 * m as f64 * m as f64);
        }
    }

    #[test]
    fn chain_sum_matches_direct_summation() {
        for gamma in [0.3f64, 0.5, 0.9, 0.999_999_5, 1.0] {
            for a in [0u32, 1, 2, 7, 20] {
                let direct: f64 = (1..=a).map(|j| gamma.powi(-(j as i32))).sum();
                let closed = chain_sum(a, gamma);
                assert!((closed - direct).abs() <= 1e-10 * direct.max(1.0), "a={a} gamma={gamma}");
            }
        }
    }

    #[test]
    fn noclick_branch_is_thinned_poisson() {
        for spec in [SourceSpec::smhps(0.1, 4, 0.7, 0.5), SourceSpec::amhps(0.1, 8, 0.7, 0.5)] {
            let stats = pmf_conditional(&spec, Branch::NoClick, &policy()).unwrap();
            let reference = poisson_pmf(0.03, stats.n_max());
            for (a, b) in stats.probs().iter().zip(&reference) {
                assert!((a - b).abs() < 1e-16);
            }
        }
    }

    #[test]
    fn click_branch_degenerate_without_detectors() {
        let spec = SourceSpec::smhps(0.3, 4, 0.0, 0.5);
        assert!(matches!(pmf_conditional(&spec, Branch::Click, &policy()), Err(Error::DegenerateBranch(_))));
        assert!(matches!(
            pmf_conditional(&SourceSpec::wcs(0.3), Branch::Click, &policy()),
            Err(Error::UnsupportedSource(_))
        ));
    }

    #[test]
    fn branch_statistics_share_support() {
        let (click, noclick) = branch_statistics(&SourceSpec::amhps(2.5, 8, 0.7, 0.5), &policy()).unwrap();
        assert_eq!(click.n_max(), noclick.n_max());
    }

    #[test]
    fn zero_pump_gives_vacuum() {
        for spec in [
            SourceSpec::wcs(0.0),
            SourceSpec::mhps(0.0, 8),
            SourceSpec::smhps(0.0, 8, 0.7, 0.5),
            SourceSpec::amhps(0.0, 8, 0.7, 0.5),
        ] {
            let stats = pmf(&spec, &policy()).unwrap();
            assert_eq!(stats.get(0), 1.0, "{spec:?}");
        }
    }

    #[test]
    fn generating_function_reference_points() {
        for spec in [SourceSpec::wcs(0.4), SourceSpec::smhps(0.3, 8, 0.7, 0.5), SourceSpec::amhps(1.0, 32, 0.7, 0.5)] {
            assert!((weighted_survival(&spec, 1.0).unwrap() - 1.0).abs() < 1e-12);
        }
        let g = weighted_survival(&SourceSpec::wcs(0.4), 0.7).unwrap();
        assert!((g - (-0.4f64 * 0.3).exp()).abs() < 1e-15);
        // mpmath term-by-term sum of the closed-form pmf
        let g = weighted_survival(&SourceSpec::smhps(0.3, 8, 0.7, 0.5), 0.9).unwrap();
        assert!((g - 0.965_727_993_675_492_6).abs() < 1e-13);
        assert!(weighted_survival(&SourceSpec::wcs(0.4), 1.5).is_err());
    }

    #[test]
    fn generating_function_matches_refined_truncation() {
        let spec = SourceSpec::smhps(0.3, 8, 0.7, 0.5);
        let stats = pmf(&spec, &policy()).unwrap();
        let refined = pmf(&spec, &TruncationPolicy::at_least(2 * stats.n_max())).unwrap();
        let closed = weighted_survival(&spec, 0.9).unwrap();
        assert!((refined.weighted_sum(0.9) - closed).abs() <= stats.tail_mass() + 1e-15);
        assert!((stats.weighted_sum(0.9) - closed).abs() <= stats.tail_mass() + 1e-15);
    }

    #[test]
    fn truncation_covers_large_pump() {
        let stats = pmf(&SourceSpec::wcs(40.0), &policy()).unwrap();
        assert!(stats.n_max() > 40 + 12 * 6);
        assert!(stats.tail_mass() <= 1e-12);
        assert!((stats.total() + stats.tail_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn deep_amhps_chain_stays_finite() {
        let stats = pmf(&SourceSpec::amhps(0.5, 128, 0.7, 0.5), &policy()).unwrap();
        assert!(stats.probs().iter().all(|p| p.is_finite()));
        assert!((stats.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weighted_complement_is_one_minus_weighted_sum() {
        let stats = pmf(&SourceSpec::amhps(0.4, 8, 0.7, 0.5), &policy()).unwrap();
        for x in [0.0, 0.3, 0.999_999] {
            let direct = stats.total() - stats.weighted_sum(x);
            assert!((stats.weighted_complement(x) - direct).abs() < 1e-13);
        }
    }
}
