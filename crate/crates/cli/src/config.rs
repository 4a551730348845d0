//! Experiment configuration files.
//!
//! A config is a TOML document with the sections `[source]`, `[channel]`,
//! `[receiver]`, `[protocol]`, `[optimizer]`, `[mc]` and `[output]`. Every
//! section and key is optional except `source.kind`; unknown keys are
//! rejected. See `docs/formats.md` for the full grammar.

use std::path::Path;

use hsqkd::optimizer::{Protocol, Scenario, SearchConfig, DEFAULT_F_EC};
use hsqkd::{ChannelDetectorSpec, SourceKind, SourceSpec, YieldModel};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKindName {
    Wcs,
    SinglePhoton,
    Mhps,
    Smhps,
    Amhps,
}

impl From<SourceKindName> for SourceKind {
    fn from(k: SourceKindName) -> Self {
        match k {
            SourceKindName::Wcs => SourceKind::Wcs,
            SourceKindName::SinglePhoton => SourceKind::IdealSinglePhoton,
            SourceKindName::Mhps => SourceKind::Mhps,
            SourceKindName::Smhps => SourceKind::Smhps,
            SourceKindName::Amhps => SourceKind::Amhps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolName {
    #[default]
    NoDecoy,
    ActiveDecoy,
    PassiveDecoy,
}

impl From<ProtocolName> for Protocol {
    fn from(p: ProtocolName) -> Self {
        match p {
            ProtocolName::NoDecoy => Protocol::NoDecoy,
            ProtocolName::ActiveDecoy => Protocol::ActiveDecoy,
            ProtocolName::PassiveDecoy => Protocol::PassiveDecoy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    pub kind: SourceKindName,
    #[serde(default = "one")]
    pub m: u32,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Pump level for Monte Carlo validation.
    pub mu: Option<f64>,
    pub mu_min: Option<f64>,
    pub mu_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    #[serde(default = "default_visibility")]
    pub visibility: f64,
    /// Explicit loss grid in dB.
    pub losses: Option<Vec<f64>>,
    pub loss_start: Option<f64>,
    pub loss_stop: Option<f64>,
    pub loss_step: Option<f64>,
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self { visibility: default_visibility(), losses: None, loss_start: None, loss_stop: None, loss_step: None }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiverSection {
    #[serde(default = "one_f")]
    pub t_b: f64,
    #[serde(default = "default_eta_b")]
    pub eta_b: f64,
    #[serde(default = "default_p_dark")]
    pub p_dark: f64,
    /// Use `Y_n = Y_0 + eta_n - Y_0 eta_n` instead of `Y_0 + eta_n`.
    #[serde(default)]
    pub exact_yield: bool,
}

impl Default for ReceiverSection {
    fn default() -> Self {
        Self { t_b: 1.0, eta_b: default_eta_b(), p_dark: default_p_dark(), exact_yield: false }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    #[serde(default)]
    pub kind: ProtocolName,
    #[serde(default = "default_f_ec")]
    pub f_ec: f64,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        Self { kind: ProtocolName::NoDecoy, f_ec: DEFAULT_F_EC }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        Self { grid_points: default_grid_points(), rel_tol: default_rel_tol() }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_tv_tolerance")]
    pub tv_tolerance: f64,
    #[serde(default = "default_click_tolerance")]
    pub click_tolerance: f64,
}

impl Default for McSection {
    fn default() -> Self {
        Self {
            trials: default_trials(),
            seed: 0,
            tv_tolerance: default_tv_tolerance(),
            click_tolerance: default_click_tolerance(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// File stem and column label; derived from the source and protocol
    /// when absent.
    pub name: Option<String>,
    #[serde(default)]
    pub svg: bool,
}

/// A parsed config file, before cross-field validation.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub source: SourceSection,
    #[serde(default)]
    pub channel: ChannelSection,
    #[serde(default)]
    pub receiver: ReceiverSection,
    #[serde(default)]
    pub protocol: ProtocolSection,
    #[serde(default)]
    pub optimizer: OptimizerSection,
    #[serde(default)]
    pub mc: McSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn one() -> u32 {
    1
}
fn one_f() -> f64 {
    1.0
}
fn default_eta() -> f64 {
    0.7
}
fn default_gamma() -> f64 {
    0.5
}
fn default_visibility() -> f64 {
    0.99
}
fn default_eta_b() -> f64 {
    0.25
}
fn default_p_dark() -> f64 {
    2e-7
}
fn default_f_ec() -> f64 {
    DEFAULT_F_EC
}
fn default_grid_points() -> usize {
    64
}
fn default_rel_tol() -> f64 {
    1e-4
}
fn default_trials() -> u64 {
    1_000_000
}
fn default_tv_tolerance() -> f64 {
    5e-3
}
fn default_click_tolerance() -> f64 {
    3e-3
}

/// Validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub scenario: Scenario,
    pub search: SearchConfig,
    /// Empty when the config has no loss grid.
    pub losses: Vec<f64>,
    pub mu: Option<f64>,
    pub mc: McSection,
    pub svg: bool,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| e.in_file(path))
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        Self::from_raw(raw)
    }

    pub fn from_raw(raw: RawConfig) -> Result<Self, CliError> {
        let kind = SourceKind::from(raw.source.kind);
        let protocol = Protocol::from(raw.protocol.kind);
        let s = &raw.source;
        let template = SourceSpec { kind, mu: s.mu.unwrap_or(1.0), m: s.m, eta: s.eta, gamma: s.gamma };
        let channel = ChannelDetectorSpec {
            loss_db: 0.0,
            visibility: raw.channel.visibility,
            t_b: raw.receiver.t_b,
            eta_b: raw.receiver.eta_b,
            p_dark: raw.receiver.p_dark,
            yield_model: if raw.receiver.exact_yield { YieldModel::Exact } else { YieldModel::Approximate },
        };
        let scenario = Scenario { source: template, protocol, channel, f_ec: raw.protocol.f_ec };
        if !protocol.supports(kind) {
            return Err(CliError::Config(format!(
                "{} requires a source with heralding detectors, got {}",
                protocol,
                kind.name()
            )));
        }
        let scenario = scenario.validate().map_err(CliError::model)?;
        if let Some(mu) = s.mu {
            template.validate().map_err(CliError::model)?;
            if !(mu > 0.0) && kind != SourceKind::IdealSinglePhoton {
                return Err(CliError::Config(format!("source.mu = {mu} must be > 0")));
            }
        }

        let defaults = SearchConfig::default();
        let search = SearchConfig {
            mu_min: s.mu_min.unwrap_or(defaults.mu_min),
            mu_max: s.mu_max.unwrap_or(defaults.mu_max),
            grid_points: raw.optimizer.grid_points,
            rel_tol: raw.optimizer.rel_tol,
            truncation: defaults.truncation,
        }
        .validate()
        .map_err(CliError::model)?;

        if raw.mc.trials == 0 {
            return Err(CliError::model(hsqkd::Error::InvalidTrials(0)));
        }
        if !(raw.mc.tv_tolerance > 0.0 && raw.mc.click_tolerance > 0.0) {
            return Err(CliError::Config("mc tolerances must be > 0".into()));
        }

        let losses = loss_grid(&raw.channel)?;
        let name = match raw.output.name {
            Some(n) if valid_name(&n) => n,
            Some(n) => return Err(CliError::Config(format!("output.name {n:?} must match [A-Za-z0-9_.-]+"))),
            None => default_name(&template, protocol),
        };
        Ok(Self { name, scenario, search, losses, mu: s.mu, mc: raw.mc, svg: raw.output.svg })
    }

    /// The loss grid, or a config error if there is none.
    pub fn require_losses(&self) -> Result<&[f64], CliError> {
        if self.losses.is_empty() {
            return Err(CliError::Config(format!("{}: empty loss grid", self.name)));
        }
        Ok(&self.losses)
    }

    /// Source at the configured pump level.
    pub fn source_at_mu(&self) -> Result<SourceSpec, CliError> {
        let mu = self.mu.ok_or_else(|| CliError::Config(format!("{}: source.mu is required", self.name)))?;
        Ok(self.scenario.source.with_mu(mu))
    }
}

fn valid_name(name: &str) -> bool {
    !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || "_.-".contains(c))
}

fn default_name(source: &SourceSpec, protocol: Protocol) -> String {
    match source.kind {
        SourceKind::Wcs | SourceKind::IdealSinglePhoton => format!("{}_{}", source.kind, protocol),
        _ => format!("{}_m{}_{}", source.kind, source.m, protocol),
    }
}

fn loss_grid(c: &ChannelSection) -> Result<Vec<f64>, CliError> {
    let range = (c.loss_start, c.loss_stop, c.loss_step);
    let losses = match (&c.losses, range) {
        (Some(_), (Some(_), _, _) | (_, Some(_), _) | (_, _, Some(_))) => {
            return Err(CliError::Config("give either channel.losses or a loss range, not both".into()))
        }
        (Some(l), _) => {
            if l.is_empty() {
                return Err(CliError::Config("empty loss grid".into()));
            }
            l.clone()
        }
        (None, (None, None, None)) => Vec::new(),
        (None, (start, Some(stop), step)) => {
            let start = start.unwrap_or(0.0);
            let step = step.unwrap_or(1.0);
            if !(step > 0.0) || !(stop >= start) {
                return Err(CliError::Config(format!("empty loss grid: start {start}, stop {stop}, step {step}")));
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            (0..=n).map(|i| start + step * i as f64).collect()
        }
        (None, _) => return Err(CliError::Config("channel.loss_stop is required for a loss range".into())),
    };
    if let Some(bad) = losses.iter().find(|l| !(**l >= 0.0 && l.is_finite())) {
        return Err(CliError::Config(format!("loss {bad} dB must be finite and >= 0")));
    }
    Ok(losses)
}
