use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use hsqkd::montecarlo::{self, McResult};
use hsqkd::optimizer::{self, PointStatus, SweepRecord};
use hsqkd::sources::{self, Branch};
use hsqkd::{SourceKind, SourceSpec};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::plot::{self, Curve};
use crate::report::{self, Series};

#[derive(Debug, Clone, Default)]
pub struct Options {
    /// Output directory; created when missing.
    pub out: Option<PathBuf>,
    /// Overrides `mc.seed`.
    pub seed: Option<u64>,
    /// Write SVG plots next to the CSV files.
    pub svg: bool,
}

impl Options {
    fn out_dir(&self) -> Result<PathBuf, CliError> {
        let dir = self.out.clone().unwrap_or_else(|| PathBuf::from("out"));
        std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        Ok(dir)
    }
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// Optimized records for every loss of the config. Failed points become
/// zero-rate records; a line per failure goes to `warnings`.
pub fn sweep_records(config: &ExperimentConfig, warnings: &mut Vec<String>) -> Result<Vec<SweepRecord>, CliError> {
    let losses = config.require_losses()?;
    let records = optimizer::sweep(&config.scenario, losses, &config.search).map_err(CliError::model)?;
    for r in &records {
        if let PointStatus::Failed(e) = &r.status {
            warnings.push(format!("{}: {} dB: {e}", config.name, r.loss_db));
        }
    }
    Ok(records)
}

fn curve<'a>(label: &'a str, records: &[SweepRecord]) -> Curve<'a> {
    Curve { label, points: records.iter().map(|r| (r.loss_db, r.rate)).collect() }
}

/// Writes `<name>.csv` (and `<name>.svg`) per config; returns the files written.
pub fn run_sweep(
    configs: &[ExperimentConfig],
    opts: &Options,
    warnings: &mut Vec<String>,
) -> Result<Vec<PathBuf>, CliError> {
    if configs.is_empty() {
        return Err(CliError::Config("no config given".into()));
    }
    let dir = opts.out_dir()?;
    let mut written = Vec::new();
    for config in configs {
        let records = sweep_records(config, warnings)?;
        let csv = dir.join(format!("{}.csv", config.name));
        write(&csv, &report::sweep_csv(&records))?;
        written.push(csv);
        if opts.svg || config.svg {
            let svg = dir.join(format!("{}.svg", config.name));
            write(&svg, &plot::rate_plot(&config.name, &[curve(&config.name, &records)]))?;
            written.push(svg);
        }
    }
    Ok(written)
}

/// Sweep table of a single config, returned instead of written.
pub fn run_optimize(config: &ExperimentConfig, warnings: &mut Vec<String>) -> Result<String, CliError> {
    Ok(report::sweep_csv(&sweep_records(config, warnings)?))
}

/// Writes `compare.csv` (and `compare.svg`) with one rate column per config.
pub fn run_compare(
    configs: &[ExperimentConfig],
    opts: &Options,
    warnings: &mut Vec<String>,
) -> Result<Vec<PathBuf>, CliError> {
    if configs.len() < 2 {
        return Err(CliError::GridMismatch(format!("compare needs at least 2 configs, got {}", configs.len())));
    }
    if let Some(c) = configs.iter().find(|c| c.losses != configs[0].losses) {
        return Err(CliError::GridMismatch(format!("{} and {} use different loss grids", configs[0].name, c.name)));
    }
    let all: Vec<Vec<SweepRecord>> = configs.iter().map(|c| sweep_records(c, warnings)).collect::<Result<_, _>>()?;
    let series: Vec<Series<'_>> =
        configs.iter().zip(&all).map(|(c, r)| Series { label: &c.name, records: r }).collect();
    let csv_text = report::compare_csv(&series)?;
    let dir = opts.out_dir()?;
    let csv = dir.join("compare.csv");
    write(&csv, &csv_text)?;
    let mut written = vec![csv];
    if opts.svg || configs.iter().any(|c| c.svg) {
        let curves: Vec<Curve<'_>> = configs.iter().zip(&all).map(|(c, r)| curve(&c.name, r)).collect();
        let svg = dir.join("compare.svg");
        write(&svg, &plot::rate_plot("comparison", &curves))?;
        written.push(svg);
    }
    Ok(written)
}

/// Analytic-versus-empirical comparison of one Monte Carlo run.
#[derive(Debug, Clone, PartialEq)]
pub struct McReport {
    pub text: String,
    pub passed: bool,
}

/// Expected fraction of pulses where some heralding detector fires.
fn expected_click_fraction(spec: &SourceSpec) -> Result<f64, CliError> {
    if spec.kind == SourceKind::Mhps {
        return Ok(-(-(spec.m as f64) * spec.mu).exp_m1());
    }
    Ok(1.0 - sources::p_noclick(spec).map_err(CliError::model)?)
}

pub fn run_validate_mc(config: &ExperimentConfig, opts: &Options) -> Result<McReport, CliError> {
    let spec = config.source_at_mu()?;
    if !spec.kind.is_multiplexed() {
        return Err(CliError::Config(format!("{}: validate-mc needs a multiplexed source", config.name)));
    }
    let seed = opts.seed.unwrap_or(config.mc.seed);
    let truncation = config.search.truncation;
    let mc = montecarlo::simulate(&spec, config.mc.trials, seed).map_err(CliError::model)?;
    let analytic = sources::pmf(&spec, &truncation).map_err(CliError::model)?;
    let tv = montecarlo::total_variation(&mc.empirical_pmf(), &analytic);
    let expected = expected_click_fraction(&spec)?;
    let click_delta = (mc.click_fraction() - expected).abs();

    let verdict = |ok: bool| if ok { "PASS" } else { "FAIL" };
    let tv_ok = tv < config.mc.tv_tolerance;
    let click_ok = click_delta < config.mc.click_tolerance;
    let mut text = String::new();
    writeln!(text, "config {}", config.name).unwrap();
    writeln!(text, "source {} m={} mu={} eta={} gamma={}", spec.kind, spec.m, spec.mu, spec.eta, spec.gamma).unwrap();
    writeln!(text, "trials {} seed {}", mc.trials, mc.seed).unwrap();
    writeln!(
        text,
        "poisson draws: inversion {} rejection {}",
        mc.diagnostics.inversion_draws, mc.diagnostics.rejection_draws
    )
    .unwrap();
    writeln!(text, "tv {:.6e} tol {:e} {}", tv, config.mc.tv_tolerance, verdict(tv_ok)).unwrap();
    writeln!(
        text,
        "click_fraction {:.6e} expected {:.6e} delta {:.6e} tol {:e} {}",
        mc.click_fraction(),
        expected,
        click_delta,
        config.mc.click_tolerance,
        verdict(click_ok)
    )
    .unwrap();
    if spec.kind.has_heralding_detectors() {
        branch_lines(&mut text, &spec, &mc, &truncation);
    }
    let passed = tv_ok && click_ok;
    writeln!(text, "{}, tv={:.3e}", verdict(passed), tv).unwrap();
    Ok(McReport { text, passed })
}

/// Conditional distances, reported for information.
fn branch_lines(text: &mut String, spec: &SourceSpec, mc: &McResult, truncation: &hsqkd::TruncationPolicy) {
    let noclicks = mc.trials - mc.clicks;
    for (branch, samples, empirical) in
        [(Branch::Click, mc.clicks, mc.empirical_pmf_click()), (Branch::NoClick, noclicks, mc.empirical_pmf_noclick())]
    {
        let name = if branch == Branch::Click { "click" } else { "noclick" };
        match sources::pmf_conditional(spec, branch, truncation) {
            Ok(analytic) if samples > 0 => {
                let tv = montecarlo::total_variation(&empirical, &analytic);
                writeln!(text, "tv_{name} {tv:.6e} samples {samples}").unwrap();
            }
            _ => writeln!(text, "tv_{name} n/a samples {samples}").unwrap(),
        }
    }
}

/// Writes the report to `<name>_mc.txt` when an output directory is given.
pub fn save_mc_report(
    config: &ExperimentConfig,
    report: &McReport,
    opts: &Options,
) -> Result<Option<PathBuf>, CliError> {
    if opts.out.is_none() {
        return Ok(None);
    }
    let path = opts.out_dir()?.join(format!("{}_mc.txt", config.name));
    write(&path, &report.text)?;
    Ok(Some(path))
}
