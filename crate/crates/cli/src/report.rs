//! CSV serialisation of sweep records.
//!
//! Numbers are written with Rust's `{:.11e}` formatting (12 significant
//! digits, `.` as decimal point, no grouping); cells that do not apply to
//! the protocol are left empty.

use std::fmt::Write as _;

use hsqkd::optimizer::SweepRecord;

use crate::error::CliError;

pub const SWEEP_HEADER: &str = "loss_db,mu_opt,rate,gain,qber,delta,p_click,y0_l,y1_l,e1_u";

pub fn number(x: f64) -> String {
    format!("{x:.11e}")
}

fn cell(x: Option<f64>) -> String {
    x.map(number).unwrap_or_default()
}

pub fn sweep_csv(records: &[SweepRecord]) -> String {
    let mut out = String::with_capacity(128 * (records.len() + 1));
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for r in records {
        let p = r.passive.as_ref();
        let row = [
            number(r.loss_db),
            cell(r.mu_opt),
            number(r.rate),
            cell(r.gain),
            cell(r.qber),
            cell(r.delta),
            cell(p.map(|p| p.p_click)),
            cell(p.map(|p| p.y0_lower)),
            cell(p.map(|p| p.y1_lower)),
            cell(p.and_then(|p| p.e1_upper)),
        ];
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// One rate series of a comparison.
pub struct Series<'a> {
    pub label: &'a str,
    pub records: &'a [SweepRecord],
}

/// Wide table keyed by loss with one rate column per series. All series must
/// share the same loss grid.
pub fn compare_csv(series: &[Series<'_>]) -> Result<String, CliError> {
    if series.len() < 2 {
        return Err(CliError::GridMismatch(format!("compare needs at least 2 configs, got {}", series.len())));
    }
    let grid: Vec<f64> = series[0].records.iter().map(|r| r.loss_db).collect();
    for s in &series[1..] {
        let other: Vec<f64> = s.records.iter().map(|r| r.loss_db).collect();
        if other != grid {
            return Err(CliError::GridMismatch(format!(
                "{} and {} use different loss grids",
                series[0].label, s.label
            )));
        }
    }
    let mut labels: Vec<&str> = series.iter().map(|s| s.label).collect();
    labels.sort_unstable();
    if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
        return Err(CliError::Config(format!("duplicate label {}", w[0])));
    }

    let mut out = String::from("loss_db");
    for s in series {
        write!(out, ",{}", s.label).unwrap();
    }
    out.push('\n');
    for (i, loss) in grid.iter().enumerate() {
        out.push_str(&number(*loss));
        for s in series {
            out.push(',');
            out.push_str(&number(s.records[i].rate));
        }
        out.push('\n');
    }
    Ok(out)
}
