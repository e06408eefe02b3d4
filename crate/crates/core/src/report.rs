//! Tidy tables from experiment summaries.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::estimation::EstimatorKind;
use crate::models::Family;
use crate::simulation::ExperimentSummary;

pub const SUMMARY_HEADER: &str =
    "family,true_lambda,estimator,mean_est,mean_sd,are,mc_se,replicates,failures";
pub const CURVE_HEADER: &str = "lambda,estimator,are";

/// One (grid point, estimator) line of the summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub family: Family,
    pub true_lambda: f64,
    pub estimator: EstimatorKind,
    pub mean_est: f64,
    pub mean_sd: f64,
    pub are: Option<f64>,
    pub mc_se: f64,
    pub replicates: usize,
    pub failures: usize,
}

pub fn summary_rows(summaries: &[ExperimentSummary]) -> Vec<SummaryRow> {
    summaries
        .iter()
        .flat_map(|s| {
            s.estimators.iter().map(move |e| SummaryRow {
                family: s.family,
                true_lambda: s.true_lambda,
                estimator: e.estimator,
                mean_est: e.mean_est,
                mean_sd: e.mean_sd,
                are: e.are,
                mc_se: e.mc_se,
                replicates: e.replicates,
                failures: e.failures,
            })
        })
        .collect()
}

/// Six significant digits in the shortest form that parses back to the
/// rounded value. Non-finite values print as `NaN`, `inf` or `-inf`.
pub fn format_sig6(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let rounded: f64 = format!("{x:.5e}").parse().expect("float formatting round-trips");
    if rounded == 0.0 {
        "0".to_string()
    } else {
        format!("{rounded}")
    }
}

fn opt_sig6(x: Option<f64>) -> String {
    x.map(format_sig6).unwrap_or_default()
}

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{SUMMARY_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.family,
            format_sig6(r.true_lambda),
            r.estimator,
            format_sig6(r.mean_est),
            format_sig6(r.mean_sd),
            opt_sig6(r.are),
            format_sig6(r.mc_se),
            r.replicates,
            r.failures
        )?;
    }
    Ok(())
}

/// Full-precision JSON of the same rows. Non-finite numbers become `null`.
pub fn summary_json(rows: &[SummaryRow]) -> serde_json::Result<String> {
    serde_json::to_string_pretty(rows)
}

/// Long-format `(λ, estimator, ARE)` rows; estimators without an ARE are
/// skipped.
pub fn write_curve_csv<W: Write>(summaries: &[ExperimentSummary], mut out: W) -> io::Result<()> {
    writeln!(out, "{CURVE_HEADER}")?;
    for s in summaries {
        for e in &s.estimators {
            if let Some(a) = e.are {
                writeln!(out, "{},{},{}", format_sig6(s.true_lambda), e.estimator, format_sig6(a))?;
            }
        }
    }
    Ok(())
}
