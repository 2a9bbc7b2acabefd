//! Turning resolved configurations into results, tables, and artifacts.
//!
//! Each subcommand has a `perform_*` function that executes the work and a
//! renderer that turns the result into CSV or a structured text summary.
//! CSV is the plot interface: fixed headers, one record per row, decimal
//! points, every record newline-terminated, so outputs diff cleanly and
//! parse back exactly. An artifact directory always contains `config.toml`
//! (the resolved echo, sufficient to reproduce the run, stamped with the
//! format version and seed scheme) and `summary.toml`, plus the
//! subcommand's tables. File writing is single-threaded and ordered.

use std::path::Path;

use rayon::prelude::*;

use crate::analysis::{RateFit, RatePrediction, fit_rate, fit_rate_deflated, optimal_bin_length, rate_adaptive, rate_simple};
use crate::config::{FORMAT_VERSION, Resolved};
use crate::diagnostics::{SmoothnessEstimate, estimate_beta, estimate_smoothness};
use crate::error::{Error, Result};
use crate::harness::{RegretTrace, RunSummary, SweepTable, replicate, run_experiment, sweep_bin_sizes};
use crate::objective::check_beta_bound;
use crate::policy::{PolicyKind, validate_mu};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Runs every replication of the configured experiment, keeping each
/// trace, and aggregates the summary.
pub fn perform_run(resolved: &Resolved) -> Result<(RunSummary, Vec<RegretTrace>)> {
    let cfg = &resolved.experiment;
    cfg.validate()?;
    let traces = (0..cfg.replications)
        .into_par_iter()
        .map(|i| run_experiment(cfg, i))
        .collect::<Result<Vec<RegretTrace>>>()?;
    let finals = traces.iter().map(RegretTrace::final_regret).collect();
    Ok((RunSummary::aggregate(finals, cfg.horizon), traces))
}

/// Runs the bin-length sweep described by the `[sweep]` section.
pub fn perform_sweep(resolved: &Resolved) -> Result<SweepTable> {
    let lengths = resolved
        .sweep_lengths
        .as_ref()
        .ok_or_else(|| Error::config("sweep", "config has no [sweep] section"))?;
    sweep_bin_sizes(&resolved.experiment, lengths)
}

/// One horizon of a rate study.
#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub horizon: u64,
    /// Grid side length (fixed grid) or initial side (adaptive) used here.
    pub bin_length: f64,
    pub summary: RunSummary,
    /// The value the slope was fitted to: mean average regret, divided by
    /// the predicted logarithmic factor when deflation is on.
    pub fit_value: f64,
}

/// A completed rate study: the per-horizon table, the fit, and the theory
/// it is compared against.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub rows: Vec<RateRow>,
    pub fit: RateFit,
    pub prediction: RatePrediction,
    pub deflated: bool,
    pub band: Option<(f64, f64)>,
    /// Whether the fitted slope lies in the band, when one is configured.
    pub band_pass: Option<bool>,
}

/// Runs the configured policy across the `[rate]` horizon ladder and fits
/// the slope of mean average regret against the horizon on log-log axes.
///
/// The theoretical prediction comes from the objective's declared
/// constants and the policy family. With `prescribed_simple_length` the
/// fixed grid is re-derived at each horizon from those constants, which is
/// how the predicted fixed-grid rate is meant to be attained.
pub fn perform_rate(resolved: &Resolved) -> Result<RateReport> {
    let plan = resolved
        .rate
        .as_ref()
        .ok_or_else(|| Error::config("rate", "config has no [rate] section"))?;
    let base = &resolved.experiment;
    let declared = base.objective.assumption().ok_or_else(|| {
        Error::config("rate", "objective declares no regularity constants to predict a rate from")
    })?;
    let d = base.space.dim();
    let prediction = match base.policy.kind {
        PolicyKind::Simple { .. } => rate_simple(declared.alpha, declared.beta, d)?,
        PolicyKind::Adaptive { .. } => rate_adaptive(declared.alpha, declared.beta, d)?,
    };

    let mut rows = Vec::with_capacity(plan.horizons.len());
    for &horizon in &plan.horizons {
        let mut cfg = base.clone();
        cfg.horizon = horizon;
        cfg.replications = plan.replications;
        if plan.prescribed_simple_length {
            let a = optimal_bin_length(declared.alpha, declared.beta, d, horizon)? * cfg.space.max_side();
            cfg.policy.kind = PolicyKind::Simple { a };
        }
        let bin_length = match cfg.policy.kind {
            PolicyKind::Simple { a } => a,
            PolicyKind::Adaptive { a0, .. } => a0,
        };
        let summary = replicate(&cfg)?;
        let fit_value = if plan.deflate {
            summary.mean_average_regret / (horizon as f64).ln().powf(prediction.log_power)
        } else {
            summary.mean_average_regret
        };
        rows.push(RateRow { horizon, bin_length, summary, fit_value });
    }

    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.horizon as f64, r.summary.mean_average_regret)).collect();
    let fit = if plan.deflate {
        fit_rate_deflated(&points, prediction.log_power)?
    } else {
        fit_rate(&points)?
    };
    let band_pass = plan.band.map(|(lo, hi)| lo <= fit.slope && fit.slope <= hi);
    Ok(RateReport { rows, fit, prediction, deflated: plan.deflate, band: plan.band, band_pass })
}

/// The packing-growth half of a diagnosis: either an estimate with its
/// guard verdict, or the reason no estimate was possible.
#[derive(Debug, Clone, PartialEq)]
pub enum BetaOutcome {
    Estimate {
        beta: f64,
        /// `d / alpha`, the largest compatible growth exponent.
        guard_limit: f64,
        /// Whether the estimate respects the bound.
        guard_pass: bool,
    },
    /// The sublevel counts carried too little information, which is what a
    /// constant objective produces.
    Insufficient { message: String },
}

/// An assumption-checking report for one objective.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnoseReport {
    pub smoothness: SmoothnessEstimate,
    /// Exponent the probe was run at.
    pub alpha: f64,
    pub beta: BetaOutcome,
    /// Sufficient resolution-bonus threshold `(1 + 2^(d+alpha)) * M-hat`.
    pub mu_threshold: f64,
    /// The configured adaptive policy's coefficient, when there is one.
    pub mu_configured: Option<f64>,
    /// Whether the configured coefficient exceeds the threshold.
    pub mu_sufficient: Option<bool>,
}

/// Probes the configured objective: estimates the smoothness constant and
/// packing growth, checks the growth bound, and reports the sufficient
/// resolution-bonus threshold implied by the estimate.
///
/// The probe draws from a dedicated stream seeded by the master seed, so
/// a diagnosis is reproducible from its config echo. An insufficient-data
/// outcome from the growth estimator is part of the report, not a failure.
pub fn perform_diagnose(resolved: &Resolved) -> Result<DiagnoseReport> {
    let plan = resolved
        .diagnose
        .as_ref()
        .ok_or_else(|| Error::config("diagnose", "config has no [diagnose] section"))?;
    let cfg = &resolved.experiment;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.master_seed);
    let smoothness = estimate_smoothness(&cfg.objective, &cfg.space, plan.alpha, plan.samples, &mut rng)?;
    let beta = match estimate_beta(&cfg.objective, &cfg.space, plan.grid_a, &plan.eps_ladder) {
        Ok(beta) => {
            let guard_limit = cfg.space.dim() as f64 / plan.alpha;
            let guard_pass = check_beta_bound(plan.alpha, beta, cfg.space.dim()).is_ok();
            BetaOutcome::Estimate { beta, guard_limit, guard_pass }
        }
        Err(e @ Error::InsufficientData { .. }) => BetaOutcome::Insufficient { message: e.to_string() },
        Err(e) => return Err(e),
    };
    let mu_configured = match cfg.policy.kind {
        PolicyKind::Adaptive { mu, .. } => Some(mu),
        PolicyKind::Simple { .. } => None,
    };
    let check = validate_mu(mu_configured.unwrap_or(0.0), smoothness.constant, cfg.space.dim(), plan.alpha);
    Ok(DiagnoseReport {
        smoothness,
        alpha: plan.alpha,
        beta,
        mu_threshold: check.threshold,
        mu_configured,
        mu_sufficient: mu_configured.map(|_| check.sufficient),
    })
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().from_writer(Vec::new())
}

fn finish_csv(wtr: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(wtr.into_inner().expect("csv buffer flushes")).expect("csv output is utf-8")
}

/// Per-replication final regrets: `replication,final_regret,average_regret`.
pub fn finals_csv(summary: &RunSummary, horizon: u64) -> String {
    let mut wtr = csv_writer();
    wtr.write_record(["replication", "final_regret", "average_regret"]).expect("header writes");
    for (i, &r) in summary.finals.iter().enumerate() {
        wtr.serialize((i as u64, r, r / horizon as f64)).expect("record writes");
    }
    finish_csv(wtr)
}

/// Full per-step traces: `replication,t,query_1..query_d,observed,regret,cumulative_regret`.
/// Rows appear in replication order, then round order.
pub fn trace_csv(traces: &[RegretTrace], dim: usize) -> String {
    let mut wtr = csv_writer();
    let mut header = vec!["replication".to_string(), "t".to_string()];
    header.extend((1..=dim).map(|i| format!("query_{i}")));
    header.extend(["observed".to_string(), "regret".to_string(), "cumulative_regret".to_string()]);
    wtr.write_record(&header).expect("header writes");
    for trace in traces {
        let Some(steps) = trace.steps() else { continue };
        for (step, &cum) in steps.iter().zip(trace.cumulative()) {
            let mut record = vec![trace.replication().to_string(), step.t.to_string()];
            record.extend(step.query.coords().iter().map(|c| format_float(*c)));
            record.push(format_float(step.observed));
            record.push(format_float(step.regret));
            record.push(format_float(cum));
            wtr.write_record(&record).expect("record writes");
        }
    }
    finish_csv(wtr)
}

/// The regret-versus-bin-length table: `a,mean_regret,stderr,policy`, one
/// `simple` row per swept length plus the flagged `adaptive` row, whose
/// `a` column carries the initial side.
pub fn sweep_csv(table: &SweepTable, adaptive_initial: f64) -> String {
    let mut wtr = csv_writer();
    wtr.write_record(["a", "mean_regret", "stderr", "policy"]).expect("header writes");
    for row in &table.rows {
        wtr.serialize((row.a, row.summary.mean_final_regret, row.summary.stderr_final_regret, "simple"))
            .expect("record writes");
    }
    wtr.serialize((adaptive_initial, table.adaptive.mean_final_regret, table.adaptive.stderr_final_regret, "adaptive"))
        .expect("record writes");
    finish_csv(wtr)
}

/// The per-horizon rate table:
/// `horizon,bin_length,mean_regret,stderr,mean_average_regret,fit_value`.
pub fn rate_csv(report: &RateReport) -> String {
    let mut wtr = csv_writer();
    wtr.write_record(["horizon", "bin_length", "mean_regret", "stderr", "mean_average_regret", "fit_value"])
        .expect("header writes");
    for row in &report.rows {
        wtr.serialize((
            row.horizon,
            row.bin_length,
            row.summary.mean_final_regret,
            row.summary.stderr_final_regret,
            row.summary.mean_average_regret,
            row.fit_value,
        ))
        .expect("record writes");
    }
    finish_csv(wtr)
}

/// Formats a float the way the CSV serializer does: shortest
/// representation that parses back to the same value, always with a
/// decimal point or exponent where needed, never locale-dependent.
fn format_float(v: f64) -> String {
    let mut out = String::new();
    let mut ser = csv_writer();
    ser.serialize((v,)).expect("float serializes");
    let bytes = ser.into_inner().expect("csv buffer flushes");
    out.push_str(String::from_utf8(bytes).expect("utf-8").trim_end());
    out
}

fn toml_float(v: f64) -> toml::Value {
    toml::Value::Float(v)
}

/// The `summary.toml` body for a plain run.
pub fn run_summary_toml(summary: &RunSummary, horizon: u64, replications: u32) -> String {
    let mut doc = toml::Table::new();
    doc.insert("format_version".into(), toml::Value::Integer(FORMAT_VERSION));
    doc.insert("command".into(), toml::Value::String("run".into()));
    let mut s = toml::Table::new();
    s.insert("horizon".into(), toml::Value::Integer(horizon as i64));
    s.insert("replications".into(), toml::Value::Integer(replications as i64));
    s.insert("mean_final_regret".into(), toml_float(summary.mean_final_regret));
    s.insert("stderr_final_regret".into(), toml_float(summary.stderr_final_regret));
    s.insert("mean_average_regret".into(), toml_float(summary.mean_average_regret));
    doc.insert("summary".into(), toml::Value::Table(s));
    toml::to_string_pretty(&doc).expect("summary serializes")
}

/// The `summary.toml` body for a sweep: the best fixed grid against the
/// adaptive comparison point.
pub fn sweep_summary_toml(table: &SweepTable, adaptive_initial: f64) -> String {
    let best = table
        .rows
        .iter()
        .min_by(|x, y| x.summary.mean_final_regret.total_cmp(&y.summary.mean_final_regret))
        .expect("sweep has at least one row");
    let mut doc = toml::Table::new();
    doc.insert("format_version".into(), toml::Value::Integer(FORMAT_VERSION));
    doc.insert("command".into(), toml::Value::String("sweep".into()));
    let mut simple = toml::Table::new();
    simple.insert("best_a".into(), toml_float(best.a));
    simple.insert("best_mean_regret".into(), toml_float(best.summary.mean_final_regret));
    simple.insert("best_stderr".into(), toml_float(best.summary.stderr_final_regret));
    doc.insert("simple".into(), toml::Value::Table(simple));
    let mut adaptive = toml::Table::new();
    adaptive.insert("initial_side".into(), toml_float(adaptive_initial));
    adaptive.insert("mean_regret".into(), toml_float(table.adaptive.mean_final_regret));
    adaptive.insert("stderr".into(), toml_float(table.adaptive.stderr_final_regret));
    doc.insert("adaptive".into(), toml::Value::Table(adaptive));
    toml::to_string_pretty(&doc).expect("summary serializes")
}

/// The `summary.toml` body for a rate study: fit, theory, and verdict.
pub fn rate_summary_toml(report: &RateReport) -> String {
    let mut doc = toml::Table::new();
    doc.insert("format_version".into(), toml::Value::Integer(FORMAT_VERSION));
    doc.insert("command".into(), toml::Value::String("rate".into()));
    let mut fit = toml::Table::new();
    fit.insert("slope".into(), toml_float(report.fit.slope));
    fit.insert("intercept".into(), toml_float(report.fit.intercept));
    fit.insert("rms_residual".into(), toml_float(report.fit.rms_residual));
    fit.insert("deflated".into(), toml::Value::Boolean(report.deflated));
    doc.insert("fit".into(), toml::Value::Table(fit));
    let mut theory = toml::Table::new();
    theory.insert("exponent".into(), toml_float(report.prediction.exponent));
    theory.insert("predicted_slope".into(), toml_float(-report.prediction.exponent));
    theory.insert("log_power".into(), toml_float(report.prediction.log_power));
    theory.insert("source".into(), toml::Value::String(format!("{:?}", report.prediction.source)));
    doc.insert("theory".into(), toml::Value::Table(theory));
    if let (Some((lo, hi)), Some(pass)) = (report.band, report.band_pass) {
        let mut band = toml::Table::new();
        band.insert("lo".into(), toml_float(lo));
        band.insert("hi".into(), toml_float(hi));
        band.insert("pass".into(), toml::Value::Boolean(pass));
        doc.insert("band".into(), toml::Value::Table(band));
    }
    toml::to_string_pretty(&doc).expect("summary serializes")
}

/// The `summary.toml` body for a diagnosis.
pub fn diagnose_summary_toml(report: &DiagnoseReport) -> String {
    let mut doc = toml::Table::new();
    doc.insert("format_version".into(), toml::Value::Integer(FORMAT_VERSION));
    doc.insert("command".into(), toml::Value::String("diagnose".into()));
    let mut s = toml::Table::new();
    s.insert("constant".into(), toml_float(report.smoothness.constant));
    s.insert("alpha".into(), toml_float(report.alpha));
    s.insert("winning_scale".into(), toml_float(report.smoothness.scale));
    s.insert(
        "winning_center".into(),
        toml::Value::Array(report.smoothness.center.coords().iter().map(|&c| toml_float(c)).collect()),
    );
    doc.insert("smoothness".into(), toml::Value::Table(s));
    let mut b = toml::Table::new();
    match &report.beta {
        BetaOutcome::Estimate { beta, guard_limit, guard_pass } => {
            b.insert("estimate".into(), toml_float(*beta));
            b.insert("guard_limit".into(), toml_float(*guard_limit));
            b.insert("guard_pass".into(), toml::Value::Boolean(*guard_pass));
        }
        BetaOutcome::Insufficient { message } => {
            b.insert("insufficient_data".into(), toml::Value::String(message.clone()));
        }
    }
    doc.insert("packing_growth".into(), toml::Value::Table(b));
    let mut m = toml::Table::new();
    m.insert("threshold".into(), toml_float(report.mu_threshold));
    if let Some(mu) = report.mu_configured {
        m.insert("configured".into(), toml_float(mu));
    }
    if let Some(ok) = report.mu_sufficient {
        m.insert("sufficient".into(), toml::Value::Boolean(ok));
    }
    doc.insert("resolution_bonus".into(), toml::Value::Table(m));
    toml::to_string_pretty(&doc).expect("summary serializes")
}

/// Writes an artifact directory: `config.toml` (the resolved echo) first,
/// then the given `(file name, contents)` pairs, in order.
pub fn write_artifact(dir: &Path, resolved: &Resolved, files: &[(&str, String)]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("config.toml"), resolved.echo_toml())?;
    for (name, contents) in files {
        std::fs::write(dir.join(name), contents)?;
    }
    Ok(())
}
