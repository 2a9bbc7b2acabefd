//! Configuration files, command-line overrides, and the config echo.
//!
//! Experiments are described by a TOML document with `[experiment]`,
//! `[space]`, `[objective]`, `[noise]`, and `[policy]` sections, plus
//! optional `[sweep]`, `[rate]`, and `[diagnose]` sections for the
//! corresponding subcommands. Dotted-path overrides
//! (`--set policy.mu=9.0`) are applied to the parsed document before
//! validation, so an override is checked exactly like the file text.
//!
//! Resolution fills every default and produces an echo document in the
//! same schema with all values concrete, stamped with the format version
//! and the seed-derivation scheme. Parsing an echo reproduces the resolved
//! configuration exactly; artifacts embed it for that reason.
//!
//! ## Schema
//!
//! | key | type | default |
//! |-----|------|---------|
//! | `experiment.horizon` | integer ≥ 1 | required |
//! | `experiment.replications` | integer ≥ 1 | 1 |
//! | `experiment.master_seed` | integer | 0 |
//! | `experiment.trace` | `"full"` or `"cumulative"` | `"cumulative"` |
//! | `space.dim` | integer in [1, 16] | required |
//! | `space.half_width` | real > 0 | 1.0 |
//! | `space.margin` | real ≥ 0 | `half_width` |
//! | `objective.name` | `"f1"`, `"f2"`, `"flat"`, `"step"` | required |
//! | `objective.offset` | array of `dim` reals (f1/f2) | 0.5 each |
//! | `objective.norm` | `"l2"` or `"sup"` (f2) | `"l2"` |
//! | `objective.value` | real (flat) | required for flat |
//! | `objective.threshold`/`low`/`high` | reals (step, dim 1) | required for step |
//! | `assumption.alpha` | real in (0, 2] | objective's declaration |
//! | `assumption.beta` | real > 0 | objective's declaration |
//! | `assumption.m` | real > 0 | objective's declaration |
//! | `assumption.c0` | real > 0 | declaration, else `2^dim` |
//! | `assumption.a_max` | real ≥ 0 | declaration, else the longest side |
//! | `noise.scale` | real ≥ 0 | 1.0 |
//! | `policy.kind` | `"simple"` or `"adaptive"` | required |
//! | `policy.a` | real > 0 (simple) | required unless prescribed by `[rate]` |
//! | `policy.a0` | real > 0 (adaptive) | the space's longest side |
//! | `policy.alpha` | real in (0, 2] (adaptive) | objective's declared exponent |
//! | `policy.mu` | real > 0 (adaptive) | 1.01 × the sufficient threshold |
//! | `policy.tie_break_seed` | integer | 0 |
//! | `sweep.lengths` | nonempty array of reals > 0 | required in `[sweep]` |
//! | `rate.horizons` | ≥ 3 integers ≥ 2 | required in `[rate]` |
//! | `rate.replications` | integer ≥ 1 | `experiment.replications` |
//! | `rate.band` | `[lo, hi]` on the fitted slope | none |
//! | `rate.deflate` | bool: divide out the predicted log power | false |
//! | `rate.prescribed_simple_length` | bool: per-horizon optimal grid | false |
//! | `diagnose.samples` | integer ≥ 100 | 200 |
//! | `diagnose.alpha` | real in (0, 2] | objective's declared exponent |
//! | `diagnose.grid_a` | real > 0 | about 1e5 cells total |
//! | `diagnose.eps_ladder` | ≥ 3 positive reals | `[0.05, 0.1, 0.2, 0.4, 0.8]` |

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::optimal_bin_length;
use crate::error::{Error, Result};
use crate::harness::{ExperimentConfig, TraceMode};
use crate::objective::{AssumptionParams, NoiseModel, Norm, Objective};
use crate::policy::{PolicyKind, PolicySpec, validate_mu};
use crate::space::DecisionSpace;

/// Version tag stamped into every echo and artifact.
pub const FORMAT_VERSION: i64 = 1;

/// The seed-derivation scheme, recorded so any artifact states how its
/// replication streams were produced.
pub const SEED_SCHEME: &str = "chacha8: policy stream seeds from master_seed xor tie_break_seed on stream 2*i; \
     noise stream seeds from master_seed on stream 2*i+1; i is the replication index";

/// Factor applied to the sufficient threshold when defaulting `mu`.
const MU_DEFAULT_FACTOR: f64 = 1.01;
/// Cell budget behind the default `diagnose.grid_a`.
const DIAGNOSE_CELL_BUDGET: f64 = 1e5;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    format_version: Option<i64>,
    seed_scheme: Option<String>,
    experiment: FileExperiment,
    space: FileSpace,
    objective: FileObjective,
    assumption: Option<FileAssumption>,
    #[serde(default)]
    noise: FileNoise,
    policy: FilePolicy,
    sweep: Option<FileSweep>,
    rate: Option<FileRate>,
    diagnose: Option<FileDiagnose>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileExperiment {
    horizon: i64,
    replications: Option<i64>,
    master_seed: Option<i64>,
    trace: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSpace {
    dim: i64,
    half_width: Option<f64>,
    margin: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileObjective {
    name: String,
    offset: Option<Vec<f64>>,
    norm: Option<String>,
    value: Option<f64>,
    threshold: Option<f64>,
    low: Option<f64>,
    high: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileAssumption {
    alpha: Option<f64>,
    beta: Option<f64>,
    m: Option<f64>,
    c0: Option<f64>,
    a_max: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileNoise {
    scale: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct FilePolicy {
    kind: String,
    a: Option<f64>,
    a0: Option<f64>,
    alpha: Option<f64>,
    mu: Option<f64>,
    tie_break_seed: Option<i64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSweep {
    lengths: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileRate {
    horizons: Vec<i64>,
    replications: Option<i64>,
    band: Option<Vec<f64>>,
    deflate: Option<bool>,
    prescribed_simple_length: Option<bool>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileDiagnose {
    samples: Option<i64>,
    alpha: Option<f64>,
    grid_a: Option<f64>,
    eps_ladder: Option<Vec<f64>>,
}

/// Parses a TOML document into the file schema, without resolving.
pub fn parse_config_str(text: &str) -> Result<FileConfig> {
    parse_with_overrides(text, &[])
}

/// Parses a TOML document, applies `--set`-style overrides to the parsed
/// table, and deserializes into the file schema. Unknown fields anywhere
/// are configuration errors naming the field.
pub fn parse_with_overrides(text: &str, overrides: &[String]) -> Result<FileConfig> {
    let mut table: toml::Table =
        text.parse().map_err(|e: toml::de::Error| Error::config("config", e.to_string()))?;
    for spec in overrides {
        apply_override(&mut table, spec)?;
    }
    toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| Error::config("config", e.to_string()))
}

/// Reads and parses a config file; I/O problems are configuration errors
/// naming the path.
pub fn load_config(path: &Path, overrides: &[String]) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(path.display().to_string(), format!("cannot read config: {e}")))?;
    parse_with_overrides(&text, overrides)
}

/// Applies one `dotted.path=value` override to a parsed TOML table.
/// The value is parsed as TOML (numbers, bools, arrays, quoted strings);
/// anything that does not parse is taken as a bare string.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let Some((path, raw)) = spec.split_once('=') else {
        return Err(Error::config("--set", format!("expected dotted.path=value, got {spec:?}")));
    };
    let path = path.trim();
    let segments: Vec<&str> = path.split('.').collect();
    if path.is_empty() || segments.iter().any(|s| s.is_empty()) {
        return Err(Error::config("--set", format!("empty path segment in {path:?}")));
    }
    let value = parse_override_value(raw.trim());
    let mut current = table;
    for segment in &segments[..segments.len() - 1] {
        current = current
            .entry(segment.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| {
                Error::config("--set", format!("{path}: {segment} holds a value, not a section"))
            })?;
    }
    current.insert(segments[segments.len() - 1].to_string(), value);
    Ok(())
}

fn parse_override_value(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("just inserted"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// A resolved `[rate]` section: the horizon ladder one policy is run over.
#[derive(Debug, Clone, PartialEq)]
pub struct RatePlan {
    pub horizons: Vec<u64>,
    /// Replications per horizon.
    pub replications: u32,
    /// Acceptance band on the fitted slope, when configured.
    pub band: Option<(f64, f64)>,
    /// Divide the predicted `(ln T)^p` factor out before fitting.
    pub deflate: bool,
    /// For the fixed-grid policy: re-derive the bin length at each horizon
    /// from the objective's declared constants.
    pub prescribed_simple_length: bool,
}

/// A resolved `[diagnose]` section.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosePlan {
    pub samples: usize,
    pub alpha: f64,
    pub grid_a: f64,
    pub eps_ladder: Vec<f64>,
}

/// A fully resolved configuration: every default filled, every guard
/// checked, plus the echo document that reproduces it.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub experiment: ExperimentConfig,
    pub sweep_lengths: Option<Vec<f64>>,
    pub rate: Option<RatePlan>,
    pub diagnose: Option<DiagnosePlan>,
    echo: EchoDoc,
}

impl Resolved {
    /// The echo document: same schema, all values concrete, stamped with
    /// the format version and seed scheme. Parsing it back resolves to
    /// this configuration exactly.
    pub fn echo_toml(&self) -> String {
        toml::to_string_pretty(&self.echo).expect("echo document serializes")
    }
}

#[derive(Debug, Clone, Serialize)]
struct EchoDoc {
    format_version: i64,
    seed_scheme: String,
    experiment: EchoExperiment,
    space: EchoSpace,
    objective: EchoObjective,
    #[serde(skip_serializing_if = "Option::is_none")]
    assumption: Option<EchoAssumption>,
    noise: EchoNoise,
    policy: EchoPolicy,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep: Option<EchoSweep>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rate: Option<EchoRate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    diagnose: Option<EchoDiagnose>,
}

#[derive(Debug, Clone, Serialize)]
struct EchoExperiment {
    horizon: i64,
    replications: i64,
    master_seed: i64,
    trace: String,
}

#[derive(Debug, Clone, Serialize)]
struct EchoSpace {
    dim: i64,
    half_width: f64,
    margin: f64,
}

#[derive(Debug, Clone, Serialize)]
struct EchoObjective {
    name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    offset: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    norm: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    low: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    high: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
struct EchoAssumption {
    alpha: f64,
    beta: f64,
    m: f64,
    c0: f64,
    a_max: f64,
}

#[derive(Debug, Clone, Serialize)]
struct EchoNoise {
    scale: f64,
}

#[derive(Debug, Clone, Serialize)]
struct EchoPolicy {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    a0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mu: Option<f64>,
    tie_break_seed: i64,
}

#[derive(Debug, Clone, Serialize)]
struct EchoSweep {
    lengths: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
struct EchoRate {
    horizons: Vec<i64>,
    replications: i64,
    #[serde(skip_serializing_if = "Option::is_none")]
    band: Option<Vec<f64>>,
    deflate: bool,
    prescribed_simple_length: bool,
}

#[derive(Debug, Clone, Serialize)]
struct EchoDiagnose {
    samples: i64,
    alpha: f64,
    grid_a: f64,
    eps_ladder: Vec<f64>,
}

fn positive_count(value: i64, path: &str) -> Result<u64> {
    if value < 1 {
        return Err(Error::config(path, format!("{value} must be at least 1")));
    }
    Ok(value as u64)
}

fn reject_inapplicable(present: bool, path: &str, name: &str) -> Result<()> {
    if present {
        return Err(Error::config(path, format!("not applicable to objective {name:?}")));
    }
    Ok(())
}

/// Resolves a parsed file: fills defaults, validates every field (with
/// dotted-path diagnostics), checks the packing-vs-smoothness guard, and
/// builds the echo.
pub fn resolve(file: &FileConfig) -> Result<Resolved> {
    if let Some(v) = file.format_version {
        if v != FORMAT_VERSION {
            return Err(Error::config(
                "format_version",
                format!("unsupported version {v}; this build reads version {FORMAT_VERSION}"),
            ));
        }
    }
    if let Some(scheme) = &file.seed_scheme {
        if scheme != SEED_SCHEME {
            return Err(Error::config(
                "seed_scheme",
                "echo was produced under a different seed-derivation scheme; its numbers would not reproduce",
            ));
        }
    }

    // Space.
    let dim = file.space.dim;
    if !(1..=16).contains(&dim) {
        return Err(Error::config("space.dim", format!("dimension {dim} must lie in [1, 16]")));
    }
    let dim = dim as usize;
    let half_width = file.space.half_width.unwrap_or(1.0);
    if !(half_width > 0.0) || !half_width.is_finite() {
        return Err(Error::config("space.half_width", format!("{half_width} must be positive and finite")));
    }
    let margin = file.space.margin.unwrap_or(half_width);
    let space = DecisionSpace::symmetric(dim, half_width, margin)?;

    // Objective.
    let o = &file.objective;
    let objective = match o.name.as_str() {
        "f1" | "f2" => {
            reject_inapplicable(o.value.is_some(), "objective.value", &o.name)?;
            reject_inapplicable(o.threshold.is_some(), "objective.threshold", &o.name)?;
            reject_inapplicable(o.low.is_some(), "objective.low", &o.name)?;
            reject_inapplicable(o.high.is_some(), "objective.high", &o.name)?;
            let offset = o.offset.clone().unwrap_or_else(|| vec![0.5; dim]);
            let norm = match o.norm.as_deref() {
                None => Norm::L2,
                Some("l2") => Norm::L2,
                Some("sup") => Norm::Sup,
                Some(other) => {
                    return Err(Error::config(
                        "objective.norm",
                        format!("unknown norm {other:?}; expected \"l2\" or \"sup\""),
                    ));
                }
            };
            if o.name == "f1" {
                reject_inapplicable(o.norm.is_some(), "objective.norm", &o.name)?;
            }
            Objective::by_name(&o.name, dim, offset, norm)?
        }
        "flat" => {
            reject_inapplicable(o.offset.is_some(), "objective.offset", "flat")?;
            reject_inapplicable(o.norm.is_some(), "objective.norm", "flat")?;
            reject_inapplicable(o.threshold.is_some(), "objective.threshold", "flat")?;
            reject_inapplicable(o.low.is_some(), "objective.low", "flat")?;
            reject_inapplicable(o.high.is_some(), "objective.high", "flat")?;
            let value = o
                .value
                .ok_or_else(|| Error::config("objective.value", "flat objective needs a value"))?;
            Objective::flat(dim, value)
        }
        "step" => {
            reject_inapplicable(o.offset.is_some(), "objective.offset", "step")?;
            reject_inapplicable(o.norm.is_some(), "objective.norm", "step")?;
            reject_inapplicable(o.value.is_some(), "objective.value", "step")?;
            if dim != 1 {
                return Err(Error::config("space.dim", "the step objective is one-dimensional"));
            }
            let need = |v: Option<f64>, path: &str| {
                v.ok_or_else(|| Error::config(path, "step objective needs this field"))
            };
            Objective::step(
                need(o.threshold, "objective.threshold")?,
                need(o.low, "objective.low")?,
                need(o.high, "objective.high")?,
            )
        }
        other => {
            return Err(Error::config(
                "objective.name",
                format!("unknown objective {other:?}; expected \"f1\", \"f2\", \"flat\", or \"step\""),
            ));
        }
    };

    // Declared-constant overrides. Fields not set fall back to the
    // objective's own declaration; shapes without one need the load-bearing
    // fields spelled out. Validation, including the growth guard, happens
    // with the experiment below.
    let objective = match &file.assumption {
        None => objective,
        Some(a) => {
            let declared = objective.assumption().copied();
            let pick = |given: Option<f64>, fallback: Option<f64>, path: &str| {
                given.or(fallback).ok_or_else(|| {
                    Error::config(path, "objective declares no constants; set this field explicitly")
                })
            };
            let merged = AssumptionParams {
                alpha: pick(a.alpha, declared.map(|v| v.alpha), "assumption.alpha")?,
                beta: pick(a.beta, declared.map(|v| v.beta), "assumption.beta")?,
                m: pick(a.m, declared.map(|v| v.m), "assumption.m")?,
                c0: a.c0.or(declared.map(|v| v.c0)).unwrap_or_else(|| 2f64.powi(dim as i32)),
                a_max: a.a_max.or(declared.map(|v| v.a_max)).unwrap_or_else(|| space.max_side()),
            };
            objective.with_assumption(merged)
        }
    };

    // Noise.
    let scale = file.noise.scale.unwrap_or(1.0);
    let noise = NoiseModel::gaussian(scale)?;

    // Experiment scalars (needed before the policy for prescribed lengths).
    let horizon = positive_count(file.experiment.horizon, "experiment.horizon")?;
    let replications = positive_count(file.experiment.replications.unwrap_or(1), "experiment.replications")?;
    if replications > u32::MAX as u64 {
        return Err(Error::config("experiment.replications", "replication count does not fit in 32 bits"));
    }
    let master_seed = file.experiment.master_seed.unwrap_or(0) as u64;
    let trace = match file.experiment.trace.as_deref() {
        None | Some("cumulative") => TraceMode::CumulativeOnly,
        Some("full") => TraceMode::Full,
        Some(other) => {
            return Err(Error::config(
                "experiment.trace",
                format!("unknown trace mode {other:?}; expected \"full\" or \"cumulative\""),
            ));
        }
    };

    // Rate plan flags that feed the policy resolution.
    let prescribed = file
        .rate
        .as_ref()
        .and_then(|r| r.prescribed_simple_length)
        .unwrap_or(false);

    // Policy.
    let p = &file.policy;
    let tie_break_seed = p.tie_break_seed.unwrap_or(0) as u64;
    let assumption = objective.assumption().copied();
    let max_side = space.max_side();
    let prescribe_length = move |t: u64| -> Result<f64> {
        let a = assumption.ok_or_else(|| {
            Error::config(
                "rate.prescribed_simple_length",
                "the objective declares no regularity constants to derive lengths from",
            )
        })?;
        Ok(optimal_bin_length(a.alpha, a.beta, dim, t)? * max_side)
    };
    let kind = match p.kind.as_str() {
        "simple" => {
            for (present, path) in [
                (p.a0.is_some(), "policy.a0"),
                (p.alpha.is_some(), "policy.alpha"),
                (p.mu.is_some(), "policy.mu"),
            ] {
                if present {
                    return Err(Error::config(path, "not applicable to the fixed-grid policy"));
                }
            }
            let a = match p.a {
                Some(a) => a,
                None if prescribed => prescribe_length(horizon)?,
                None => {
                    return Err(Error::config("policy.a", "the fixed-grid policy needs a bin length"));
                }
            };
            PolicyKind::Simple { a }
        }
        "adaptive" => {
            if p.a.is_some() {
                return Err(Error::config("policy.a", "not applicable to the adaptive policy; use a0"));
            }
            let a0 = p.a0.unwrap_or_else(|| space.max_side());
            let alpha = match p.alpha {
                Some(alpha) => alpha,
                None => {
                    assumption
                        .ok_or_else(|| {
                            Error::config(
                                "policy.alpha",
                                "objective declares no smoothness exponent; set alpha explicitly",
                            )
                        })?
                        .alpha
                }
            };
            let mu = match p.mu {
                Some(mu) => mu,
                None => {
                    let m = assumption
                        .ok_or_else(|| {
                            Error::config(
                                "policy.mu",
                                "objective declares no smoothness constant; set mu explicitly",
                            )
                        })?
                        .m;
                    MU_DEFAULT_FACTOR * validate_mu(0.0, m, dim, alpha).threshold
                }
            };
            PolicyKind::Adaptive { a0, alpha, mu }
        }
        other => {
            return Err(Error::config(
                "policy.kind",
                format!("unknown policy {other:?}; expected \"simple\" or \"adaptive\""),
            ));
        }
    };
    let policy = PolicySpec { kind, tie_break_seed };

    let experiment = ExperimentConfig {
        space,
        objective,
        noise,
        policy,
        horizon,
        replications: replications as u32,
        master_seed,
        trace,
    };
    experiment.validate()?;

    // Sweep.
    let sweep_lengths = match &file.sweep {
        None => None,
        Some(s) => {
            if s.lengths.is_empty() {
                return Err(Error::config("sweep.lengths", "length list must not be empty"));
            }
            for &a in &s.lengths {
                if !(a > 0.0) || !a.is_finite() {
                    return Err(Error::config("sweep.lengths", format!("length {a} must be positive and finite")));
                }
            }
            Some(s.lengths.clone())
        }
    };

    // Rate.
    let rate = match &file.rate {
        None => None,
        Some(r) => {
            if r.horizons.len() < 3 {
                return Err(Error::config(
                    "rate.horizons",
                    format!("rate fitting needs at least 3 horizons, got {}", r.horizons.len()),
                ));
            }
            let mut horizons = Vec::with_capacity(r.horizons.len());
            for &t in &r.horizons {
                if t < 2 {
                    return Err(Error::config("rate.horizons", format!("horizon {t} must be at least 2")));
                }
                horizons.push(t as u64);
            }
            let rate_reps = positive_count(
                r.replications.unwrap_or(replications as i64),
                "rate.replications",
            )?;
            let band = match &r.band {
                None => None,
                Some(b) => {
                    if b.len() != 2 || !(b[0] <= b[1]) {
                        return Err(Error::config(
                            "rate.band",
                            "expected [lo, hi] with lo <= hi on the fitted slope",
                        ));
                    }
                    Some((b[0], b[1]))
                }
            };
            if prescribed {
                if !matches!(experiment.policy.kind, PolicyKind::Simple { .. }) {
                    return Err(Error::config(
                        "rate.prescribed_simple_length",
                        "per-horizon prescribed lengths apply to the fixed-grid policy only",
                    ));
                }
                // Surface a missing declaration now, not per horizon.
                prescribe_length(2)?;
            }
            Some(RatePlan {
                horizons,
                replications: rate_reps as u32,
                band,
                deflate: r.deflate.unwrap_or(false),
                prescribed_simple_length: prescribed,
            })
        }
    };

    // Diagnose.
    let diagnose = match &file.diagnose {
        None => None,
        Some(dg) => {
            let samples = positive_count(dg.samples.unwrap_or(200), "diagnose.samples")? as usize;
            let alpha = match dg.alpha {
                Some(alpha) => alpha,
                None => {
                    experiment
                        .objective
                        .assumption()
                        .ok_or_else(|| {
                            Error::config(
                                "diagnose.alpha",
                                "objective declares no smoothness exponent; set alpha explicitly",
                            )
                        })?
                        .alpha
                }
            };
            let default_cells_per_dim = DIAGNOSE_CELL_BUDGET.powf(1.0 / dim as f64).ceil();
            let grid_a = dg.grid_a.unwrap_or(experiment.space.max_side() / default_cells_per_dim);
            let eps_ladder = dg.eps_ladder.clone().unwrap_or_else(|| vec![0.05, 0.1, 0.2, 0.4, 0.8]);
            Some(DiagnosePlan { samples, alpha, grid_a, eps_ladder })
        }
    };

    // Echo: the same schema with every value concrete.
    let echo = EchoDoc {
        format_version: FORMAT_VERSION,
        seed_scheme: SEED_SCHEME.to_string(),
        experiment: EchoExperiment {
            horizon: horizon as i64,
            replications: replications as i64,
            master_seed: master_seed as i64,
            trace: match trace {
                TraceMode::Full => "full".to_string(),
                TraceMode::CumulativeOnly => "cumulative".to_string(),
            },
        },
        space: EchoSpace { dim: dim as i64, half_width, margin },
        objective: EchoObjective {
            name: o.name.clone(),
            offset: match o.name.as_str() {
                "f1" | "f2" => Some(o.offset.clone().unwrap_or_else(|| vec![0.5; dim])),
                _ => None,
            },
            norm: match o.name.as_str() {
                "f2" => Some(o.norm.clone().unwrap_or_else(|| "l2".to_string())),
                _ => None,
            },
            value: o.value,
            threshold: o.threshold,
            low: o.low,
            high: o.high,
        },
        assumption: experiment.objective.assumption().map(|a| EchoAssumption {
            alpha: a.alpha,
            beta: a.beta,
            m: a.m,
            c0: a.c0,
            a_max: a.a_max,
        }),
        noise: EchoNoise { scale },
        policy: match experiment.policy.kind {
            PolicyKind::Simple { a } => EchoPolicy {
                kind: "simple".to_string(),
                a: Some(a),
                a0: None,
                alpha: None,
                mu: None,
                tie_break_seed: tie_break_seed as i64,
            },
            PolicyKind::Adaptive { a0, alpha, mu } => EchoPolicy {
                kind: "adaptive".to_string(),
                a: None,
                a0: Some(a0),
                alpha: Some(alpha),
                mu: Some(mu),
                tie_break_seed: tie_break_seed as i64,
            },
        },
        sweep: sweep_lengths.clone().map(|lengths| EchoSweep { lengths }),
        rate: rate.as_ref().map(|r| EchoRate {
            horizons: r.horizons.iter().map(|&t| t as i64).collect(),
            replications: r.replications as i64,
            band: r.band.map(|(lo, hi)| vec![lo, hi]),
            deflate: r.deflate,
            prescribed_simple_length: r.prescribed_simple_length,
        }),
        diagnose: diagnose.as_ref().map(|d| EchoDiagnose {
            samples: d.samples as i64,
            alpha: d.alpha,
            grid_a: d.grid_a,
            eps_ladder: d.eps_ladder.clone(),
        }),
    };

    Ok(Resolved { experiment, sweep_lengths, rate, diagnose, echo })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [experiment]
        horizon = 1000

        [space]
        dim = 1

        [objective]
        name = "f1"

        [policy]
        kind = "adaptive"
    "#;

    fn resolve_str(text: &str) -> Result<Resolved> {
        resolve(&parse_config_str(text)?)
    }

    #[test]
    fn minimal_config_fills_documented_defaults() {
        let r = resolve_str(MINIMAL).unwrap();
        let e = &r.experiment;
        assert_eq!(e.horizon, 1000);
        assert_eq!(e.replications, 1);
        assert_eq!(e.master_seed, 0);
        assert_eq!(e.trace, TraceMode::CumulativeOnly);
        assert_eq!(e.space.dim(), 1);
        assert_eq!(e.space.max_side(), 2.0);
        assert_eq!(e.noise.scale(), 1.0);
        match e.policy.kind {
            PolicyKind::Adaptive { a0, alpha, mu } => {
                assert_eq!(a0, 2.0);
                assert_eq!(alpha, 2.0);
                // 1.01 x (1 + 2^(1+2)) x 10/12.
                assert!((mu - 1.01 * 9.0 * (10.0 / 12.0)).abs() < 1e-12, "mu {mu}");
            }
            _ => panic!("expected adaptive policy"),
        }
        assert!(r.sweep_lengths.is_none());
        assert!(r.rate.is_none());
        assert!(r.diagnose.is_none());
    }

    #[test]
    fn unknown_fields_are_named_in_the_error() {
        let bad = MINIMAL.replace("horizon", "horizn");
        let err = parse_config_str(&bad).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("horizn") || msg.contains("horizon"), "message: {msg}");
        let extra = format!("{MINIMAL}\n[typo_section]\nx = 1\n");
        assert!(parse_config_str(&extra).is_err());
    }

    #[test]
    fn overrides_reach_nested_fields_and_parse_types() {
        let overrides: Vec<String> = [
            "experiment.horizon=500",
            "policy.mu=9.25",
            "objective.name=f2",
            "objective.norm=sup",
            "policy.alpha=1.0",
            "sweep.lengths=[1.0, 0.5]",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        let file = parse_with_overrides(MINIMAL, &overrides).unwrap();
        let r = resolve(&file).unwrap();
        assert_eq!(r.experiment.horizon, 500);
        match r.experiment.policy.kind {
            PolicyKind::Adaptive { alpha, mu, .. } => {
                assert_eq!(alpha, 1.0);
                assert_eq!(mu, 9.25);
            }
            _ => panic!("expected adaptive policy"),
        }
        assert_eq!(r.sweep_lengths, Some(vec![1.0, 0.5]));

        assert!(parse_with_overrides(MINIMAL, &["no_equals_sign".to_string()]).is_err());
        assert!(parse_with_overrides(MINIMAL, &["experiment..horizon=5".to_string()]).is_err());
        // A path segment that lands on a scalar cannot be descended into.
        assert!(
            parse_with_overrides(MINIMAL, &["experiment.horizon.deeper=5".to_string()]).is_err()
        );
        // Unknown keys introduced by overrides are still schema errors.
        assert!(parse_with_overrides(MINIMAL, &["experiment.horzon=5".to_string()]).is_err());
    }

    #[test]
    fn echo_reproduces_the_resolved_configuration() {
        let text = format!(
            "{MINIMAL}\n[sweep]\nlengths = [2.0, 1.0, 0.5]\n\n[rate]\nhorizons = [100, 1000, 10000]\nband = [-0.65, -0.35]\n\n[diagnose]\nsamples = 150\n"
        );
        let first = resolve_str(&text).unwrap();
        let echo = first.echo_toml();
        let second = resolve_str(&echo).unwrap();
        assert_eq!(first.experiment, second.experiment);
        assert_eq!(first.sweep_lengths, second.sweep_lengths);
        assert_eq!(first.rate, second.rate);
        assert_eq!(first.diagnose, second.diagnose);
        assert_eq!(echo, second.echo_toml(), "echo is a fixed point");
        assert!(echo.contains("format_version = 1"));
        assert!(echo.contains("seed_scheme"));
    }

    #[test]
    fn version_and_scheme_stamps_are_checked() {
        let versioned = format!("format_version = 2\n{MINIMAL}");
        assert!(resolve_str(&versioned).is_err());
        let schemed = format!("seed_scheme = \"something else\"\n{MINIMAL}");
        assert!(resolve_str(&schemed).is_err());
        let ok = format!("format_version = 1\n{MINIMAL}");
        assert!(resolve_str(&ok).is_ok());
    }

    #[test]
    fn assumption_overrides_reach_the_guard() {
        // beta = 3 with alpha = 2 in dimension 2 violates beta <= d/alpha = 1.
        let text = MINIMAL.replace("dim = 1", "dim = 2");
        let text = format!("{text}\n[assumption]\nbeta = 3.0\nalpha = 2.0\n");
        let err = resolve_str(&text).unwrap_err();
        assert!(matches!(err, Error::Guard { .. }), "{err:?}");
        assert!(err.to_string().contains("exceeds d/alpha"), "{err}");
    }

    #[test]
    fn assumption_section_declares_constants_for_undeclared_shapes() {
        let flat = MINIMAL.replace("name = \"f1\"", "name = \"flat\"\nvalue = 2.0");
        // Partial declarations name the missing field.
        let partial = format!("{flat}\n[assumption]\nalpha = 1.0\nbeta = 1.0\n");
        let err = resolve_str(&partial).unwrap_err();
        assert!(err.to_string().contains("assumption.m"), "{err}");
        // A full declaration unlocks the adaptive defaults.
        let full = format!("{flat}\n[assumption]\nalpha = 1.0\nbeta = 1.0\nm = 2.0\n");
        let r = resolve_str(&full).unwrap();
        match r.experiment.policy.kind {
            PolicyKind::Adaptive { alpha, mu, .. } => {
                assert_eq!(alpha, 1.0);
                // 1.01 x (1 + 2^(1+1)) x 2.
                assert!((mu - 1.01 * 5.0 * 2.0).abs() < 1e-12, "mu {mu}");
            }
            _ => panic!("expected adaptive policy"),
        }
        let a = r.experiment.objective.assumption().unwrap();
        assert_eq!(a.c0, 2.0, "c0 defaults to 2^dim");
        assert_eq!(a.a_max, 2.0, "a_max defaults to the longest side");
        assert!(r.echo_toml().contains("[assumption]"));
    }

    #[test]
    fn missing_required_fields_are_reported_by_path() {
        let no_a = MINIMAL.replace("kind = \"adaptive\"", "kind = \"simple\"");
        let err = resolve_str(&no_a).unwrap_err();
        assert!(err.to_string().contains("policy.a"), "{err}");

        let flat = MINIMAL.replace("name = \"f1\"", "name = \"flat\"");
        let err = resolve_str(&flat).unwrap_err();
        assert!(err.to_string().contains("objective.value"), "{err}");

        // flat declares no constants, so the adaptive defaults cannot be
        // derived.
        let flat_valued = MINIMAL.replace("name = \"f1\"", "name = \"flat\"\nvalue = 2.0");
        let err = resolve_str(&flat_valued).unwrap_err();
        assert!(err.to_string().contains("policy.alpha"), "{err}");
    }

    #[test]
    fn inapplicable_fields_are_rejected() {
        let bad = MINIMAL.replace("name = \"f1\"", "name = \"f1\"\nvalue = 3.0");
        assert!(resolve_str(&bad).is_err());
        let bad = MINIMAL.replace("name = \"f1\"", "name = \"f1\"\nnorm = \"sup\"");
        assert!(resolve_str(&bad).is_err());
        let bad = MINIMAL.replace("kind = \"adaptive\"", "kind = \"adaptive\"\na = 0.5");
        assert!(resolve_str(&bad).is_err());
        let bad = MINIMAL.replace("kind = \"adaptive\"", "kind = \"simple\"\na = 0.5\nmu = 1.0");
        assert!(resolve_str(&bad).is_err());
    }

    #[test]
    fn step_objective_requires_dimension_one_and_its_fields() {
        let step = MINIMAL
            .replace("name = \"f1\"", "name = \"step\"\nthreshold = 0.0\nlow = 0.0\nhigh = 1.0")
            .replace("kind = \"adaptive\"", "kind = \"simple\"\na = 1.0");
        assert!(resolve_str(&step).is_ok());
        let bad_dim = step.replace("dim = 1", "dim = 2");
        assert!(resolve_str(&bad_dim).is_err());
        let missing = MINIMAL
            .replace("name = \"f1\"", "name = \"step\"\nthreshold = 0.0")
            .replace("kind = \"adaptive\"", "kind = \"simple\"\na = 1.0");
        assert!(resolve_str(&missing).is_err());
    }

    #[test]
    fn rate_plan_checks_ladder_band_and_prescription() {
        let base = MINIMAL.replace("kind = \"adaptive\"", "kind = \"simple\"\na = 0.5");
        let two_points = format!("{base}\n[rate]\nhorizons = [100, 1000]\n");
        assert!(resolve_str(&two_points).is_err());
        let bad_band = format!("{base}\n[rate]\nhorizons = [100, 1000, 10000]\nband = [0.5]\n");
        assert!(resolve_str(&bad_band).is_err());
        let tiny = format!("{base}\n[rate]\nhorizons = [1, 1000, 10000]\n");
        assert!(resolve_str(&tiny).is_err());

        // Prescribed lengths: the policy.a requirement is lifted and the
        // length comes from the declared constants at the run horizon.
        let prescribed = MINIMAL.replace("kind = \"adaptive\"", "kind = \"simple\"");
        let prescribed = format!(
            "{prescribed}\n[rate]\nhorizons = [100, 1000, 10000]\nprescribed_simple_length = true\n"
        );
        let r = resolve_str(&prescribed).unwrap();
        match r.experiment.policy.kind {
            PolicyKind::Simple { a } => {
                // T = 1000, d = 1, alpha = 2, beta = 0.5: denominator 4.
                let expected = 2.0 * 1000f64.powf(-0.25);
                assert!((a - expected).abs() < 1e-12, "a {a} vs {expected}");
            }
            _ => panic!("expected the fixed grid"),
        }
        // Prescription is meaningless for the adaptive policy.
        let adaptive_prescribed = format!(
            "{MINIMAL}\n[rate]\nhorizons = [100, 1000, 10000]\nprescribed_simple_length = true\n"
        );
        assert!(resolve_str(&adaptive_prescribed).is_err());
    }

    #[test]
    fn diagnose_plan_defaults_scale_with_dimension() {
        let text = format!("{MINIMAL}\n[diagnose]\n");
        let r = resolve_str(&text).unwrap();
        let d = r.diagnose.unwrap();
        assert_eq!(d.samples, 200);
        assert_eq!(d.alpha, 2.0);
        assert_eq!(d.eps_ladder, vec![0.05, 0.1, 0.2, 0.4, 0.8]);
        assert!((d.grid_a - 2.0 / 1e5).abs() < 1e-12, "grid_a {}", d.grid_a);

        let text2 = text.replace("dim = 1", "dim = 2");
        let r2 = resolve_str(&text2).unwrap();
        let d2 = r2.diagnose.unwrap();
        let cells = (2.0 / d2.grid_a).powi(2);
        assert!(cells >= 0.9e5 && cells <= 1.3e5, "cells {cells}");
    }
}
