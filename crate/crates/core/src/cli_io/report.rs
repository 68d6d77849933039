//! JSON/TSV analysis reports.

use serde::{Deserialize, Serialize};

use super::csv_input::{EffectScale, StudyRow};
use super::format::{fmt_sig, round_sig, DEFAULT_DIGITS};
use crate::error::{Error, Result};
use crate::het_priors::HeterogeneityPrior;
use crate::information::{map_ess, uisd};
use crate::map_core::{MapPrior, StudyEstimate};
use crate::shrinkage::{shrinkage_posterior, width_ratio};

/// A value on the analysis scale, with its exponentiated counterpart when
/// the analysis scale is a log ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledValue {
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
}

/// A quantity that may be infinite; infinite values serialize as `null`
/// with a reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaybeFinite {
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRecord {
    pub label: String,
    pub estimate: f64,
    pub se: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inputs {
    pub source: StudyRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<StudyRecord>,
    pub prior: String,
    pub levels: Vec<f64>,
    pub effect_scale: EffectScale,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub level: f64,
    pub lower: ScaledValue,
    pub upper: ScaledValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSummary {
    pub location: ScaledValue,
    pub sd: MaybeFinite,
    pub intervals: Vec<Interval>,
    pub prob_below_zero: f64,
    pub uisd: f64,
    pub uisd_source: String,
    pub ess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShrinkageInterval {
    pub level: f64,
    pub lower: ScaledValue,
    pub upper: ScaledValue,
    pub width_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShrinkageSummary {
    pub median: ScaledValue,
    pub mean: ScaledValue,
    pub intervals: Vec<ShrinkageInterval>,
    pub prob_below_zero: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub draws: usize,
    pub seed: u64,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub inputs: Inputs,
    pub map_prior: MapSummary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shrinkage: Option<ShrinkageSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<MonteCarloSummary>,
}

/// Output options.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportOptions {
    pub digits: usize,
    /// Monte Carlo cross-check: number of draws and seed.
    pub monte_carlo: Option<(usize, u64)>,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            digits: DEFAULT_DIGITS,
            monte_carlo: None,
        }
    }
}

struct Scaler {
    scale: EffectScale,
    digits: usize,
}

impl Scaler {
    fn num(&self, x: f64) -> f64 {
        round_sig(x, self.digits)
    }

    fn value(&self, x: f64) -> ScaledValue {
        ScaledValue {
            value: self.num(x),
            ratio: match self.scale {
                EffectScale::LogRatio => Some(self.num(x.exp())),
                EffectScale::Linear => None,
            },
        }
    }

    fn record(&self, s: &StudyEstimate<f64>) -> StudyRecord {
        StudyRecord {
            label: s.label().to_string(),
            estimate: self.num(s.y()),
            se: self.num(s.se()),
            n: s.n(),
        }
    }
}

/// MAP prior (and, with a target, shrinkage) report with default options.
pub fn run_map_report(
    source: &StudyRow,
    tau_prior_spec: &str,
    target: Option<&StudyRow>,
    uisd_override: Option<f64>,
    levels: &[f64],
) -> Result<AnalysisReport> {
    run_map_report_with(
        source,
        tau_prior_spec,
        target,
        uisd_override,
        levels,
        ReportOptions::default(),
    )
}

pub fn run_map_report_with(
    source: &StudyRow,
    tau_prior_spec: &str,
    target: Option<&StudyRow>,
    uisd_override: Option<f64>,
    levels: &[f64],
    options: ReportOptions,
) -> Result<AnalysisReport> {
    let tau_prior: HeterogeneityPrior<f64> = tau_prior_spec.parse()?;
    if levels.is_empty() {
        return Err(Error::Config("at least one interval level is required".into()));
    }
    for &l in levels {
        if !(l > 0.0 && l < 1.0) {
            return Err(Error::invalid(format!("interval level must lie in (0, 1), got {l}")));
        }
    }
    if let Some(t) = target {
        if t.scale != source.scale {
            return Err(Error::Config(
                "source and target must be on the same effect scale".into(),
            ));
        }
    }
    let (unit_sd, uisd_source) = match (uisd_override, source.study.n()) {
        (Some(u), _) => {
            if !(u > 0.0 && u.is_finite()) {
                return Err(Error::invalid(format!("uisd must be positive, got {u}")));
            }
            (u, "override".to_string())
        }
        (None, Some(n)) => (uisd(n, source.study.se())?, format!("sqrt({n}) * se")),
        (None, None) => {
            return Err(Error::Config(
                "no unit-information sd: give the source's patient count or --uisd".into(),
            ))
        }
    };

    let sc = Scaler {
        scale: source.scale,
        digits: options.digits,
    };
    let map = MapPrior::new(&source.study, tau_prior);
    let mut intervals = Vec::with_capacity(levels.len());
    for &level in levels {
        let tail = (1.0 - level) / 2.0;
        intervals.push(Interval {
            level,
            lower: sc.value(map.quantile(tail)?),
            upper: sc.value(map.quantile(1.0 - tail)?),
        });
    }
    let sd = match map.sd().finite() {
        Some(v) => MaybeFinite {
            value: Some(sc.num(v)),
            reason: None,
        },
        None => MaybeFinite {
            value: None,
            reason: Some("infinite: heterogeneity prior has no finite second moment".into()),
        },
    };
    let map_prior = MapSummary {
        location: sc.value(map.location()),
        sd,
        intervals,
        prob_below_zero: sc.num(map.cdf(0.0)?),
        uisd: sc.num(unit_sd),
        uisd_source,
        ess: sc.num(map_ess(&map, unit_sd)?),
    };

    let shrinkage = match target {
        None => None,
        Some(t) => {
            let post = shrinkage_posterior(&source.study, &t.study, &tau_prior)?;
            let mut intervals = Vec::with_capacity(levels.len());
            for &level in levels {
                let s = post.summary(level)?;
                intervals.push(ShrinkageInterval {
                    level,
                    lower: sc.value(s.lower),
                    upper: sc.value(s.upper),
                    width_ratio: sc.num(width_ratio(&post, &t.study, level)?),
                });
            }
            Some(ShrinkageSummary {
                median: sc.value(post.quantile(0.5)?),
                mean: sc.value(post.mean()),
                intervals,
                prob_below_zero: sc.num(post.cdf(0.0)),
            })
        }
    };

    let monte_carlo = options.monte_carlo.map(|(draws, seed)| {
        let xs = map.sample(draws.max(2), seed);
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        MonteCarloSummary {
            draws: xs.len(),
            seed,
            mean: sc.num(mean),
            sd: sc.num(var.sqrt()),
        }
    });

    Ok(AnalysisReport {
        inputs: Inputs {
            source: sc.record(&source.study),
            target: target.map(|t| sc.record(&t.study)),
            prior: tau_prior.to_string(),
            levels: levels.to_vec(),
            effect_scale: source.scale,
        },
        map_prior,
        shrinkage,
        monte_carlo,
    })
}

impl AnalysisReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// `path<TAB>value` lines, one per scalar field, in JSON field order.
    pub fn to_tsv(&self, digits: usize) -> Result<String> {
        let value = serde_json::to_value(self)?;
        let mut out = String::from("field\tvalue\n");
        flatten(&value, String::new(), digits, &mut out);
        Ok(out)
    }
}

fn flatten(v: &serde_json::Value, path: String, digits: usize, out: &mut String) {
    use serde_json::Value;
    let join = |k: &str| {
        if path.is_empty() {
            k.to_string()
        } else {
            format!("{path}.{k}")
        }
    };
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                flatten(child, join(k), digits, out);
            }
        }
        Value::Array(items) => {
            for (i, child) in items.iter().enumerate() {
                flatten(child, join(&i.to_string()), digits, out);
            }
        }
        Value::Null => out.push_str(&format!("{path}\t\n")),
        Value::Number(n) => {
            let text = match (n.as_u64(), n.as_f64()) {
                (Some(u), _) => u.to_string(),
                (None, Some(f)) => fmt_sig(f, digits),
                _ => n.to_string(),
            };
            out.push_str(&format!("{path}\t{text}\n"));
        }
        Value::String(s) => out.push_str(&format!("{path}\t{s}\n")),
        Value::Bool(b) => out.push_str(&format!("{path}\t{b}\n")),
    }
}
