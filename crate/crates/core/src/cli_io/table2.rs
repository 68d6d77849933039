//! Side-by-side summaries of MAP priors under several heterogeneity priors.

use serde::{Deserialize, Serialize};

use super::format::fmt_sig;
use crate::error::Result;
use crate::het_priors::{Family, HeterogeneityPrior};
use crate::information::map_ess;
use crate::map_core::MapPrior;

/// One-sided quantile levels reported for θ₂ − y₁.
pub const QUANTILE_LEVELS: [f64; 3] = [0.95, 0.975, 0.995];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorComparisonRow {
    pub family: Family,
    pub scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<f64>,
    pub tau_median: f64,
    pub ess: f64,
    /// `None` when the MAP prior has infinite variance.
    pub sd: Option<f64>,
    /// Centred quantiles at [`QUANTILE_LEVELS`].
    pub quantiles: [f64; 3],
}

/// Summarizes the MAP prior for source standard error `source_se` under each
/// heterogeneity prior.
pub fn table2_command(
    source_se: f64,
    tau_priors: &[HeterogeneityPrior<f64>],
    uisd: f64,
) -> Result<Vec<PriorComparisonRow>> {
    tau_priors
        .iter()
        .map(|prior| {
            let map = MapPrior::from_parts(0.0, source_se * source_se, *prior);
            let mut quantiles = [0.0; 3];
            for (q, &p) in quantiles.iter_mut().zip(QUANTILE_LEVELS.iter()) {
                *q = map.quantile(p)?;
            }
            Ok(PriorComparisonRow {
                family: prior.family(),
                scale: prior.scale(),
                shape: prior.shape(),
                tau_median: prior.median(),
                ess: map_ess(&map, uisd)?,
                sd: map.sd().finite(),
                quantiles,
            })
        })
        .collect()
}

/// Half-normal priors of scale 0.25, 0.5 and 1, followed by other families
/// scaled to the half-normal(0.5) median.
pub fn common_median_comparison() -> Vec<HeterogeneityPrior<f64>> {
    let hn = |s| HeterogeneityPrior::half_normal(s).expect("valid scale");
    let median = hn(0.5).median();
    let at_median = |family, shape| {
        HeterogeneityPrior::with_median(family, median, shape).expect("valid prior")
    };
    vec![
        hn(0.5),
        hn(0.25),
        hn(1.0),
        at_median(Family::HalfStudentT, Some(4.0)),
        at_median(Family::HalfCauchy, None),
        at_median(Family::HalfLogistic, None),
        at_median(Family::Exponential, None),
        at_median(Family::Lomax, Some(6.0)),
        at_median(Family::Lomax, Some(1.0)),
    ]
}

pub const TABLE2_HEADER: &str = "family\tshape\tscale\ttau_median\tess\tsd\tq95.0\tq97.5\tq99.5";

/// Tab-separated rendering; infinite standard deviations are empty cells.
pub fn render_tsv(rows: &[PriorComparisonRow], digits: usize) -> String {
    let mut out = String::from(TABLE2_HEADER);
    out.push('\n');
    for r in rows {
        let cells = [
            r.family.name().to_string(),
            r.shape.map(|s| fmt_sig(s, digits)).unwrap_or_default(),
            fmt_sig(r.scale, digits),
            fmt_sig(r.tau_median, digits),
            fmt_sig(r.ess, digits),
            r.sd.map(|s| fmt_sig(s, digits)).unwrap_or_default(),
            fmt_sig(r.quantiles[0], digits),
            fmt_sig(r.quantiles[1], digits),
            fmt_sig(r.quantiles[2], digits),
        ];
        out.push_str(&cells.join("\t"));
        out.push('\n');
    }
    out
}
