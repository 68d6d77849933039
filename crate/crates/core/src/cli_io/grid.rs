//! Plot-ready two-column grid exports.

use std::io::Write;
use std::path::Path;

use super::format::{fmt_sig, DEFAULT_DIGITS};
use crate::correspondences::PowerPriorMap;
use crate::error::Result;
use crate::het_priors::HeterogeneityPrior;
use crate::map_core::{linspace, MapPrior, StudyEstimate};
use crate::shrinkage::ShrinkagePosterior;
use crate::special::normal_pdf;

/// What to tabulate.
#[derive(Debug, Clone, Copy)]
pub enum GridSource<'a> {
    MapDensity(&'a MapPrior<f64>),
    MapLnDensity(&'a MapPrior<f64>),
    MapCdf(&'a MapPrior<f64>),
    /// The moment-matched normal, for comparison with the mixture.
    MomentMatchedNormal(&'a MapPrior<f64>),
    TauPrior(&'a HeterogeneityPrior<f64>),
    PowerExponent(&'a PowerPriorMap<f64>),
    /// Normalized likelihood of one study, as a density in θ.
    Likelihood(&'a StudyEstimate<f64>),
    Posterior(&'a ShrinkagePosterior<f64>),
}

impl GridSource<'_> {
    pub fn evaluate(&self, x: f64) -> Result<f64> {
        Ok(match self {
            GridSource::MapDensity(m) => m.density(x)?,
            GridSource::MapLnDensity(m) => m.ln_density(x)?,
            GridSource::MapCdf(m) => m.cdf(x)?,
            GridSource::MomentMatchedNormal(m) => match m.variance().finite() {
                Some(v) => normal_pdf(x, m.location(), v),
                None => f64::NAN,
            },
            GridSource::TauPrior(p) => p.density(x),
            GridSource::PowerExponent(p) => p.density(x),
            GridSource::Likelihood(s) => normal_pdf(x, s.y(), s.se() * s.se()),
            GridSource::Posterior(p) => p.interpolate(x),
        })
    }
}

/// Writes `points` rows of `abscissa<TAB>value` over `[lo, hi]`.
pub fn write_grid<W: Write>(
    source: GridSource<'_>,
    lo: f64,
    hi: f64,
    points: usize,
    digits: usize,
    mut out: W,
) -> Result<()> {
    for x in linspace(lo, hi, points)? {
        let y = source.evaluate(x)?;
        writeln!(out, "{}\t{}", fmt_sig(x, digits), fmt_sig(y, digits))?;
    }
    Ok(())
}

/// Writes a grid file with the default 12 significant digits.
pub fn emit_density_grid(
    source: GridSource<'_>,
    range: (f64, f64),
    points: usize,
    path: impl AsRef<Path>,
) -> Result<()> {
    let file = std::fs::File::create(path.as_ref())?;
    let mut w = std::io::BufWriter::new(file);
    write_grid(source, range.0, range.1, points, DEFAULT_DIGITS, &mut w)?;
    w.flush()?;
    Ok(())
}
