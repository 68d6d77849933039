//! Two-study shrinkage: the posterior of the target study's effect θ₂.
//!
//! The primary route multiplies the MAP prior derived from the source study
//! by the target study's likelihood. [`mac_oracle`] computes the same
//! posterior from the joint two-study hierarchical model, conditioning on τ
//! and mixing over its posterior, and serves as an independent check.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::het_priors::HeterogeneityPrior;
use crate::map_core::{linspace, MapPrior, StudyEstimate};
use crate::quadrature::{until_converged, HalfLineMap, MAX_LEVELS};
use crate::real::Real;
use crate::special::{normal_pdf, std_normal_quantile};

/// Grid construction settings.
#[derive(Debug, Clone, Copy)]
pub struct GridSettings {
    pub points: usize,
    /// Edge density must fall below this fraction of the peak.
    pub edge_ratio: f64,
    pub max_widenings: usize,
}

impl Default for GridSettings {
    fn default() -> Self {
        Self {
            points: 4001,
            edge_ratio: 1e-12,
            max_widenings: 8,
        }
    }
}

/// Posterior density of θ₂ tabulated on a grid and normalized by the
/// trapezoidal rule.
#[derive(Debug, Clone)]
pub struct ShrinkagePosterior<T: Real> {
    grid: Vec<T>,
    density: Vec<T>,
    /// Cumulative trapezoidal mass at each grid point.
    cumulative: Vec<T>,
    source_map: MapPrior<T>,
    target: StudyEstimate<T>,
}

/// Central credible interval and related summaries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorSummary<T> {
    pub median: T,
    pub lower: T,
    pub upper: T,
    pub prob_below_zero: T,
}

impl<T: Real> ShrinkagePosterior<T> {
    /// Tabulates an unnormalized density on an adaptively chosen grid.
    pub(crate) fn tabulate<F>(
        unnormalized: F,
        initial: (T, T),
        settings: GridSettings,
        source_map: MapPrior<T>,
        target: StudyEstimate<T>,
    ) -> Result<Self>
    where
        F: Fn(T) -> Result<T>,
    {
        let points = settings.points.max(3);
        let edge = T::lit(settings.edge_ratio);
        let eval = |lo: T, hi: T| -> Result<(Vec<T>, Vec<T>)> {
            let grid = linspace(lo, hi, points)?;
            let dens = grid.iter().map(|&x| unnormalized(x)).collect::<Result<Vec<_>>>()?;
            Ok((grid, dens))
        };
        let peak_of = |d: &[T]| d.iter().copied().fold(T::zero(), T::max);

        let (mut lo, mut hi) = initial;
        let (mut grid, mut dens) = eval(lo, hi)?;
        let mut widenings = 0;
        loop {
            let peak = peak_of(&dens);
            if !(peak > T::zero()) || !peak.is_finite() {
                return Err(Error::NumericalInstability(
                    "posterior density vanished on the grid".into(),
                ));
            }
            let left = dens[0] > edge * peak;
            let right = dens[points - 1] > edge * peak;
            if !left && !right {
                break;
            }
            widenings += 1;
            if widenings > settings.max_widenings {
                let total = trapezoid_total(&grid, &dens);
                let h = grid[1] - grid[0];
                let edge_mass = (dens[0] + dens[points - 1]) * h;
                return Err(Error::GridCoverage {
                    mass: (T::one() - edge_mass / total).as_f64(),
                });
            }
            let span = hi - lo;
            if left {
                lo = lo - span;
            }
            if right {
                hi = hi + span;
            }
            (grid, dens) = eval(lo, hi)?;
        }

        // zoom onto the region carrying non-negligible density
        for _ in 0..4 {
            let peak = peak_of(&dens);
            let floor = edge * T::lit(1e-2) * peak;
            let first = dens.iter().position(|&d| d >= floor).unwrap_or(0);
            let last = dens.iter().rposition(|&d| d >= floor).unwrap_or(points - 1);
            let new_lo = grid[first.saturating_sub(1)];
            let new_hi = grid[(last + 1).min(points - 1)];
            if (new_hi - new_lo) * T::lit(2.0) > hi - lo {
                break;
            }
            lo = new_lo;
            hi = new_hi;
            (grid, dens) = eval(lo, hi)?;
        }

        let total = trapezoid_total(&grid, &dens);
        let density: Vec<T> = dens.iter().map(|&d| d / total).collect();
        let mut cumulative = Vec::with_capacity(points);
        let mut acc = T::zero();
        cumulative.push(acc);
        for i in 1..points {
            acc = acc + (grid[i] - grid[i - 1]) * (density[i] + density[i - 1]) * T::lit(0.5);
            cumulative.push(acc);
        }
        Ok(Self {
            grid,
            density,
            cumulative,
            source_map,
            target,
        })
    }

    pub fn grid(&self) -> &[T] {
        &self.grid
    }

    pub fn density(&self) -> &[T] {
        &self.density
    }

    pub fn source_map(&self) -> &MapPrior<T> {
        &self.source_map
    }

    pub fn target(&self) -> &StudyEstimate<T> {
        &self.target
    }

    fn locate(&self, x: T) -> Option<usize> {
        let n = self.grid.len();
        if x < self.grid[0] || x > self.grid[n - 1] {
            return None;
        }
        let i = self.grid.partition_point(|&g| g <= x);
        Some(i.saturating_sub(1).min(n - 2))
    }

    /// Linear interpolation of the tabulated density; zero off the grid.
    pub fn interpolate(&self, x: T) -> T {
        match self.locate(x) {
            None => T::zero(),
            Some(i) => {
                let t = (x - self.grid[i]) / (self.grid[i + 1] - self.grid[i]);
                self.density[i] + t * (self.density[i + 1] - self.density[i])
            }
        }
    }

    /// Trapezoidal CDF.
    pub fn cdf(&self, x: T) -> T {
        let n = self.grid.len();
        if x <= self.grid[0] {
            return T::zero();
        }
        if x >= self.grid[n - 1] {
            return self.cumulative[n - 1];
        }
        let i = self.locate(x).expect("inside grid");
        let fx = self.interpolate(x);
        self.cumulative[i] + (x - self.grid[i]) * (self.density[i] + fx) * T::lit(0.5)
    }

    /// Inverse of the trapezoidal CDF.
    pub fn quantile(&self, p: T) -> Result<T> {
        if !(p > T::zero() && p < T::one()) {
            return Err(Error::invalid(format!("probability must lie in (0, 1), got {p}")));
        }
        let n = self.grid.len();
        let i = self
            .cumulative
            .partition_point(|&c| c < p)
            .saturating_sub(1)
            .min(n - 2);
        let h = self.grid[i + 1] - self.grid[i];
        let f0 = self.density[i];
        let slope = (self.density[i + 1] - f0) / h;
        let need = p - self.cumulative[i];
        // need = f0·d + slope·d²/2
        let d = if slope.abs() <= T::epsilon() * f0.max(T::min_positive_value()) / h {
            need / f0
        } else {
            let disc = (f0 * f0 + T::lit(2.0) * slope * need).max(T::zero());
            T::lit(2.0) * need / (f0 + disc.sqrt())
        };
        Ok(self.grid[i] + d.max(T::zero()).min(h))
    }

    /// Posterior mean by the trapezoidal rule.
    pub fn mean(&self) -> T {
        let mut acc = T::zero();
        for i in 1..self.grid.len() {
            let h = self.grid[i] - self.grid[i - 1];
            acc = acc
                + h * (self.grid[i] * self.density[i] + self.grid[i - 1] * self.density[i - 1])
                    * T::lit(0.5);
        }
        acc
    }

    /// Trapezoidal integral of the stored (normalized) density.
    pub fn total_mass(&self) -> T {
        trapezoid_total(&self.grid, &self.density)
    }

    /// Median, central interval at `level`, and P(θ₂ < 0).
    pub fn summary(&self, level: T) -> Result<PosteriorSummary<T>> {
        if !(level > T::zero() && level < T::one()) {
            return Err(Error::invalid(format!("interval level must lie in (0, 1), got {level}")));
        }
        let tail = (T::one() - level) * T::lit(0.5);
        Ok(PosteriorSummary {
            median: self.quantile(T::lit(0.5))?,
            lower: self.quantile(tail)?,
            upper: self.quantile(T::one() - tail)?,
            prob_below_zero: self.cdf(T::zero()),
        })
    }

    /// Largest absolute density difference to another posterior, evaluated on
    /// this posterior's grid.
    pub fn sup_distance(&self, other: &ShrinkagePosterior<T>) -> T {
        self.grid
            .iter()
            .zip(&self.density)
            .map(|(&x, &d)| (d - other.interpolate(x)).abs())
            .fold(T::zero(), T::max)
    }
}

fn trapezoid_total<T: Real>(grid: &[T], dens: &[T]) -> T {
    grid.windows(2)
        .zip(dens.windows(2))
        .fold(T::zero(), |acc, (g, d)| {
            acc + (g[1] - g[0]) * (d[0] + d[1]) * T::lit(0.5)
        })
}

/// Initial grid: ±12 widths around whichever of the MAP prior and the target
/// likelihood is narrower, since the posterior cannot extend beyond either.
pub(crate) fn initial_range<T: Real>(
    source: &StudyEstimate<T>,
    target: &StudyEstimate<T>,
    tau_prior: &HeterogeneityPrior<T>,
) -> (T, T) {
    let map = MapPrior::new(source, *tau_prior);
    let mut prior_width = source.se();
    if let Some(sd) = map.sd().finite() {
        prior_width = prior_width.max(sd);
    }
    prior_width = prior_width.max(T::lit(3.0) * tau_prior.quantile_unchecked(T::lit(0.99)));
    let k = T::lit(12.0);
    if target.se() < prior_width {
        (target.y() - k * target.se(), target.y() + k * target.se())
    } else {
        (source.y() - k * prior_width, source.y() + k * prior_width)
    }
}

/// Posterior of θ₂ ∝ N(y₂; θ₂, s₂²) · MAP(θ₂ | y₁, s₁), with default grid settings.
pub fn shrinkage_posterior<T: Real>(
    source: &StudyEstimate<T>,
    target: &StudyEstimate<T>,
    tau_prior: &HeterogeneityPrior<T>,
) -> Result<ShrinkagePosterior<T>> {
    shrinkage_posterior_with(source, target, tau_prior, GridSettings::default())
}

pub fn shrinkage_posterior_with<T: Real>(
    source: &StudyEstimate<T>,
    target: &StudyEstimate<T>,
    tau_prior: &HeterogeneityPrior<T>,
    settings: GridSettings,
) -> Result<ShrinkagePosterior<T>> {
    let map = MapPrior::new(source, *tau_prior);
    let (y2, v2) = (target.y(), target.se() * target.se());
    let range = initial_range(source, target, tau_prior);
    let f = |theta: T| Ok(normal_pdf(y2, theta, v2) * map.density(theta)?);
    ShrinkagePosterior::tabulate(f, range, settings, map.clone(), target.clone())
}

/// θ₂ | τ, y₁, y₂ mixture from the joint two-study model.
struct JointModel<T: Real> {
    y: [T; 2],
    s2: [T; 2],
    tau_prior: HeterogeneityPrior<T>,
    map: HalfLineMap<T>,
    /// Per level: (conditional mean, conditional variance, weight).
    levels: Vec<OnceLock<Vec<(T, T, T)>>>,
}

impl<T: Real> JointModel<T> {
    fn new(
        source: &StudyEstimate<T>,
        target: &StudyEstimate<T>,
        tau_prior: HeterogeneityPrior<T>,
    ) -> Self {
        Self {
            y: [source.y(), target.y()],
            s2: [source.se() * source.se(), target.se() * target.se()],
            map: HalfLineMap::new(tau_prior.median(), tau_prior.support_upper()),
            tau_prior,
            levels: (0..MAX_LEVELS).map(|_| OnceLock::new()).collect(),
        }
    }

    /// Conditional on τ under a flat prior for μ: log marginal likelihood of
    /// both estimates, and the mean and variance of θ₂.
    fn conditional(&self, tau: T) -> (T, T, T) {
        let half = T::lit(0.5);
        let t2 = tau * tau;
        let v = [self.s2[0] + t2, self.s2[1] + t2];
        let precision = v[0].recip() + v[1].recip();
        let mu_hat = (self.y[0] / v[0] + self.y[1] / v[1]) / precision;
        let ln_lik = -half * precision.ln()
            - half * (v[0].ln() + v[1].ln())
            - half
                * ((self.y[0] - mu_hat).powi(2) / v[0] + (self.y[1] - mu_hat).powi(2) / v[1]);
        let shrink = self.s2[1] / v[1];
        let mean = shrink * mu_hat + (T::one() - shrink) * self.y[1];
        let var = (T::one() - shrink) * self.s2[1] + shrink * shrink / precision;
        (ln_lik, mean, var)
    }

    fn nodes(&self, level: usize) -> &[(T, T, T)] {
        self.levels[level].get_or_init(|| {
            let raw = self.map.nodes(level);
            let cond: Vec<_> = raw.iter().map(|n| self.conditional(n.x)).collect();
            let max_ll = cond
                .iter()
                .map(|c| c.0)
                .fold(T::neg_infinity(), T::max);
            let weights: Vec<T> = raw
                .iter()
                .zip(&cond)
                .map(|(n, c)| n.w * self.tau_prior.density(n.x) * (c.0 - max_ll).exp())
                .collect();
            let total = weights.iter().fold(T::zero(), |a, &w| a + w);
            cond.into_iter()
                .zip(weights)
                .filter(|(_, w)| *w > T::zero())
                .map(|((_, m, v), w)| (m, v, w / total))
                .collect()
        })
    }

    fn density(&self, theta: T) -> Result<T> {
        until_converged(0, T::quad_rtol(), T::zero(), |level| {
            self.nodes(level)
                .iter()
                .fold(T::zero(), |acc, &(m, v, w)| acc + w * normal_pdf(theta, m, v))
        })
        .map(|e| e.value)
    }
}

/// Posterior of θ₂ computed through the joint two-study model.
pub fn mac_oracle<T: Real>(
    source: &StudyEstimate<T>,
    target: &StudyEstimate<T>,
    tau_prior: &HeterogeneityPrior<T>,
) -> Result<ShrinkagePosterior<T>> {
    let joint = JointModel::new(source, target, *tau_prior);
    let range = initial_range(source, target, tau_prior);
    ShrinkagePosterior::tabulate(
        |theta| joint.density(theta),
        range,
        GridSettings::default(),
        MapPrior::new(source, *tau_prior),
        target.clone(),
    )
}

/// Posterior interval width relative to the target-only interval
/// `y₂ ± Φ⁻¹((1 + level)/2)·s₂`.
pub fn width_ratio<T: Real>(
    post: &ShrinkagePosterior<T>,
    target: &StudyEstimate<T>,
    level: T,
) -> Result<T> {
    let s = post.summary(level)?;
    let z = std_normal_quantile((T::one() + level) * T::lit(0.5));
    Ok((s.upper - s.lower) / (T::lit(2.0) * z * target.se()))
}
