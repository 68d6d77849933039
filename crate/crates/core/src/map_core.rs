//! Single-study summaries and the meta-analytic-predictive (MAP) prior.
//!
//! With a flat prior on the overall mean and one external estimate
//! `y₁ ± s₁`, the heterogeneity posterior equals its prior, and the
//! predictive distribution of a new study's effect θ₂ is the normal scale
//! mixture
//!
//! ```text
//! p(θ₂ | y₁, s₁) = ∫ N(θ₂; y₁, s₁² + 2τ²) p(τ) dτ
//! ```
//!
//! which is symmetric about `y₁` with variance `s₁² + 2·E[τ²]`.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::distribution::Univariate;
use crate::error::{Error, Result};
use crate::het_priors::{HeterogeneityPrior, Moment};
use crate::quadrature::{default_rule, until_converged, HalfLineMap, LevelCache, Node};
use crate::real::Real;
use crate::special::{normal_pdf, std_normal_cdf, std_normal_quantile};

/// One study's effect estimate and standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyEstimate<T> {
    label: String,
    y: T,
    se: T,
    n: Option<u64>,
}

impl<T: Real> StudyEstimate<T> {
    pub fn new(label: impl Into<String>, y: T, se: T, n: Option<u64>) -> Result<Self> {
        let label = label.into();
        if !y.is_finite() {
            return Err(Error::invalid(format!("study '{label}': estimate must be finite")));
        }
        if !(se > T::zero() && se.is_finite()) {
            return Err(Error::invalid(format!(
                "study '{label}': standard error must be positive, got {se}"
            )));
        }
        if n == Some(0) {
            return Err(Error::invalid(format!("study '{label}': patient count must be >= 1")));
        }
        Ok(Self { label, y, se, n })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn y(&self) -> T {
        self.y
    }

    pub fn se(&self) -> T {
        self.se
    }

    pub fn n(&self) -> Option<u64> {
        self.n
    }

    /// Mean and variance of θ₂ given this study and a fixed τ.
    pub fn conditional_moments(&self, tau: T) -> Result<(T, T)> {
        if !(tau >= T::zero()) {
            return Err(Error::invalid(format!("tau must be nonnegative, got {tau}")));
        }
        Ok((self.y, self.se * self.se + T::lit(2.0) * tau * tau))
    }
}

/// Predictive prior for a new study's effect: a normal scale mixture over τ.
#[derive(Debug, Clone)]
pub struct MapPrior<T: Real> {
    location: T,
    base_variance: T,
    tau_prior: HeterogeneityPrior<T>,
    map: HalfLineMap<T>,
    /// Per level: `x` = conditional variance s₁² + 2τ², `w` = weight · p(τ).
    nodes: LevelCache<T>,
}

/// Quadrature levels evaluated per mixture integral before the doubling check.
const START_LEVEL: usize = 0;

/// Offsets with `|d|/√2` beyond this many prior medians use the log-τ rule.
const FAR_RATIO: f64 = 4.0;

impl<T: Real> MapPrior<T> {
    /// MAP prior for a new study given one source study.
    ///
    /// The heterogeneity posterior coincides with `tau_prior`, so it is
    /// carried over unchanged.
    pub fn new(source: &StudyEstimate<T>, tau_prior: HeterogeneityPrior<T>) -> Self {
        Self::from_parts(source.y(), source.se() * source.se(), tau_prior)
    }

    pub fn from_parts(location: T, base_variance: T, tau_prior: HeterogeneityPrior<T>) -> Self {
        let map = HalfLineMap::new(tau_prior.median(), tau_prior.support_upper());
        Self {
            location,
            base_variance,
            tau_prior,
            map,
            nodes: LevelCache::new(),
        }
    }

    pub fn location(&self) -> T {
        self.location
    }

    pub fn base_variance(&self) -> T {
        self.base_variance
    }

    /// The heterogeneity posterior, which equals the prior here.
    pub fn tau_posterior(&self) -> &HeterogeneityPrior<T> {
        &self.tau_prior
    }

    pub fn tau_prior(&self) -> &HeterogeneityPrior<T> {
        &self.tau_prior
    }

    fn level_nodes(&self, level: usize) -> &[Node<T>] {
        self.nodes.get_or_init(level, || {
            let raw = self.map.nodes(level);
            let mass = raw
                .iter()
                .fold(T::zero(), |acc, n| acc + n.w * self.tau_prior.density(n.x));
            raw.into_iter()
                .map(|n| Node {
                    x: self.base_variance + T::lit(2.0) * n.x * n.x,
                    w: n.w * self.tau_prior.density(n.x) / mass,
                })
                .filter(|n| n.w > T::zero())
                .collect()
        })
    }

    /// `Σ w·f(v)` over the mixing nodes at one level.
    fn sum_at<F: Fn(T) -> T>(&self, level: usize, f: &F) -> T {
        self.level_nodes(level)
            .iter()
            .fold(T::zero(), |acc, n| acc + n.w * f(n.x))
    }

    /// `E_τ[f(s₁² + 2τ²)]` for an integrand centred on offset `d`.
    fn mix<F: Fn(T) -> T>(&self, d: T, f: F) -> Result<T> {
        let far = |f: &F| {
            until_converged(START_LEVEL, T::quad_rtol(), T::zero(), |level| {
                self.far_nodes(d, level)
                    .iter()
                    .fold(T::zero(), |acc, n| acc + n.w * f(n.x))
            })
            .map(|e| e.value)
        };
        if self.is_far(d) {
            return far(&f);
        }
        let cached = until_converged(START_LEVEL, T::quad_rtol(), T::zero(), |level| {
            self.sum_at(level, &f)
        });
        match cached {
            Ok(e) => Ok(e.value),
            Err(Error::QuadratureFailure { .. }) => far(&f),
            Err(e) => Err(e),
        }
    }

    fn is_far(&self, d: T) -> bool {
        d.abs() / T::lit(2.0).sqrt() > T::lit(FAR_RATIO) * self.tau_prior.median()
    }

    /// Mixing nodes in `t = ln τ` over `[ln c − 30, ln S + 20]` with
    /// `S = max(c, |d|/√2)`; `x` is the conditional variance and `w`
    /// includes `τ·p(τ)`.
    fn far_nodes(&self, d: T, level: usize) -> Vec<Node<T>> {
        let c = self.tau_prior.median();
        let split = c.max(d.abs() / T::lit(2.0).sqrt());
        let lo = c.ln() - T::lit(30.0);
        let mut hi = split.ln() + T::lit(20.0);
        if let Some(u) = self.tau_prior.support_upper() {
            hi = hi.min(u.ln());
        }
        let rule = default_rule::<T>();
        let panels = ((hi - lo).ceil().to_usize().unwrap_or(1)).max(1) << level;
        let h = (hi - lo) / T::count(panels);
        let mut ts = Vec::with_capacity(panels * rule.len());
        for k in 0..panels {
            let a = lo + h * T::count(k);
            rule.push_mapped(a, a + h, &mut ts);
        }
        ts.into_iter()
            .map(|n| {
                let tau = n.x.exp();
                Node {
                    x: self.base_variance + T::lit(2.0) * tau * tau,
                    w: n.w * tau * self.tau_prior.density(tau),
                }
            })
            .filter(|n| n.w > T::zero())
            .collect()
    }

    fn ln_mix(nodes: &[Node<T>], d: T) -> T {
        let half = T::lit(0.5);
        let term = |n: &Node<T>| n.w.ln() - half * (T::TAU() * n.x).ln() - half * d * d / n.x;
        let max = nodes.iter().map(term).fold(T::neg_infinity(), T::max);
        if !max.is_finite() {
            return max;
        }
        let sum = nodes
            .iter()
            .fold(T::zero(), |acc, n| acc + (term(n) - max).exp());
        max + sum.ln()
    }

    /// Convergence level of the log-τ rule for the log-density at offset `d`.
    fn far_level(&self, d: T) -> Result<usize> {
        until_converged(START_LEVEL, T::zero(), T::quad_rtol(), |level| {
            Self::ln_mix(&self.far_nodes(d, level), d)
        })
        .map(|e| e.level)
    }

    fn ln_density_at(&self, level: usize, theta: T) -> T {
        Self::ln_mix(self.level_nodes(level), theta - self.location)
    }

    /// Density of θ₂.
    pub fn density(&self, theta: T) -> Result<T> {
        let loc = self.location;
        self.mix(theta - loc, |v| normal_pdf(theta, loc, v))
    }

    /// Log-density of θ₂, stable far in the tails.
    pub fn ln_density(&self, theta: T) -> Result<T> {
        let d = theta - self.location;
        if !self.is_far(d) {
            match self.tail_level(theta) {
                Ok(level) => return Ok(self.ln_density_at(level, theta)),
                Err(Error::QuadratureFailure { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        let level = self.far_level(d)?;
        Ok(Self::ln_mix(&self.far_nodes(d, level), d))
    }

    fn tail_level(&self, theta: T) -> Result<usize> {
        until_converged(START_LEVEL, T::zero(), T::quad_rtol(), |level| {
            self.ln_density_at(level, theta)
        })
        .map(|e| e.level)
    }

    /// P(θ₂ ≤ θ).
    pub fn cdf(&self, theta: T) -> Result<T> {
        let d = theta - self.location;
        if d <= T::zero() {
            self.mix(d, |v| std_normal_cdf(d / v.sqrt()))
        } else {
            Ok(T::one() - self.mix(d, |v| std_normal_cdf(-d / v.sqrt()))?)
        }
    }

    /// P(θ₂ > θ).
    pub fn sf(&self, theta: T) -> Result<T> {
        self.cdf(self.location + self.location - theta)
    }

    /// Quantile by bisection on the CDF.
    pub fn quantile(&self, p: T) -> Result<T> {
        if !(p > T::zero() && p < T::one()) {
            return Err(Error::invalid(format!("probability must lie in (0, 1), got {p}")));
        }
        let half = T::lit(0.5);
        if p == half {
            return Ok(self.location);
        }
        // by symmetry, solve for the upper-tail offset with tail mass q
        let q = p.min(T::one() - p);
        let tail = |d: T| self.mix(d, |v| std_normal_cdf(-d / v.sqrt()));
        let tau_hi = self
            .tau_prior
            .quantile_unchecked((T::one() - q).max(half))
            .min(T::max_value().sqrt());
        let mut hi = T::lit(10.0) * (self.base_variance.sqrt() + T::lit(2.0) * tau_hi);
        let mut lo = T::zero();
        let mut widenings = 0;
        while tail(hi)? > q {
            lo = hi;
            hi = hi * T::lit(4.0);
            widenings += 1;
            if widenings > 200 || !hi.is_finite() {
                return Err(Error::NumericalInstability(format!(
                    "could not bracket the {p} quantile"
                )));
            }
        }
        let tol = T::prob_tol() * T::lit(1e-2);
        let mut mid = (lo + hi) * half;
        for _ in 0..400 {
            mid = (lo + hi) * half;
            let r = tail(mid)? - q;
            if r.abs() <= tol * q || hi - lo <= T::epsilon() * T::lit(4.0) * mid.max(T::one()) {
                break;
            }
            if r > T::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(if p > half {
            self.location + mid
        } else {
            self.location - mid
        })
    }

    /// Var(θ₂) = s₁² + 2·E[τ²]; infinite when E[τ²] is.
    pub fn variance(&self) -> Moment<T> {
        self.tau_prior
            .mean_sq()
            .map(|m| self.base_variance + T::lit(2.0) * m)
    }

    /// Standard deviation (combined standard uncertainty).
    pub fn sd(&self) -> Moment<T> {
        self.variance().map(T::sqrt)
    }

    /// Draws by inverse-CDF sampling of τ followed by a conditional normal draw.
    pub fn sample(&self, count: usize, seed: u64) -> Vec<T> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let tau = self.tau_prior.quantile_unchecked(open_unit(&mut rng));
                let z = std_normal_quantile(open_unit::<T>(&mut rng));
                let v = self.base_variance + T::lit(2.0) * tau * tau;
                self.location + z * v.sqrt()
            })
            .collect()
    }

    /// `(θ, density)` pairs on an evenly spaced grid of `points` values.
    pub fn density_grid(&self, lo: T, hi: T, points: usize) -> Result<Vec<(T, T)>> {
        linspace(lo, hi, points)?
            .into_iter()
            .map(|x| Ok((x, self.density(x)?)))
            .collect()
    }

    /// `(θ, cdf)` pairs on an evenly spaced grid of `points` values.
    pub fn cdf_grid(&self, lo: T, hi: T, points: usize) -> Result<Vec<(T, T)>> {
        linspace(lo, hi, points)?
            .into_iter()
            .map(|x| Ok((x, self.cdf(x)?)))
            .collect()
    }
}

impl<T: Real> Univariate<T> for MapPrior<T> {
    fn ln_pdf(&self, x: T) -> Result<T> {
        self.ln_density(x)
    }

    fn quantile(&self, p: T) -> Result<T> {
        MapPrior::quantile(self, p)
    }

    fn ln_pdf_stencil(&self, x: T, offsets: &[T]) -> Result<Vec<T>> {
        let d = x - self.location;
        let cached = if self.is_far(d) {
            None
        } else {
            match self.tail_level(x) {
                Ok(level) => Some(level),
                Err(Error::QuadratureFailure { .. }) => None,
                Err(e) => return Err(e),
            }
        };
        let Some(level) = cached else {
            let nodes = self.far_nodes(d, self.far_level(d)?);
            return Ok(offsets.iter().map(|&h| Self::ln_mix(&nodes, d + h)).collect());
        };
        Ok(offsets
            .iter()
            .map(|&h| self.ln_density_at(level, x + h))
            .collect())
    }
}

/// Uniform draw strictly inside (0, 1).
pub(crate) fn open_unit<T: Real>(rng: &mut impl RngCore) -> T {
    let bits = rng.next_u64() >> 11;
    T::lit((bits as f64 + 0.5) / (1u64 << 53) as f64)
}

pub(crate) fn linspace<T: Real>(lo: T, hi: T, points: usize) -> Result<Vec<T>> {
    if points < 2 {
        return Err(Error::invalid("a grid needs at least two points"));
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::invalid(format!("invalid grid range [{lo}, {hi}]")));
    }
    let step = (hi - lo) / T::count(points - 1);
    Ok((0..points)
        .map(|i| if i + 1 == points { hi } else { lo + step * T::count(i) })
        .collect())
}
