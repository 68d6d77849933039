//! Links between the MAP prior and two other borrowing devices.
//!
//! * Power prior: conditional on τ, the MAP prior `N(y₁, s₁² + 2τ²)` equals a
//!   power prior `N(y₁, s₁²/a₀)` with `a₀ = 1/(2τ²/s₁² + 1)`; a prior on τ
//!   therefore induces a prior on `a₀`.
//! * Bias allowance (reference model): the target effect is `α`, the source
//!   effect is `N(α, β²)`, with `β = √2·τ`. Under a flat prior on the effect
//!   this yields the same shrinkage posterior for the target.

use crate::error::{Error, Result};
use crate::het_priors::HeterogeneityPrior;
use crate::map_core::{MapPrior, StudyEstimate};
use crate::quadrature::{until_converged, HalfLineMap, LevelCache, Node};
use crate::real::Real;
use crate::shrinkage::{initial_range, GridSettings, ShrinkagePosterior};
use crate::special::normal_pdf;

/// Power-prior exponent for a fixed heterogeneity.
pub fn a0_from_tau<T: Real>(tau: T, s1: T) -> Result<T> {
    check_se(s1)?;
    if !(tau >= T::zero()) {
        return Err(Error::invalid(format!("tau must be nonnegative, got {tau}")));
    }
    let r = tau / s1;
    Ok((T::lit(2.0) * r * r + T::one()).recip())
}

/// Heterogeneity giving the exponent `a0 ∈ (0, 1]`.
pub fn tau_from_a0<T: Real>(a0: T, s1: T) -> Result<T> {
    check_se(s1)?;
    if !(a0 > T::zero() && a0 <= T::one()) {
        return Err(Error::invalid(format!("a0 must lie in (0, 1], got {a0}")));
    }
    Ok(s1 * ((T::one() - a0) / (T::lit(2.0) * a0)).sqrt())
}

fn check_se<T: Real>(s1: T) -> Result<()> {
    if s1 > T::zero() && s1.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("s1 must be positive, got {s1}")))
    }
}

/// Prior on the power-prior exponent implied by a heterogeneity prior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerPriorMap<T> {
    s1: T,
    tau_prior: HeterogeneityPrior<T>,
}

impl<T: Real> PowerPriorMap<T> {
    pub fn new(s1: T, tau_prior: HeterogeneityPrior<T>) -> Result<Self> {
        check_se(s1)?;
        Ok(Self { s1, tau_prior })
    }

    pub fn s1(&self) -> T {
        self.s1
    }

    pub fn tau_prior(&self) -> &HeterogeneityPrior<T> {
        &self.tau_prior
    }

    /// Density of `a₀` on the open unit interval:
    /// `s₁/(2√2) · √(a₀/(1−a₀)) / a₀² · p(s₁·√((1−a₀)/(2a₀)))`.
    ///
    /// Outside (0, 1) the density is zero; at the endpoints it may diverge.
    pub fn density(&self, a0: T) -> T {
        if !(a0 > T::zero() && a0 < T::one()) {
            return T::zero();
        }
        let one = T::one();
        let two = T::lit(2.0);
        let tau = self.s1 * ((one - a0) / (two * a0)).sqrt();
        self.s1 / (two * T::SQRT_2()) * (a0 / (one - a0)).sqrt() / (a0 * a0)
            * self.tau_prior.density(tau)
    }

    /// P(a₀' ≤ a₀) = P(τ ≥ τ(a₀)).
    pub fn cdf(&self, a0: T) -> T {
        if a0 <= T::zero() {
            return T::zero();
        }
        if a0 >= T::one() {
            return T::one();
        }
        let tau = self.s1 * ((T::one() - a0) / (T::lit(2.0) * a0)).sqrt();
        self.tau_prior.sf(tau)
    }
}

/// Evaluates the a₀ density for a heterogeneity prior.
pub fn a0_density<T: Real>(tau_prior: &HeterogeneityPrior<T>, s1: T, a0: T) -> Result<T> {
    Ok(PowerPriorMap::new(s1, *tau_prior)?.density(a0))
}

/// Density of the bias standard deviation β = √2·τ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasAllowancePrior<T> {
    tau_prior: HeterogeneityPrior<T>,
}

impl<T: Real> BiasAllowancePrior<T> {
    pub fn new(tau_prior: HeterogeneityPrior<T>) -> Self {
        Self { tau_prior }
    }

    pub fn tau_prior(&self) -> &HeterogeneityPrior<T> {
        &self.tau_prior
    }

    /// q(β) = p(β/√2)/√2.
    pub fn density(&self, beta: T) -> T {
        self.tau_prior.density(beta / T::SQRT_2()) / T::SQRT_2()
    }

    pub fn cdf(&self, beta: T) -> T {
        self.tau_prior.cdf(beta / T::SQRT_2())
    }

    pub fn median(&self) -> T {
        T::SQRT_2() * self.tau_prior.median()
    }

    pub fn support_upper(&self) -> Option<T> {
        self.tau_prior.support_upper().map(|b| b * T::SQRT_2())
    }
}

/// β prior corresponding to a heterogeneity prior.
pub fn beta_prior_from_tau_prior<T: Real>(tau_prior: &HeterogeneityPrior<T>) -> BiasAllowancePrior<T> {
    BiasAllowancePrior::new(*tau_prior)
}

/// Marginal source likelihood under the reference model,
/// `∫ q(β) N(y₁; α, s₁² + β²) dβ`, as a function of α.
struct SourceLikelihood<T: Real> {
    y1: T,
    s1_sq: T,
    beta_prior: BiasAllowancePrior<T>,
    map: HalfLineMap<T>,
    nodes: LevelCache<T>,
}

impl<T: Real> SourceLikelihood<T> {
    fn new(source: &StudyEstimate<T>, beta_prior: BiasAllowancePrior<T>) -> Self {
        Self {
            y1: source.y(),
            s1_sq: source.se() * source.se(),
            map: HalfLineMap::new(beta_prior.median(), beta_prior.support_upper()),
            beta_prior,
            nodes: LevelCache::new(),
        }
    }

    fn nodes(&self, level: usize) -> &[Node<T>] {
        self.nodes.get_or_init(level, || {
            self.map
                .nodes(level)
                .into_iter()
                .map(|n| Node {
                    x: self.s1_sq + n.x * n.x,
                    w: n.w * self.beta_prior.density(n.x),
                })
                .filter(|n| n.w > T::zero())
                .collect()
        })
    }

    fn eval(&self, alpha: T) -> Result<T> {
        until_converged(0, T::quad_rtol(), T::zero(), |level| {
            self.nodes(level)
                .iter()
                .fold(T::zero(), |acc, n| acc + n.w * normal_pdf(self.y1, alpha, n.x))
        })
        .map(|e| e.value)
    }
}

/// Posterior of α (= θ₂) in the bias-allowance reference model.
pub fn reference_model_posterior<T: Real>(
    source: &StudyEstimate<T>,
    target: &StudyEstimate<T>,
    tau_prior: &HeterogeneityPrior<T>,
) -> Result<ShrinkagePosterior<T>> {
    let lik = SourceLikelihood::new(source, beta_prior_from_tau_prior(tau_prior));
    let (y2, v2) = (target.y(), target.se() * target.se());
    ShrinkagePosterior::tabulate(
        |alpha| Ok(normal_pdf(y2, alpha, v2) * lik.eval(alpha)?),
        initial_range(source, target, tau_prior),
        GridSettings::default(),
        MapPrior::new(source, *tau_prior),
        target.clone(),
    )
}
