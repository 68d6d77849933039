//! Unit-information standard deviations and prior effective sample sizes
//! by the expected local-information ratio.
//!
//! For a prior `p` on an effect measured in units whose per-patient Fisher
//! information is `1/σ_u²`, the effective sample size is
//! `σ_u² · E_p[−(ln p)″(θ)]`.

use crate::distribution::Univariate;
use crate::error::{Error, Result};
use crate::map_core::MapPrior;
use crate::quadrature::integrate_peaked;
use crate::real::Real;

/// Unit-information standard deviation √n · se.
pub fn uisd<T: Real>(n: u64, se: T) -> Result<T> {
    if n == 0 {
        return Err(Error::invalid("patient count must be >= 1"));
    }
    if !(se > T::zero() && se.is_finite()) {
        return Err(Error::invalid(format!("standard error must be positive, got {se}")));
    }
    Ok(T::lit(n as f64).sqrt() * se)
}

/// Where to evaluate the expectation: the integration range and the width
/// that sets the finite-difference step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportHint<T> {
    pub center: T,
    pub lower: T,
    pub upper: T,
    /// Width of the central 95% interval.
    pub width95: T,
}

impl<T: Real> SupportHint<T> {
    /// Central `1 − 1e-6` mass, median as centre, from the quantile function.
    pub fn from_quantiles<D: Univariate<T> + ?Sized>(dist: &D) -> Result<Self> {
        let tail = T::lit(5e-7);
        Ok(Self {
            center: dist.quantile(T::lit(0.5))?,
            lower: dist.quantile(tail)?,
            upper: dist.quantile(T::one() - tail)?,
            width95: dist.quantile(T::lit(0.975))? - dist.quantile(T::lit(0.025))?,
        })
    }
}

/// Effective sample size and its ingredients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InformationSummary<T> {
    pub uisd: T,
    pub ess: T,
    /// Prior standard deviation; `None` when infinite.
    pub prior_sd: Option<T>,
}

/// Second derivative of `ln p` at `x`: central differences with one
/// Richardson step (step sizes `h` and `2h`).
pub fn second_log_derivative<T: Real, D: Univariate<T> + ?Sized>(
    dist: &D,
    x: T,
    h: T,
) -> Result<T> {
    let two = T::lit(2.0);
    let v = dist.ln_pdf_stencil(x, &[-two * h, -h, T::zero(), h, two * h])?;
    let d_h = (v[3] - two * v[2] + v[1]) / (h * h);
    let d_2h = (v[4] - two * v[2] + v[0]) / (T::lit(4.0) * h * h);
    Ok((T::lit(4.0) * d_h - d_2h) / T::lit(3.0))
}

/// `σ_u² · E_p[−(ln p)″]`.
pub fn ess_elir<T: Real, D: Univariate<T> + ?Sized>(
    dist: &D,
    support: SupportHint<T>,
    uisd: T,
) -> Result<T> {
    if !(uisd > T::zero() && uisd.is_finite()) {
        return Err(Error::invalid(format!("uisd must be positive, got {uisd}")));
    }
    if !(support.lower < support.upper && support.width95 > T::zero()) {
        return Err(Error::invalid("degenerate support hint"));
    }
    let h = T::lit(1e-3) * support.width95 / T::lit(4.0);
    let mut failure = None;
    let mut negative_mass = T::zero();
    let mut total_mass = T::zero();
    let info = integrate_peaked(
        support.center,
        support.width95 / T::lit(4.0),
        support.lower,
        support.upper,
        |x| {
            if failure.is_some() {
                return T::zero();
            }
            let lp = match dist.ln_pdf(x) {
                Ok(v) => v,
                Err(e) => {
                    failure = Some(e);
                    return T::zero();
                }
            };
            let d2 = match second_log_derivative(dist, x, h) {
                Ok(v) => v,
                Err(e) => {
                    failure = Some(e);
                    return T::zero();
                }
            };
            let p = lp.exp();
            total_mass = total_mass + p;
            if d2 > T::zero() {
                negative_mass = negative_mass + p;
            }
            -d2 * p
        },
    );
    if let Some(e) = failure {
        return Err(e);
    }
    if !(info > T::zero()) || !info.is_finite() {
        return Err(Error::NumericalInstability(format!(
            "expected local information is {info}; density mass with negative local \
             information (unweighted node share): {}",
            negative_mass / total_mass
        )));
    }
    Ok(uisd * uisd * info)
}

/// ESS of a MAP prior, deriving the support hint from its quantiles.
pub fn map_ess<T: Real>(prior: &MapPrior<T>, uisd: T) -> Result<T> {
    let hint = SupportHint::from_quantiles(prior)?;
    ess_elir(prior, hint, uisd)
}

/// ESS together with the prior's standard deviation.
pub fn information_summary<T: Real>(prior: &MapPrior<T>, uisd: T) -> Result<InformationSummary<T>> {
    Ok(InformationSummary {
        uisd,
        ess: map_ess(prior, uisd)?,
        prior_sd: prior.sd().finite(),
    })
}

/// ESS for each prior, in input order.
pub fn ess_table<T: Real>(priors: &[MapPrior<T>], uisd: T) -> Result<Vec<T>> {
    priors.iter().map(|p| map_ess(p, uisd)).collect()
}
