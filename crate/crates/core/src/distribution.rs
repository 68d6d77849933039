//! Minimal interface for one-dimensional continuous distributions.

use crate::error::{Error, Result};
use crate::real::Real;
use crate::special::{std_normal_cdf, std_normal_ln_pdf, std_normal_quantile};

/// A continuous distribution on the real line with an evaluable log-density.
pub trait Univariate<T: Real> {
    fn ln_pdf(&self, x: T) -> Result<T>;

    fn quantile(&self, p: T) -> Result<T>;

    /// `ln p(x + h)` for each offset `h`.
    ///
    /// Implementations backed by iterative quadrature override this so that
    /// all stencil points share one discretization.
    fn ln_pdf_stencil(&self, x: T, offsets: &[T]) -> Result<Vec<T>> {
        offsets.iter().map(|&h| self.ln_pdf(x + h)).collect()
    }
}

/// Normal distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normal<T> {
    mean: T,
    sd: T,
}

impl<T: Real> Normal<T> {
    pub fn new(mean: T, sd: T) -> Result<Self> {
        if !(sd > T::zero() && sd.is_finite() && mean.is_finite()) {
            return Err(Error::invalid(format!("normal sd must be positive, got {sd}")));
        }
        Ok(Self { mean, sd })
    }

    pub fn mean(&self) -> T {
        self.mean
    }

    pub fn sd(&self) -> T {
        self.sd
    }

    pub fn pdf(&self, x: T) -> T {
        self.ln_pdf_value(x).exp()
    }

    fn ln_pdf_value(&self, x: T) -> T {
        std_normal_ln_pdf((x - self.mean) / self.sd) - self.sd.ln()
    }

    pub fn cdf(&self, x: T) -> T {
        std_normal_cdf((x - self.mean) / self.sd)
    }
}

impl<T: Real> Univariate<T> for Normal<T> {
    fn ln_pdf(&self, x: T) -> Result<T> {
        Ok(self.ln_pdf_value(x))
    }

    fn quantile(&self, p: T) -> Result<T> {
        if !(p > T::zero() && p < T::one()) {
            return Err(Error::invalid(format!("probability must lie in (0, 1), got {p}")));
        }
        Ok(self.mean + self.sd * std_normal_quantile(p))
    }
}
