//! Heterogeneity prior families for the between-study standard deviation τ.
//!
//! Every family is a scale family on `[0, ∞)` (uniform on `[0, s]`):
//!
//! | family          | density at x ≥ 0                        |
//! |-----------------|-----------------------------------------|
//! | half-normal(s)  | 2·φ(x/s)/s                              |
//! | half-t_ν(s)     | 2·t_ν(x/s)/s                            |
//! | half-Cauchy(s)  | half-t with ν = 1                       |
//! | half-logistic(s)| 2·e^(−x/s) / (s·(1 + e^(−x/s))²)        |
//! | exponential(s)  | e^(−x/s)/s                              |
//! | Lomax(α, s)     | (α/s)·(1 + x/s)^−(α+1)                  |
//! | uniform(s)      | 1/s on [0, s]                           |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;
use crate::special::{
    ln_gamma, std_normal_pdf, std_normal_quantile, std_normal_sf,
    student_t_pdf, student_t_two_sided_sf,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    HalfNormal,
    HalfStudentT,
    HalfCauchy,
    HalfLogistic,
    Exponential,
    Lomax,
    Uniform,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::HalfNormal,
        Family::HalfStudentT,
        Family::HalfCauchy,
        Family::HalfLogistic,
        Family::Exponential,
        Family::Lomax,
        Family::Uniform,
    ];

    /// Whether the family needs a shape parameter (ν or α).
    pub fn takes_shape(self) -> bool {
        matches!(self, Family::HalfStudentT | Family::Lomax)
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::HalfNormal => "half-normal",
            Family::HalfStudentT => "half-student-t",
            Family::HalfCauchy => "half-cauchy",
            Family::HalfLogistic => "half-logistic",
            Family::Exponential => "exponential",
            Family::Lomax => "lomax",
            Family::Uniform => "uniform",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['_', ' '], "-");
        Ok(match key.as_str() {
            "half-normal" | "halfnormal" | "hn" => Family::HalfNormal,
            "half-student-t" | "half-t" | "halft" | "ht" => Family::HalfStudentT,
            "half-cauchy" | "halfcauchy" | "hc" => Family::HalfCauchy,
            "half-logistic" | "halflogistic" | "hl" => Family::HalfLogistic,
            "exponential" | "exp" => Family::Exponential,
            "lomax" => Family::Lomax,
            "uniform" | "unif" => Family::Uniform,
            other => return Err(Error::invalid(format!("unknown prior family '{other}'"))),
        })
    }
}

/// A moment that may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Moment<T> {
    Finite(T),
    Infinite,
}

impl<T: Real> Moment<T> {
    pub fn finite(self) -> Option<T> {
        match self {
            Moment::Finite(v) => Some(v),
            Moment::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Moment::Infinite)
    }

    pub fn map<F: FnOnce(T) -> T>(self, f: F) -> Moment<T> {
        match self {
            Moment::Finite(v) => Moment::Finite(f(v)),
            Moment::Infinite => Moment::Infinite,
        }
    }

    /// Value as a float, with `+∞` for the infinite case.
    pub fn to_float(self) -> T {
        self.finite().unwrap_or_else(T::infinity)
    }
}

/// Prior for the heterogeneity standard deviation τ ≥ 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeterogeneityPrior<T> {
    family: Family,
    scale: T,
    shape: Option<T>,
}

impl<T: Real> HeterogeneityPrior<T> {
    /// Validating constructor. `shape` is ν for half-student-t and α for Lomax.
    pub fn new(family: Family, scale: T, shape: Option<T>) -> Result<Self> {
        if !(scale > T::zero() && scale.is_finite()) {
            return Err(Error::invalid(format!(
                "{family} scale must be positive and finite, got {scale}"
            )));
        }
        match (family.takes_shape(), shape) {
            (true, None) => {
                return Err(Error::invalid(format!("{family} requires a shape parameter")))
            }
            (false, Some(_)) => {
                return Err(Error::invalid(format!("{family} takes no shape parameter")))
            }
            (true, Some(v)) if !(v > T::zero() && v.is_finite()) => {
                return Err(Error::invalid(format!(
                    "{family} shape must be positive and finite, got {v}"
                )))
            }
            _ => {}
        }
        Ok(Self {
            family,
            scale,
            shape,
        })
    }

    pub fn half_normal(scale: T) -> Result<Self> {
        Self::new(Family::HalfNormal, scale, None)
    }

    pub fn half_cauchy(scale: T) -> Result<Self> {
        Self::new(Family::HalfCauchy, scale, None)
    }

    pub fn half_student_t(scale: T, dof: T) -> Result<Self> {
        Self::new(Family::HalfStudentT, scale, Some(dof))
    }

    pub fn half_logistic(scale: T) -> Result<Self> {
        Self::new(Family::HalfLogistic, scale, None)
    }

    pub fn exponential(scale: T) -> Result<Self> {
        Self::new(Family::Exponential, scale, None)
    }

    pub fn lomax(scale: T, alpha: T) -> Result<Self> {
        Self::new(Family::Lomax, scale, Some(alpha))
    }

    pub fn uniform(upper: T) -> Result<Self> {
        Self::new(Family::Uniform, upper, None)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn scale(&self) -> T {
        self.scale
    }

    pub fn shape(&self) -> Option<T> {
        self.shape
    }

    fn shape_value(&self) -> T {
        self.shape.expect("validated at construction")
    }

    /// Finite upper end of the support, if any.
    pub fn support_upper(&self) -> Option<T> {
        match self.family {
            Family::Uniform => Some(self.scale),
            _ => None,
        }
    }

    /// Density p(τ); zero for τ < 0.
    pub fn density(&self, tau: T) -> T {
        if tau < T::zero() || tau.is_nan() {
            return T::zero();
        }
        let s = self.scale;
        let z = tau / s;
        let two = T::lit(2.0);
        match self.family {
            Family::HalfNormal => two * std_normal_pdf(z) / s,
            Family::HalfStudentT => two * student_t_pdf(z, self.shape_value()) / s,
            Family::HalfCauchy => two / (T::PI() * s * (T::one() + z * z)),
            Family::HalfLogistic => {
                let e = (-z).exp();
                two * e / (s * (T::one() + e) * (T::one() + e))
            }
            Family::Exponential => (-z).exp() / s,
            Family::Lomax => {
                let a = self.shape_value();
                a / s * (T::one() + z).powf(-(a + T::one()))
            }
            Family::Uniform => {
                if tau <= s {
                    s.recip()
                } else {
                    T::zero()
                }
            }
        }
    }

    /// P(τ' ≤ τ).
    pub fn cdf(&self, tau: T) -> T {
        if tau <= T::zero() {
            return T::zero();
        }
        if tau.is_infinite() {
            return T::one();
        }
        let z = tau / self.scale;
        match self.family {
            Family::HalfNormal => T::one() - T::lit(2.0) * std_normal_sf(z),
            Family::HalfStudentT => T::one() - student_t_two_sided_sf(z, self.shape_value()),
            Family::HalfCauchy => T::lit(2.0) / T::PI() * z.atan(),
            Family::HalfLogistic => (z * T::lit(0.5)).tanh(),
            Family::Exponential => -(-z).exp_m1(),
            Family::Lomax => T::one() - (T::one() + z).powf(-self.shape_value()),
            Family::Uniform => z.min(T::one()),
        }
    }

    /// P(τ' > τ), evaluated without cancellation where the family allows.
    pub fn sf(&self, tau: T) -> T {
        if tau <= T::zero() {
            return T::one();
        }
        if tau.is_infinite() {
            return T::zero();
        }
        let z = tau / self.scale;
        match self.family {
            Family::HalfNormal => T::lit(2.0) * std_normal_sf(z),
            Family::HalfStudentT => student_t_two_sided_sf(z, self.shape_value()),
            Family::HalfCauchy => T::lit(2.0) / T::PI() * z.recip().atan(),
            Family::HalfLogistic => {
                let e = (-z).exp();
                T::lit(2.0) * e / (T::one() + e)
            }
            Family::Exponential => (-z).exp(),
            Family::Lomax => (T::one() + z).powf(-self.shape_value()),
            Family::Uniform => (T::one() - z).max(T::zero()),
        }
    }

    /// Quantile function for 0 < p < 1.
    pub fn quantile(&self, p: T) -> Result<T> {
        if !(p > T::zero() && p < T::one()) {
            return Err(Error::invalid(format!("probability must lie in (0, 1), got {p}")));
        }
        Ok(self.quantile_unchecked(p))
    }

    pub(crate) fn quantile_unchecked(&self, p: T) -> T {
        let s = self.scale;
        let one = T::one();
        match self.family {
            Family::HalfNormal => s * std_normal_quantile((one + p) * T::lit(0.5)),
            Family::HalfCauchy => s * (T::FRAC_PI_2() * p).tan(),
            Family::HalfLogistic => s * ((one + p) / (one - p)).ln(),
            Family::Exponential => -s * (-p).ln_1p(),
            Family::Lomax => s * ((-(one - p).ln() / self.shape_value()).exp_m1()),
            Family::Uniform => s * p,
            Family::HalfStudentT => self.bisect_quantile(p),
        }
    }

    /// Bracket grown geometrically from the scale, then bisection on the CDF.
    fn bisect_quantile(&self, p: T) -> T {
        let tol = T::prob_tol();
        let two = T::lit(2.0);
        let upper_tail = p > T::lit(0.5);
        // residual measured on the smaller tail for accuracy near 1
        let resid = |x: T| {
            if upper_tail {
                (T::one() - p) - self.sf(x)
            } else {
                self.cdf(x) - p
            }
        };
        let mut lo = T::zero();
        let mut hi = self.scale;
        while resid(hi) < T::zero() {
            lo = hi;
            hi = hi * two;
            if !hi.is_finite() {
                return T::infinity();
            }
        }
        for _ in 0..300 {
            let mid = (lo + hi) * T::lit(0.5);
            let r = resid(mid);
            if r.abs() <= tol * T::lit(1e-2) || (hi - lo) <= T::epsilon() * mid {
                return mid;
            }
            if r < T::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (lo + hi) * T::lit(0.5)
    }

    pub fn median(&self) -> T {
        self.quantile_unchecked(T::lit(0.5))
    }

    /// E[τ].
    pub fn mean(&self) -> Moment<T> {
        let s = self.scale;
        let one = T::one();
        let two = T::lit(2.0);
        match self.family {
            Family::HalfNormal => Moment::Finite((two / T::PI()).sqrt() * s),
            Family::HalfStudentT => {
                let nu = self.shape_value();
                if nu <= one {
                    return Moment::Infinite;
                }
                let ln_ratio = ln_gamma((nu + one) / two) - ln_gamma(nu / two);
                Moment::Finite(two * s * (nu / T::PI()).sqrt() * ln_ratio.exp() / (nu - one))
            }
            Family::HalfCauchy => Moment::Infinite,
            Family::HalfLogistic => Moment::Finite(T::lit(4.0).ln() * s),
            Family::Exponential => Moment::Finite(s),
            Family::Lomax => {
                let a = self.shape_value();
                if a <= one {
                    Moment::Infinite
                } else {
                    Moment::Finite(s / (a - one))
                }
            }
            Family::Uniform => Moment::Finite(s / two),
        }
    }

    /// E[τ²].
    pub fn mean_sq(&self) -> Moment<T> {
        let s2 = self.scale * self.scale;
        let one = T::one();
        let two = T::lit(2.0);
        match self.family {
            Family::HalfNormal => Moment::Finite(s2),
            Family::HalfStudentT => {
                let nu = self.shape_value();
                if nu <= two {
                    Moment::Infinite
                } else {
                    Moment::Finite(nu / (nu - two) * s2)
                }
            }
            Family::HalfCauchy => Moment::Infinite,
            Family::HalfLogistic => Moment::Finite(T::PI() * T::PI() / T::lit(3.0) * s2),
            Family::Exponential => Moment::Finite(two * s2),
            Family::Lomax => {
                let a = self.shape_value();
                if a <= two {
                    Moment::Infinite
                } else {
                    Moment::Finite(two * s2 / ((a - one) * (a - two)))
                }
            }
            Family::Uniform => Moment::Finite(s2 / T::lit(3.0)),
        }
    }

    /// Scale parameter giving `family` the requested median.
    pub fn scale_for_median(family: Family, target_median: T, shape: Option<T>) -> Result<T> {
        if !(target_median > T::zero() && target_median.is_finite()) {
            return Err(Error::invalid(format!(
                "target median must be positive, got {target_median}"
            )));
        }
        let unit = Self::new(family, T::one(), shape)?;
        Ok(target_median / unit.median())
    }

    /// Prior of the same family with the given median.
    pub fn with_median(family: Family, target_median: T, shape: Option<T>) -> Result<Self> {
        let scale = Self::scale_for_median(family, target_median, shape)?;
        Self::new(family, scale, shape)
    }
}

impl<T: Real> fmt::Display for HeterogeneityPrior<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.shape {
            Some(shape) => write!(f, "{}({}, {})", self.family, self.scale, shape),
            None => write!(f, "{}({})", self.family, self.scale),
        }
    }
}

/// Parses `family(scale)`, `family(scale, shape)` or `family(median=m[, shape])`.
impl<T: Real + FromStr> FromStr for HeterogeneityPrior<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::invalid(format!("malformed prior '{s}'"));
        let open = s.find('(').ok_or_else(bad)?;
        if !s.ends_with(')') {
            return Err(bad());
        }
        let family: Family = s[..open].parse()?;
        let args: Vec<&str> = s[open + 1..s.len() - 1].split(',').map(str::trim).collect();
        let number = |text: &str| -> Result<T> {
            text.parse::<T>()
                .map_err(|_| Error::invalid(format!("'{text}' is not a number in '{s}'")))
        };
        let (first, shape) = match args.as_slice() {
            [a] => (*a, None),
            [a, b] => (*a, Some(number(b)?)),
            _ => return Err(bad()),
        };
        match first.strip_prefix("median") {
            Some(rest) => {
                let value = rest.trim_start().strip_prefix('=').ok_or_else(bad)?;
                Self::with_median(family, number(value.trim())?, shape)
            }
            None => Self::new(family, number(first)?, shape),
        }
    }
}
