//! Gauss–Legendre quadrature on finite intervals and on the half line.
//!
//! The half-line integrator maps `τ ∈ [0, ∞)` onto `u = τ / (τ + c) ∈ [0, 1)`
//! and applies a composite Gauss–Legendre rule whose panel count doubles until
//! successive estimates agree. Node sets for each refinement level can be
//! cached by callers that integrate many functions against the same measure.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::real::Real;

/// Points per Gauss–Legendre panel.
pub const RULE_POINTS: usize = 20;
/// Panels at refinement level 0.
pub const BASE_PANELS: usize = 10;
/// Number of refinement levels (level `k` has `BASE_PANELS · 2^k` panels).
pub const MAX_LEVELS: usize = 10;

/// Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![T::zero(); n];
        let mut weights = vec![T::zero(); n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                // Legendre recurrence
                let (mut p0, mut p1) = (1.0_f64, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                let pn = if n == 1 { x } else { p1 };
                let pm = if n == 1 { 1.0 } else { p0 };
                dp = nf * (x * pn - pm) / (x * x - 1.0);
                let dx = pn / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = T::lit(-x);
            nodes[n - 1 - i] = T::lit(x);
            weights[i] = T::lit(w);
            weights[n - 1 - i] = T::lit(w);
        }
        if n % 2 == 1 {
            nodes[n / 2] = T::zero();
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Appends the mapped nodes and weights for `[a, b]`.
    pub fn push_mapped(&self, a: T, b: T, out: &mut Vec<Node<T>>) {
        let half = (b - a) * T::lit(0.5);
        let mid = (a + b) * T::lit(0.5);
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            out.push(Node {
                x: mid + half * x,
                w: half * w,
            });
        }
    }

    /// ∫_a^b f.
    pub fn integrate<F: FnMut(T) -> T>(&self, a: T, b: T, mut f: F) -> T {
        let half = (b - a) * T::lit(0.5);
        let mid = (a + b) * T::lit(0.5);
        let mut acc = T::zero();
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc = acc + w * f(mid + half * x);
        }
        acc * half
    }

    /// Composite rule over `panels` equal panels of `[a, b]`.
    pub fn composite<F: FnMut(T) -> T>(&self, a: T, b: T, panels: usize, mut f: F) -> T {
        let h = (b - a) / T::count(panels);
        let mut acc = T::zero();
        for k in 0..panels {
            let lo = a + h * T::count(k);
            acc = acc + self.integrate(lo, lo + h, &mut f);
        }
        acc
    }
}

/// Shared default rule.
pub fn default_rule<T: Real>() -> &'static GaussLegendre<T> {
    // One rule per scalar type; f32 and f64 are the only implementors.
    use std::any::{Any, TypeId};
    static F64: OnceLock<GaussLegendre<f64>> = OnceLock::new();
    static F32: OnceLock<GaussLegendre<f32>> = OnceLock::new();
    let any: &dyn Any = if TypeId::of::<T>() == TypeId::of::<f64>() {
        F64.get_or_init(|| GaussLegendre::new(RULE_POINTS))
    } else if TypeId::of::<T>() == TypeId::of::<f32>() {
        F32.get_or_init(|| GaussLegendre::new(RULE_POINTS))
    } else {
        unreachable!("Real is only implemented for f32 and f64")
    };
    any.downcast_ref::<GaussLegendre<T>>()
        .expect("rule type matches scalar type")
}

/// A quadrature node: abscissa and weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node<T> {
    pub x: T,
    pub w: T,
}

/// Map of `[0, u_max)` onto `[0, ∞)` (or `[0, upper]`) via `τ = c·u/(1 − u)`.
#[derive(Debug, Clone, Copy)]
pub struct HalfLineMap<T> {
    scale: T,
    u_max: T,
}

impl<T: Real> HalfLineMap<T> {
    /// `scale` is the substitution constant `c`; `upper`, when given, is a
    /// finite end of the support.
    pub fn new(scale: T, upper: Option<T>) -> Self {
        let u_max = match upper {
            Some(b) => b / (b + scale),
            None => T::one(),
        };
        Self { scale, u_max }
    }

    pub fn scale(&self) -> T {
        self.scale
    }

    /// Nodes in `τ` (weights include the Jacobian) at refinement `level`.
    pub fn nodes(&self, level: usize) -> Vec<Node<T>> {
        let rule = default_rule::<T>();
        let panels = BASE_PANELS << level;
        let mut unit = Vec::with_capacity(panels * rule.len());
        let h = self.u_max / T::count(panels);
        for k in 0..panels {
            let lo = h * T::count(k);
            rule.push_mapped(lo, lo + h, &mut unit);
        }
        unit.into_iter()
            .map(|Node { x: u, w }| {
                let one_minus = T::one() - u;
                Node {
                    x: self.scale * u / one_minus,
                    w: w * self.scale / (one_minus * one_minus),
                }
            })
            .collect()
    }
}

/// Lazily built node sets, one per refinement level.
#[derive(Debug, Default)]
pub struct LevelCache<T> {
    levels: [OnceLock<Vec<Node<T>>>; MAX_LEVELS],
}

impl<T> LevelCache<T> {
    pub fn new() -> Self {
        Self {
            levels: std::array::from_fn(|_| OnceLock::new()),
        }
    }

    pub fn get_or_init<F: FnOnce() -> Vec<Node<T>>>(&self, level: usize, build: F) -> &[Node<T>] {
        self.levels[level].get_or_init(build)
    }
}

impl<T> Clone for LevelCache<T> {
    fn clone(&self) -> Self {
        Self {
            levels: std::array::from_fn(|_| OnceLock::new()),
        }
    }
}

/// Outcome of an iterated quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    /// |difference| between the last two refinement levels.
    pub error: T,
    /// Level whose estimate was accepted.
    pub level: usize,
}

/// Runs `eval(level)` for level = `start`, `start + 1`, … until two successive
/// estimates differ by at most `rtol` relative (or `atol` absolute).
pub fn until_converged<T: Real, F: FnMut(usize) -> T>(
    start: usize,
    rtol: T,
    atol: T,
    mut eval: F,
) -> Result<Estimate<T>> {
    let mut prev = eval(start);
    let mut last_err = T::infinity();
    for level in start + 1..MAX_LEVELS {
        let cur = eval(level);
        let err = (cur - prev).abs();
        if !cur.is_finite() {
            return Err(Error::QuadratureFailure {
                achieved: f64::NAN,
                requested: rtol.as_f64(),
            });
        }
        let subnormal = cur.abs() < T::min_positive_value() && prev.abs() < T::min_positive_value();
        if err <= rtol * cur.abs() || err <= atol || subnormal {
            return Ok(Estimate {
                value: cur,
                error: err,
                level,
            });
        }
        prev = cur;
        last_err = err / cur.abs().max(T::min_positive_value());
    }
    Err(Error::QuadratureFailure {
        achieved: last_err.as_f64(),
        requested: rtol.as_f64(),
    })
}

/// ∫_a^b f by composite Gauss–Legendre with panel doubling.
pub fn integrate<T: Real, F: FnMut(T) -> T>(a: T, b: T, rtol: T, mut f: F) -> Result<Estimate<T>> {
    let rule = default_rule::<T>();
    until_converged(0, rtol, T::zero(), |level| {
        rule.composite(a, b, BASE_PANELS << level, &mut f)
    })
}

/// ∫_0^∞ f via the `u = τ/(τ + c)` substitution with panel doubling.
pub fn integrate_half_line<T: Real, F: FnMut(T) -> T>(
    scale: T,
    upper: Option<T>,
    rtol: T,
    mut f: F,
) -> Result<Estimate<T>> {
    let map = HalfLineMap::new(scale, upper);
    until_converged(0, rtol, T::zero(), |level| {
        map.nodes(level)
            .iter()
            .fold(T::zero(), |acc, n| acc + n.w * f(n.x))
    })
}

/// Integral over a peaked function on `[lo, hi]` with panels growing
/// geometrically away from `center` (inner panel width `width`).
///
/// Suited to unimodal integrands whose tails extend far beyond their core.
pub fn integrate_peaked<T: Real, F: FnMut(T) -> T>(
    center: T,
    width: T,
    lo: T,
    hi: T,
    mut f: F,
) -> T {
    let rule = default_rule::<T>();
    let mut acc = T::zero();
    for dir in [T::one(), -T::one()] {
        let limit = if dir > T::zero() { hi - center } else { center - lo };
        if limit <= T::zero() {
            continue;
        }
        let mut inner = T::zero();
        let mut step = width * T::lit(0.25);
        while inner < limit {
            let outer = (inner + step).min(limit);
            let (a, b) = if dir > T::zero() {
                (center + inner, center + outer)
            } else {
                (center - outer, center - inner)
            };
            acc = acc + rule.composite(a, b, 2, &mut f);
            inner = outer;
            step = step * T::lit(2.0);
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rule_is_exact_for_polynomials() {
        let rule = GaussLegendre::<f64>::new(5);
        // degree 9 is integrated exactly by a 5-point rule
        let v = rule.integrate(0.0, 2.0, |x| x.powi(9));
        assert_relative_eq!(v, 2.0_f64.powi(10) / 10.0, max_relative = 1e-13);
        let w: f64 = GaussLegendre::<f64>::new(RULE_POINTS).weights.iter().sum();
        assert_relative_eq!(w, 2.0, max_relative = 1e-14);
    }

    #[test]
    fn odd_rule_has_centre_node() {
        let rule = GaussLegendre::<f64>::new(3);
        assert_eq!(rule.nodes[1], 0.0);
        assert_relative_eq!(rule.weights[1], 8.0 / 9.0, max_relative = 1e-14);
    }

    #[test]
    fn half_line_heavy_tail() {
        // ∫_0^∞ 2/(π(1+x²)) dx = 1
        let est = integrate_half_line(1.0_f64, None, 1e-10, |x| {
            2.0 / (std::f64::consts::PI * (1.0 + x * x))
        })
        .unwrap();
        assert_relative_eq!(est.value, 1.0, max_relative = 1e-9);
    }

    #[test]
    fn half_line_with_finite_support() {
        let est = integrate_half_line(0.5_f64, Some(1.0), 1e-12, |x| x).unwrap();
        assert_relative_eq!(est.value, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn non_convergence_is_reported() {
        // discontinuity inside a panel defeats the doubling criterion
        let r = integrate(0.0_f64, 1.0, 1e-15, |x| if x < 1.0 / 3.0 { 1.0 } else { 0.0 });
        assert!(matches!(r, Err(Error::QuadratureFailure { .. })));
    }

    #[test]
    fn peaked_gaussian() {
        let v = integrate_peaked(0.0_f64, 1.0, -40.0, 40.0, |x| {
            (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
        });
        assert_relative_eq!(v, 1.0, max_relative = 1e-13);
    }
}
