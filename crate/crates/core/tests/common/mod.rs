//! Independent numerical oracles shared by the integration tests.
//!
//! Nothing here calls into the library's quadrature or special functions:
//! integrals use adaptive Simpson, samplers use elementary transforms.

#![allow(dead_code)]

use std::f64::consts::{PI, SQRT_2};

use mapprior::{Family, HeterogeneityPrior};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    floor: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol.max(floor) {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, floor, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, floor, depth - 1)
}

/// Adaptive Simpson on `[a, b]` to relative tolerance `rtol`, after a
/// 64-panel pass that sets the scale of the answer.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rtol: f64) -> f64 {
    let pieces = 64;
    let h = (b - a) / pieces as f64;
    let panels: Vec<_> = (0..pieces)
        .map(|k| {
            let lo = a + h * k as f64;
            let hi = lo + h;
            let (fa, fb, fm) = (f(lo), f(hi), f(0.5 * (lo + hi)));
            (lo, hi, fa, fm, fb, (hi - lo) / 6.0 * (fa + 4.0 * fm + fb))
        })
        .collect();
    let scale = panels
        .iter()
        .map(|p| p.5.abs())
        .sum::<f64>()
        .max(f64::MIN_POSITIVE);
    let tol = rtol * scale / pieces as f64;
    let floor = 1e-16 * scale;
    panels
        .into_iter()
        .map(|(lo, hi, fa, fm, fb, whole)| {
            simpson_step(&f, lo, hi, fa, fm, fb, whole, tol, floor, 30)
        })
        .sum()
}

/// `∫₀^∞ g(τ) dτ` through `τ = eᵗ` over `t ∈ [ln lo, ln hi]`.
pub fn integrate_log_tau<F: Fn(f64) -> f64>(g: F, lo: f64, hi: f64, tol: f64) -> f64 {
    simpson(|t| {
        let tau = t.exp();
        g(tau) * tau
    }, lo.ln(), hi.ln(), tol)
}

pub fn normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    (-(x - mean).powi(2) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
}

/// Integration window in τ for a prior: wide enough for any family used
/// in the tests.
pub fn tau_window(prior: &HeterogeneityPrior) -> (f64, f64) {
    let hi = prior.support_upper().unwrap_or(prior.scale() * 1e9);
    (prior.scale() * 1e-12, hi)
}

/// Moments `E[τ^k · f(s₁² + 2τ²)]` of the τ mixture, by log-τ Simpson.
pub fn mix_oracle<F: Fn(f64) -> f64>(prior: &HeterogeneityPrior, s1: f64, f: F) -> f64 {
    let (lo, hi) = tau_window(prior);
    integrate_log_tau(
        |tau| prior.density(tau) * f(s1 * s1 + 2.0 * tau * tau),
        lo,
        hi,
        1e-13,
    )
}

/// MAP density by direct mixture quadrature.
pub fn map_density_oracle(prior: &HeterogeneityPrior, y1: f64, s1: f64, x: f64) -> f64 {
    mix_oracle(prior, s1, |v| normal_pdf(x, y1, v))
}

/// Exact `(ln p)''` of the MAP prior by differentiating under the integral.
pub fn map_log_second_derivative_oracle(
    prior: &HeterogeneityPrior,
    y1: f64,
    s1: f64,
    x: f64,
) -> f64 {
    let d = x - y1;
    let p = mix_oracle(prior, s1, |v| normal_pdf(d, 0.0, v));
    let p1 = mix_oracle(prior, s1, |v| -d / v * normal_pdf(d, 0.0, v));
    let p2 = mix_oracle(prior, s1, |v| (d * d / (v * v) - 1.0 / v) * normal_pdf(d, 0.0, v));
    p2 / p - (p1 / p).powi(2)
}

fn std_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

/// Draws τ by elementary transforms specific to each family.
pub fn sample_tau(prior: &HeterogeneityPrior, rng: &mut ChaCha8Rng) -> f64 {
    let s = prior.scale();
    let u: f64 = rng.gen_range(f64::EPSILON..1.0);
    match prior.family() {
        Family::HalfNormal => s * std_normal(rng).abs(),
        Family::HalfCauchy => s * (0.5 * PI * u).tan(),
        Family::HalfStudentT => {
            let nu = prior.shape().unwrap();
            let k = nu.round() as usize;
            assert_eq!(k as f64, nu, "sampler handles integer dof only");
            let chi2: f64 = (0..k).map(|_| std_normal(rng).powi(2)).sum();
            s * std_normal(rng).abs() / (chi2 / nu).sqrt()
        }
        Family::HalfLogistic => s * ((1.0 + u) / (1.0 - u)).ln(),
        Family::Exponential => -s * u.ln(),
        Family::Lomax => s * (u.powf(-1.0 / prior.shape().unwrap()) - 1.0),
        Family::Uniform => s * u,
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One prior of every family, with a shared scale.
pub fn every_family(scale: f64) -> Vec<HeterogeneityPrior> {
    vec![
        HeterogeneityPrior::half_normal(scale).unwrap(),
        HeterogeneityPrior::half_student_t(scale, 4.0).unwrap(),
        HeterogeneityPrior::half_cauchy(scale).unwrap(),
        HeterogeneityPrior::half_logistic(scale).unwrap(),
        HeterogeneityPrior::exponential(scale).unwrap(),
        HeterogeneityPrior::lomax(scale, 6.0).unwrap(),
        HeterogeneityPrior::lomax(scale, 1.0).unwrap(),
        HeterogeneityPrior::uniform(scale).unwrap(),
    ]
}

/// A random prior whose median lies in `[0.05, 1]`.
pub fn random_prior(rng: &mut ChaCha8Rng) -> HeterogeneityPrior {
    let median = rng.gen_range(0.05..1.0);
    let (family, shape) = match rng.gen_range(0..7) {
        0 => (Family::HalfNormal, None),
        1 => (Family::HalfStudentT, Some(rng.gen_range(1.5..10.0))),
        2 => (Family::HalfCauchy, None),
        3 => (Family::HalfLogistic, None),
        4 => (Family::Exponential, None),
        5 => (Family::Lomax, Some(rng.gen_range(0.8..8.0))),
        _ => (Family::Uniform, None),
    };
    HeterogeneityPrior::with_median(family, median, shape).unwrap()
}

pub const SQRT2: f64 = SQRT_2;
