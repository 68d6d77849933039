mod common;

use common::map_log_second_derivative_oracle;
use mapprior::information::second_log_derivative;
use mapprior::{ess_elir, map_ess, uisd, HeterogeneityPrior, MapPrior, Normal, SupportHint};

const Y1: f64 = -0.635;
const S1: f64 = 0.451;

#[test]
fn unit_information_sd() {
    assert!((uisd(70, 0.451_f64).unwrap() - 3.7733).abs() < 1e-4);
    assert!((uisd(3445, 0.077_f64).unwrap() - 4.5).abs() < 0.05);
    assert!(uisd(10, 0.0).is_err());
    assert!(uisd(0, 1.0).is_err());
}

#[test]
fn finite_difference_matches_analytic_second_derivative() {
    for prior in [
        HeterogeneityPrior::half_normal(0.5).unwrap(),
        HeterogeneityPrior::half_cauchy(0.337).unwrap(),
        HeterogeneityPrior::lomax(2.75, 6.0).unwrap(),
    ] {
        let map = MapPrior::from_parts(Y1, S1 * S1, prior);
        let hint = SupportHint::from_quantiles(&map).unwrap();
        let h = 1e-3 * hint.width95 / 4.0;
        for i in 0..20 {
            let x = Y1 - 4.0 + 0.43 * i as f64;
            let got = second_log_derivative(&map, x, h).unwrap();
            let want = map_log_second_derivative_oracle(&prior, Y1, S1, x);
            let rel = (got - want).abs() / want.abs();
            assert!(rel < 1e-4, "{prior} at {x}: {got} vs {want}");
        }
    }
}

#[test]
fn normal_priors_give_precision_ratio() {
    let u = 3.0;
    for k in 0..=20 {
        let sd = 0.05 * 100f64.powf(k as f64 / 20.0);
        let dist = Normal::new(0.3, sd).unwrap();
        let hint = SupportHint::from_quantiles(&dist).unwrap();
        let ess = ess_elir(&dist, hint, u).unwrap();
        let exact = (u / sd).powi(2);
        assert!((ess - exact).abs() / exact < 1e-3, "sd={sd}: {ess} vs {exact}");
    }
}

#[test]
fn ess_scales_with_squared_uisd() {
    let map = MapPrior::from_parts(Y1, S1 * S1, HeterogeneityPrior::exponential(0.4865).unwrap());
    let base = map_ess(&map, 1.0).unwrap();
    for c in [0.5, 2.0, 3.7733, 10.0] {
        let scaled = map_ess(&map, c).unwrap();
        assert!((scaled - c * c * base).abs() <= 1e-12 * scaled);
    }
}

#[test]
fn heavier_heterogeneity_means_fewer_patients() {
    let ess: Vec<f64> = [0.25, 0.5, 1.0]
        .iter()
        .map(|&s| {
            let map = MapPrior::from_parts(Y1, S1 * S1, HeterogeneityPrior::half_normal(s).unwrap());
            map_ess(&map, 3.7733).unwrap()
        })
        .collect();
    assert!(ess[0] > ess[1] && ess[1] > ess[2], "{ess:?}");
    let no_heterogeneity = (3.7733f64 / S1).powi(2);
    assert!(ess[0] < no_heterogeneity);
}

#[test]
fn rejects_bad_uisd() {
    let map = MapPrior::from_parts(0.0, 1.0, HeterogeneityPrior::half_normal(0.5).unwrap());
    assert!(map_ess(&map, 0.0).is_err());
    assert!(map_ess(&map, f64::NAN).is_err());
}
