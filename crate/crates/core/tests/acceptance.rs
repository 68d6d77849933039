//! Acceptance run: one PASS/FAIL line per headline criterion.
//!
//! Run with `cargo test --test acceptance`; the process exits nonzero if any
//! line fails.

mod common;

use std::io::Cursor;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use common::{every_family, integrate_log_tau, random_prior, rng, sample_tau, simpson};
use mapprior::cli_io::{
    common_median_comparison, parse_ratio_ci, read_studies_csv, run_map_report, table2_command,
    EffectScale, StudyRow,
};
use mapprior::{
    a0_from_tau, ess_elir, mac_oracle, reference_model_posterior, shrinkage_posterior,
    tau_from_a0, uisd, HeterogeneityPrior, Moment, Normal, PowerPriorMap, StudyEstimate,
    SupportHint,
};
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(message())
    }
}

fn within(got: f64, want: f64, tol: f64, what: &str) -> Result<(), String> {
    ensure((got - want).abs() <= tol, || {
        format!("{what}: got {got:.6}, want {want} ± {tol}")
    })
}

const ALPORT_CSV: &str = "label,scale,estimate,lower,upper,se,n\n\
Gross2020,ratio,0.53,0.22,1.29,,70\n\
Boeckhaus2022,ratio,0.51,0.12,2.20,,\n";

struct Table2Row {
    scale: f64,
    ess: f64,
    sd: Option<f64>,
    quantiles: [f64; 3],
}

const TABLE2: [Table2Row; 9] = [
    Table2Row { scale: 0.50, ess: 26.6, sd: Some(0.84), quantiles: [1.32, 1.72, 2.72] },
    Table2Row { scale: 0.25, ess: 45.7, sd: Some(0.57), quantiles: [0.93, 1.13, 1.62] },
    Table2Row { scale: 1.00, ess: 12.8, sd: Some(1.48), quantiles: [2.35, 3.18, 5.19] },
    Table2Row { scale: 0.46, ess: 25.3, sd: Some(1.02), quantiles: [1.45, 1.98, 3.58] },
    Table2Row { scale: 0.34, ess: 23.4, sd: None, quantiles: [2.45, 4.85, 24.02] },
    Table2Row { scale: 0.31, ess: 25.8, sd: Some(0.91), quantiles: [1.39, 1.85, 3.09] },
    Table2Row { scale: 0.49, ess: 24.5, sd: Some(1.07), quantiles: [1.56, 2.19, 3.96] },
    Table2Row { scale: 2.75, ess: 24.0, sd: Some(1.31), quantiles: [1.70, 2.50, 5.05] },
    Table2Row { scale: 0.34, ess: 23.1, sd: None, quantiles: [3.29, 7.05, 37.17] },
];

fn prior_comparison_table() -> Outcome {
    let start = Instant::now();
    let u = uisd(70, 0.451).map_err(|e| e.to_string())?;
    let rows = table2_command(0.451, &common_median_comparison(), u).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    ensure(rows.len() == TABLE2.len(), || format!("{} rows", rows.len()))?;
    let mut worst_q: f64 = 0.0;
    for (i, (got, want)) in rows.iter().zip(TABLE2.iter()).enumerate() {
        let name = format!("row {} ({})", i + 1, got.family.name());
        within(got.scale, want.scale, 0.005, &format!("{name} scale"))?;
        let ess_tol = (0.02 * want.ess).max(0.5);
        within(got.ess, want.ess, ess_tol, &format!("{name} ESS"))?;
        match (got.sd, want.sd) {
            (Some(g), Some(w)) => within(g, w, 0.01, &format!("{name} sd"))?,
            (None, None) => {}
            (g, w) => return Err(format!("{name} sd: got {g:?}, want {w:?}")),
        }
        for (g, w) in got.quantiles.iter().zip(want.quantiles) {
            let rel = (g - w).abs() / w;
            worst_q = worst_q.max(rel);
            ensure(rel <= 0.01, || format!("{name} quantile {g:.4} vs {w}"))?;
        }
    }
    ensure(elapsed < 60.0, || format!("runtime {elapsed:.1} s"))?;
    Ok(format!("9 rows, worst quantile error {:.2}%, {elapsed:.1} s", 100.0 * worst_q))
}

fn alport_end_to_end() -> Outcome {
    let rows = read_studies_csv(Cursor::new(ALPORT_CSV), 0.95).map_err(|e| e.to_string())?;
    let rep = run_map_report(&rows[0], "half-normal(0.5)", Some(&rows[1]), None, &[0.95])
        .map_err(|e| e.to_string())?;
    let m = &rep.map_prior;
    let sd = m.sd.value.ok_or("MAP sd missing")?;
    within(sd, 0.84, 0.01, "MAP sd")?;
    within(m.ess, 26.6, 0.02 * 26.6, "ESS")?;
    let s = rep.shrinkage.as_ref().ok_or("shrinkage missing")?;
    let median = s.median.ratio.ok_or("median ratio missing")?;
    let lower = s.intervals[0].lower.ratio.ok_or("lower ratio missing")?;
    let upper = s.intervals[0].upper.ratio.ok_or("upper ratio missing")?;
    within(median, 0.52, 0.01, "HR")?;
    within(lower, 0.19, 0.01, "HR lower")?;
    within(upper, 1.39, 0.01, "HR upper")?;
    within(s.intervals[0].width_ratio, 0.67, 0.01, "width ratio")?;
    Ok(format!(
        "sd {sd:.3}, ESS {:.2}, HR {median:.3} [{lower:.3}, {upper:.3}], width ratio {:.3}",
        m.ess, s.intervals[0].width_ratio
    ))
}

fn heart_failure_end_to_end() -> Outcome {
    let (y, se) = parse_ratio_ci(0.89, 0.77, 1.04, 0.95).map_err(|e| e.to_string())?;
    within(y, -0.117, 0.0005, "log-HR")?;
    within(se, 0.077, 0.0005, "se")?;
    let u = uisd(3445, 0.077).map_err(|e| e.to_string())?;
    within(u, 4.5, 0.05, "uisd")?;
    let row = StudyRow {
        study: StudyEstimate::new("TOPCAT", -0.117, 0.077, Some(3445)).map_err(|e| e.to_string())?,
        scale: EffectScale::LogRatio,
    };
    let rep = run_map_report(&row, "half-normal(0.25)", None, Some(4.5), &[0.95])
        .map_err(|e| e.to_string())?;
    let m = &rep.map_prior;
    let sd = m.sd.value.ok_or("MAP sd missing")?;
    within(sd, 0.362, 0.002, "MAP sd")?;
    within(m.intervals[0].lower.value, -0.899, 0.003, "PI lower")?;
    within(m.intervals[0].upper.value, 0.665, 0.003, "PI upper")?;
    within(m.prob_below_zero, 0.71, 0.005, "P(log-HR < 0)")?;
    within(m.ess, 399.0, 2.0, "ESS")?;
    Ok(format!(
        "({y:.4}, {se:.4}), uisd {u:.3}, sd {sd:.4}, PI [{:.4}, {:.4}], P {:.4}, ESS {:.1}",
        m.intervals[0].lower.value, m.intervals[0].upper.value, m.prob_below_zero, m.ess
    ))
}

fn random_study(r: &mut impl Rng, label: &str) -> StudyEstimate {
    StudyEstimate::new(label, r.gen_range(-2.0..2.0), r.gen_range(0.05..1.5), None).unwrap()
}

fn mac_map_suite() -> Outcome {
    let mut r = rng(2024);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let prior = random_prior(&mut r);
        let (a, b) = (random_study(&mut r, "a"), random_study(&mut r, "b"));
        let map = shrinkage_posterior(&a, &b, &prior).map_err(|e| format!("#{i}: {e}"))?;
        let mac = mac_oracle(&a, &b, &prior).map_err(|e| format!("#{i}: {e}"))?;
        let sup = map.sup_distance(&mac);
        worst = worst.max(sup);
        ensure(sup < 1e-4, || format!("instance {i} ({prior}): sup {sup:.3e}"))?;
    }
    Ok(format!("100 instances, worst sup {worst:.2e}"))
}

fn bias_allowance_suite() -> Outcome {
    let mut r = rng(77);
    let mut worst: f64 = 0.0;
    for i in 0..25 {
        let prior = random_prior(&mut r);
        let (a, b) = (random_study(&mut r, "a"), random_study(&mut r, "b"));
        let reference = reference_model_posterior(&a, &b, &prior).map_err(|e| format!("#{i}: {e}"))?;
        let shrunk = shrinkage_posterior(&a, &b, &prior).map_err(|e| format!("#{i}: {e}"))?;
        let sup = reference.sup_distance(&shrunk);
        worst = worst.max(sup);
        ensure(sup < 1e-3, || format!("instance {i} ({prior}): sup {sup:.3e}"))?;
    }
    Ok(format!("25 instances, worst sup {worst:.2e}"))
}

const S1: f64 = 0.451;

/// `∫ p(a) da` over `[a_lo, a_hi] ⊂ [0, ½]` or `[½, 1]`, using `a = w²` or
/// `a = 1 − w²` to remove the endpoint singularities.
fn a0_mass_between(map: &PowerPriorMap, a_lo: f64, a_hi: f64) -> f64 {
    if a_hi <= 0.5 {
        simpson(|w| 2.0 * w * map.density(w * w), a_lo.sqrt(), a_hi.sqrt(), 1e-11)
    } else {
        simpson(
            |w| 2.0 * w * map.density(1.0 - w * w),
            (1.0 - a_hi).sqrt(),
            (1.0 - a_lo).sqrt(),
            1e-11,
        )
    }
}

fn power_prior_suite() -> Outcome {
    let mut worst_mass: f64 = 0.0;
    for scale in [0.1, 0.34, 1.0] {
        for prior in every_family(scale) {
            let map = PowerPriorMap::new(S1, prior).map_err(|e| e.to_string())?;
            let mass = a0_mass_between(&map, 0.0, 0.5) + a0_mass_between(&map, 0.5, 1.0);
            worst_mass = worst_mass.max((mass - 1.0).abs());
            ensure((mass - 1.0).abs() < 1e-5, || format!("{prior}: mass {mass}"))?;
        }
    }

    let mut r = rng(11);
    let mut worst_ks: f64 = 0.0;
    for prior in every_family(0.34) {
        let map = PowerPriorMap::new(S1, prior).map_err(|e| e.to_string())?;
        let mut draws: Vec<f64> = (0..1_000_000)
            .map(|_| a0_from_tau(sample_tau(&prior, &mut r), S1).unwrap())
            .collect();
        draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = draws.len() as f64;
        let mut cdf = 0.0;
        let mut ks: f64 = 0.0;
        for k in 1..1000 {
            let (lo, hi) = ((k - 1) as f64 / 1000.0, k as f64 / 1000.0);
            cdf += a0_mass_between(&map, lo, hi);
            let empirical = draws.partition_point(|&x| x <= hi) as f64 / n;
            ks = ks.max((cdf - empirical).abs());
        }
        worst_ks = worst_ks.max(ks);
        ensure(ks < 0.002, || format!("{prior}: KS {ks:.5}"))?;
    }

    let mut worst_trip: f64 = 0.0;
    for s1 in [0.077, 0.451, 2.0] {
        for i in 0..=400 {
            let tau = if i == 0 { 0.0 } else { 10f64.powf(-4.0 + 8.0 * i as f64 / 400.0) };
            let a = a0_from_tau(tau, s1).map_err(|e| e.to_string())?;
            let back = a0_from_tau(tau_from_a0(a, s1).map_err(|e| e.to_string())?, s1).unwrap();
            worst_trip = worst_trip.max((back - a).abs());
            let a = i.max(1) as f64 / 400.0;
            let back = a0_from_tau(tau_from_a0(a, s1).map_err(|e| e.to_string())?, s1).unwrap();
            worst_trip = worst_trip.max((back - a).abs());
        }
    }
    ensure(worst_trip <= 1e-12, || format!("round trip error {worst_trip:.2e}"))?;
    Ok(format!(
        "mass error {worst_mass:.1e}, KS {worst_ks:.5}, round trip {worst_trip:.1e}"
    ))
}

fn truncated_moment(prior: &HeterogeneityPrior, k: i32, upper: f64) -> f64 {
    integrate_log_tau(|t| prior.density(t) * t.powi(k), prior.scale() * 1e-12, upper, 1e-12)
}

fn moment_oracle() -> Outcome {
    let mut priors = Vec::new();
    for scale in [0.3, 1.0] {
        priors.extend(every_family(scale));
        priors.push(HeterogeneityPrior::half_student_t(scale, 2.0).unwrap());
        priors.push(HeterogeneityPrior::half_student_t(scale, 2.5).unwrap());
        priors.push(HeterogeneityPrior::half_student_t(scale, 7.0).unwrap());
        priors.push(HeterogeneityPrior::lomax(scale, 2.0).unwrap());
        priors.push(HeterogeneityPrior::lomax(scale, 2.5).unwrap());
    }
    let (mut finite, mut infinite) = (0, 0);
    let mut worst: f64 = 0.0;
    for prior in &priors {
        for (k, moment) in [(1, prior.mean()), (2, prior.mean_sq())] {
            match moment {
                Moment::Finite(exact) => {
                    let upper = prior.support_upper().unwrap_or(1e20);
                    let numeric = truncated_moment(prior, k, upper);
                    let rel = (numeric - exact).abs() / exact;
                    worst = worst.max(rel);
                    ensure(rel < 1e-6, || format!("{prior} E[τ^{k}]: {exact} vs {numeric}"))?;
                    finite += 1;
                }
                Moment::Infinite => {
                    let partial: Vec<f64> = [1e2, 1e4, 1e6, 1e8]
                        .iter()
                        .map(|&t| truncated_moment(prior, k, t))
                        .collect();
                    for w in partial.windows(2) {
                        ensure(w[1] > 1.05 * w[0], || format!("{prior} E[τ^{k}]: {partial:?}"))?;
                    }
                    let steps: Vec<f64> = partial.windows(2).map(|w| w[1] - w[0]).collect();
                    for w in steps.windows(2) {
                        ensure(w[1] >= 0.5 * w[0], || format!("{prior} E[τ^{k}] levels off: {partial:?}"))?;
                    }
                    infinite += 1;
                }
            }
        }
    }
    Ok(format!(
        "{finite} finite moments (worst {worst:.1e}), {infinite} divergent"
    ))
}

fn ess_normal_sanity() -> Outcome {
    let u = 3.7733;
    let mut worst: f64 = 0.0;
    for k in 0..=40 {
        let sd = 0.05 * 100f64.powf(k as f64 / 40.0);
        let dist = Normal::new(-0.2, sd).map_err(|e| e.to_string())?;
        let hint = SupportHint::from_quantiles(&dist).map_err(|e| e.to_string())?;
        let ess = ess_elir(&dist, hint, u).map_err(|e| e.to_string())?;
        let exact = (u / sd).powi(2);
        let rel = (ess - exact).abs() / exact;
        worst = worst.max(rel);
        ensure(rel <= 1e-3, || format!("sd {sd}: ESS {ess} vs {exact}"))?;
    }
    Ok(format!("41 sds in [0.05, 5], worst relative error {worst:.1e}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("prior comparison table", prior_comparison_table),
        ("Alport end-to-end", alport_end_to_end),
        ("heart-failure end-to-end", heart_failure_end_to_end),
        ("MAC and MAP posteriors agree", mac_map_suite),
        ("bias-allowance equivalence", bias_allowance_suite),
        ("power-prior exponent", power_prior_suite),
        ("moment oracle", moment_oracle),
        ("ESS of normal densities", ess_normal_sanity),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} [{secs:.1} s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail} [{secs:.1} s]");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
