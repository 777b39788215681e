use std::f64::consts::PI;

use kpz_core::asep::{height_ensemble, tau_moment_contour, tau_moment_mc, weak_asymmetry_config, AsepRates, InitialCondition};
use kpz_core::polymer::{
    fluctuation_exponent, free_energy_estimate, intermediate_disorder_partition, log_partition_variance, Disorder, DisorderField,
};
use kpz_core::she::{brownian_invariance_check, eta_transform, sharp_wedge_samples, SheGrid};
use kpz_core::stats::{ecdf, ks_two_sample, linear_fit, Estimate};

fn variance(v: &[f64]) -> Estimate {
    let (var, se) = log_partition_variance(v);
    Estimate { estimate: var, se, n_samples: v.len() }
}

fn log_binomial_center(n: usize) -> f64 {
    let lg = |x: usize| (1..=x).map(|i| (i as f64).ln()).sum::<f64>();
    lg(n) - 2.0 * lg(n / 2) - n as f64 * std::f64::consts::LN_2
}

#[test]
fn intermediate_disorder_is_universal() {
    // ε = 0.05, t = 1, x = 0: 400 steps back to the origin
    let walk = log_binomial_center(400).exp();
    let mut ensembles = Vec::new();
    for (k, disorder) in [Disorder::standard_gaussian(), Disorder::Bernoulli].into_iter().enumerate() {
        let values: Vec<f64> = (0..3000u64)
            .map(|r| intermediate_disorder_partition(0.05, 1.0, 0.0, &DisorderField::new(disorder, 11 + k as u64, r).unwrap()).unwrap().value)
            .collect();
        let mean = Estimate::from_samples(&values).unwrap();
        assert!(mean.z_score(walk) < 3.0, "{disorder:?}: {mean:?} vs walk probability {walk}");
        ensembles.push(ecdf(&values).unwrap());
    }
    let ks = ks_two_sample(&ensembles[0], &ensembles[1]);
    assert!(ks < 0.05, "KS distance {ks}");
}

#[test]
fn polymer_exponent_does_not_depend_on_the_disorder_law() {
    let ladder = [64, 128, 256, 512, 1024];
    let gaussian = fluctuation_exponent(1.0, Disorder::standard_gaussian(), &ladder, 500, 7).unwrap();
    let exponential = fluctuation_exponent(1.0, Disorder::Exponential { rate: 2.0 }, &ladder, 500, 7).unwrap();
    for fit in [&gaussian, &exponential] {
        assert!((fit.slope - 2.0 / 3.0).abs() < 0.1, "slope {} ± {}", fit.slope, fit.slope_se);
    }
    let se = gaussian.slope_se.hypot(exponential.slope_se);
    assert!((gaussian.slope - exponential.slope).abs() < 0.1 + 3.0 * se);
}

#[test]
fn free_energy_is_reproducible_and_superadditive() {
    let ladder = [32, 64, 128, 256];
    let a = free_energy_estimate(1.0, Disorder::standard_gaussian(), &ladder, 300, 1).unwrap();
    let b = free_energy_estimate(1.0, Disorder::standard_gaussian(), &ladder, 300, 2).unwrap();
    assert!(a.ci.0 <= a.v_inf && a.v_inf <= a.ci.1);
    assert!(a.ci.0 <= b.ci.1 && b.ci.0 <= a.ci.1, "{:?} vs {:?}", a.ci, b.ci);
    // Z(2N, 0) ≥ Z(N, 0)·Z'(N, 0) for the concatenated paths, so the per-step means increase
    for w in a.per_n.windows(2) {
        let (lo, hi) = (w[0].1, w[1].1);
        assert!(hi.estimate >= lo.estimate - 3.0 * lo.se.hypot(hi.se), "{w:?}");
    }
}

#[test]
fn tau_moments_agree_with_contour_integrals() {
    let rates = AsepRates::from_tau(0.25).unwrap();
    for sites in [vec![1i64], vec![1, 2]] {
        let exact = tau_moment_contour(&sites, 2.0, &rates).unwrap().value;
        let mc = tau_moment_mc(&sites, 2.0, &rates, 4000, 21).unwrap();
        assert!(mc.z_score(exact) < 3.0, "{sites:?}: {mc:?} vs {exact}");
    }
}

#[test]
fn weakly_asymmetric_asep_approaches_the_she() {
    // KPZ time 1: the step wedge e^{−|x|/√ε} is then narrow against √t
    let t = 1.0;
    let cfg = weak_asymmetry_config(0.1).unwrap();
    let half_log_tau = 0.5 * cfg.rates.tau.ln();
    let heights = height_ensemble(InitialCondition::Step, &cfg.rates, t * cfg.time_factor, &[0], 4000, 3).unwrap();
    let log_z: Vec<f64> = heights.iter().map(|h| half_log_tau * h[0] as f64).collect();
    let grid = SheGrid::for_time(0.05, t).unwrap();
    let z = sharp_wedge_samples(&grid, &[t], &[0.0], 4000, 3).unwrap();
    let log_she: Vec<f64> = z.iter().map(|r| r[0][0].ln()).collect();
    let (asep, she) = (variance(&log_z), variance(&log_she));
    assert!((asep.estimate / she.estimate - 1.0).abs() < 0.15, "{asep:?} vs {she:?}");
}

#[test]
fn she_mean_is_the_continuum_heat_kernel() {
    let t = 0.5;
    let xs = [0.0, 0.5, -1.0];
    let grid = SheGrid::for_time(0.05, t).unwrap();
    let samples = sharp_wedge_samples(&grid, &[t], &xs, 10_000, 5).unwrap();
    for (j, &x) in xs.iter().enumerate() {
        let values: Vec<f64> = samples.iter().map(|r| r[0][j]).collect();
        let est = Estimate::from_samples(&values).unwrap();
        let kernel = (-x * x / (2.0 * t)).exp() / (2.0 * PI * t).sqrt();
        assert!(est.z_score(kernel) < 3.0, "x = {x}: {est:?} vs {kernel}");
    }
}

#[test]
fn eta_is_stationary_in_x() {
    let t = 0.5;
    let xs = [0.0, 0.35, -0.35, 0.7, -0.7];
    let grid = SheGrid::for_time(0.05, t).unwrap();
    let samples = sharp_wedge_samples(&grid, &[t], &xs, 4000, 8).unwrap();
    let var_at = |j: usize| {
        let eta: Vec<f64> = samples.iter().map(|r| eta_transform(r[0][j].ln(), xs[j], t).unwrap()).collect();
        variance(&eta)
    };
    let center = var_at(0);
    for j in 1..xs.len() {
        let v = var_at(j);
        assert!((v.estimate - center.estimate).abs() < 3.0 * v.se.hypot(center.se), "x = {}: {v:?} vs {center:?}", xs[j]);
    }
}

#[test]
fn brownian_slope_does_not_depend_on_the_drift() {
    let xs = [0.25, 0.5, 0.75, 1.0];
    let flat = brownian_invariance_check(0.0, 0.5, &xs, 0.05, 1000, 4).unwrap();
    let tilted = brownian_invariance_check(0.5, 0.5, &xs, 0.05, 1000, 5).unwrap();
    let se = flat.slope_se.hypot(tilted.slope_se);
    assert!((flat.slope - tilted.slope).abs() < 3.0 * se, "{} vs {} (se {se})", flat.slope, tilted.slope);
}

#[test]
fn short_time_eta_width_scales_like_a_quarter_power() {
    let times = [0.125, 0.25, 0.5];
    let grid = SheGrid::for_time(0.02, 0.5).unwrap();
    let samples = sharp_wedge_samples(&grid, &times, &[0.0], 2000, 6).unwrap();
    let log_sd: Vec<f64> = (0..times.len())
        .map(|k| {
            let h: Vec<f64> = samples.iter().map(|r| r[k][0].ln()).collect();
            0.5 * variance(&h).estimate.ln()
        })
        .collect();
    let log_t: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let fit = linear_fit(&log_t, &log_sd).unwrap();
    assert!((fit.slope - 0.25).abs() < 0.08, "slope {}", fit.slope);
}
