use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::state::{init_step, kmc_evolve, step_window, AsepRates, AsepState};
use crate::error::{require, KpzError, Result};
use crate::rng::{stream, StreamPurpose};
use crate::stats::{Estimate, Moments};

/// Z̄(j, t) = τ^{(h(j,t) + j)/2} with the growth-frame height.
pub fn modified_partition(state: &AsepState, rates: &AsepRates, j: i64) -> f64 {
    rates.tau.powf(0.5 * (state.height(j) + j) as f64)
}

fn check_sites(sites: &[i64], rates: &AsepRates) -> Result<()> {
    require((1..=3).contains(&sites.len()), || format!("τ-moments need 1 ≤ N ≤ 3, got {}", sites.len()))?;
    require(sites.windows(2).all(|w| w[0] < w[1]), || format!("sites must be strictly increasing, got {sites:?}"))?;
    require(rates.tau > 0.0 && rates.tau < 1.0, || format!("τ must lie in (0, 1), got {}", rates.tau))
}

/// (τ − 1)^{−N} ∏_ℓ (Z̄(j_ℓ) − Z̄(j_ℓ − 1)) for one state.
pub fn tau_moment_sample(state: &AsepState, rates: &AsepRates, sites: &[i64]) -> Result<f64> {
    check_sites(sites, rates)?;
    let scale = 1.0 / (rates.tau - 1.0);
    Ok(sites
        .iter()
        .map(|&j| scale * (modified_partition(state, rates, j) - modified_partition(state, rates, j - 1)))
        .product())
}

/// Monte Carlo estimate over `samples` independent step-data trajectories;
/// replica r uses stream r of the master seed.
pub fn tau_moment_mc(sites: &[i64], t: f64, rates: &AsepRates, samples: usize, seed: u64) -> Result<Estimate> {
    check_sites(sites, rates)?;
    require(samples >= 2, || "need at least two samples".into())?;
    let reach = sites.iter().map(|j| j.abs() + 1).max().unwrap_or(0);
    let window = step_window(rates, t).max(reach + 2);
    let mut acc = Moments::default();
    for r in 0..samples {
        let mut rng = stream(seed, r as u64, StreamPurpose::AsepDynamics);
        let state = kmc_evolve(init_step(window)?, rates, t, &mut rng)?;
        acc.push(tau_moment_sample(&state, rates, sites)?);
    }
    Ok(acc.estimate())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourValue {
    pub value: f64,
    pub nodes: usize,
    pub radius: f64,
    /// |value(nodes) − value(nodes/2)|.
    pub convergence: f64,
    pub imaginary: f64,
}

/// N-fold contour integral for step data on circles of radius r about −τ.
/// Its lattice variable is one site to the left of the Monte Carlo
/// observable: the value at sites j_ℓ − 1 estimates the ⟨·⟩ at sites j_ℓ.
/// The shift is applied here so both functions take the same sites.
pub fn tau_moment_contour(sites: &[i64], t: f64, rates: &AsepRates) -> Result<ContourValue> {
    let nodes = if sites.len() <= 2 { 1 << 10 } else { 1 << 6 };
    tau_moment_contour_with(sites, t, rates, None, nodes)
}

pub fn tau_moment_contour_with(
    sites: &[i64],
    t: f64,
    rates: &AsepRates,
    radius: Option<f64>,
    initial_nodes: usize,
) -> Result<ContourValue> {
    check_sites(sites, rates)?;
    require(t >= 0.0, || format!("t must be non-negative, got {t}"))?;
    let tau = rates.tau;
    let bound = (1.0 - tau).min(tau * (1.0 - tau) / (1.0 + tau));
    let r = radius.unwrap_or(0.9 * bound);
    if !(r > 0.0 && r < bound) {
        return Err(KpzError::ContourConstraint(format!(
            "radius {r} must lie in (0, {bound}) so that −1 and the τ-image of the circle stay outside"
        )));
    }
    let max_nodes = if sites.len() <= 2 { 1 << 13 } else { 1 << 9 };
    let shifted: Vec<i64> = sites.iter().map(|j| j - 1).collect();
    let mut nodes = initial_nodes.max(8);
    let mut previous = contour_sum(&shifted, t, rates, r, nodes / 2);
    loop {
        let current = contour_sum(&shifted, t, rates, r, nodes);
        let change = (current - previous).norm();
        if change < 1e-8 {
            if current.im.abs() > 1e-8 * current.re.abs().max(1.0) {
                return Err(KpzError::ImaginaryResidual(current.im));
            }
            return Ok(ContourValue { value: current.re, nodes, radius: r, convergence: change, imaginary: current.im });
        }
        if nodes >= max_nodes {
            return Err(KpzError::NonConvergence(format!("contour sum changed by {change:e} at {nodes} nodes")));
        }
        previous = current;
        nodes *= 2;
    }
}

/// Trapezoid rule on the N-torus of circles, including the prefactor
/// τ^{N(N−1)/2}/(2πi)^N.
fn contour_sum(sites: &[i64], t: f64, rates: &AsepRates, r: f64, nodes: usize) -> Complex64 {
    let (p, q, tau) = (rates.p, rates.q, rates.tau);
    let n = sites.len();
    let zs: Vec<Complex64> = (0..nodes)
        .map(|k| Complex64::new(-tau, 0.0) + Complex64::from_polar(r, 2.0 * PI * (k as f64 + 0.5) / nodes as f64))
        .collect();
    // single-variable factors, with dz/(2πi) = (z + τ) dθ/(2π) cancelling 1/(z + τ)
    let single: Vec<Vec<Complex64>> = sites
        .iter()
        .map(|&j| {
            zs.iter()
                .map(|&z| {
                    let expo = -z * (p - q).powi(2) * t / ((z + 1.0) * (p + q * z));
                    expo.exp() * ((1.0 + z) / (1.0 + z / tau)).powi(j as i32) / nodes as f64
                })
                .collect()
        })
        .collect();
    let pair = |a: Complex64, b: Complex64| (a - b) / (a - tau * b);
    let mut total = Complex64::new(0.0, 0.0);
    match n {
        1 => total = single[0].iter().sum(),
        2 => {
            for (a, za) in zs.iter().enumerate() {
                for (b, zb) in zs.iter().enumerate() {
                    total += single[0][a] * single[1][b] * pair(*za, *zb);
                }
            }
        }
        _ => {
            for (a, za) in zs.iter().enumerate() {
                for (b, zb) in zs.iter().enumerate() {
                    let ab = single[0][a] * single[1][b] * pair(*za, *zb);
                    for (c, zc) in zs.iter().enumerate() {
                        total += ab * single[2][c] * pair(*za, *zc) * pair(*zb, *zc);
                    }
                }
            }
        }
    }
    total * tau.powi((n * (n - 1) / 2) as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_value_from_profile() {
        // at t = 0, Z̄(j) = τ^{max(j,0)}, so each factor equals τ^{j−1} for j ≥ 1 and 0 otherwise
        let rates = AsepRates::new(0.2, 0.8).unwrap();
        let s = init_step(10).unwrap();
        let v = tau_moment_sample(&s, &rates, &[1, 3]).unwrap();
        assert!((v - rates.tau.powi(2)).abs() < 1e-15);
        assert_eq!(tau_moment_sample(&s, &rates, &[-1, 2]).unwrap(), 0.0);
        for sites in [vec![1], vec![2], vec![1, 2], vec![2, 4], vec![1, 2, 3]] {
            let mc = tau_moment_sample(&s, &rates, &sites).unwrap();
            let c = tau_moment_contour(&sites, 0.0, &rates).unwrap().value;
            assert!((mc - c).abs() < 1e-9, "{sites:?}: {mc} vs {c}");
        }
    }

    #[test]
    fn observables_bounded() {
        let rates = AsepRates::new(0.25, 0.75).unwrap();
        let mut rng = stream(3, 0, StreamPurpose::Test);
        let s = kmc_evolve(init_step(60).unwrap(), &rates, 8.0, &mut rng).unwrap();
        for j in -20..=20 {
            let z = modified_partition(&s, &rates, j);
            assert!(z > 0.0 && z <= 1.0);
        }
    }

    #[test]
    fn contour_converges_spectrally() {
        let rates = AsepRates::new(0.2, 0.8).unwrap();
        let a = tau_moment_contour_with(&[1], 2.0, &rates, None, 1 << 10).unwrap();
        let b = tau_moment_contour_with(&[1], 2.0, &rates, None, 1 << 11).unwrap();
        assert!((a.value - b.value).abs() < 1e-10);
        assert!(a.imaginary.abs() < 1e-10);
    }

    #[test]
    fn contour_is_radius_independent() {
        let rates = AsepRates::new(1.0 / 3.0, 2.0 / 3.0).unwrap();
        let bound = 0.5 * 0.5 / 1.5;
        let a = tau_moment_contour_with(&[1, 2], 1.0, &rates, Some(0.5 * bound), 256).unwrap();
        let b = tau_moment_contour_with(&[1, 2], 1.0, &rates, Some(0.95 * bound), 256).unwrap();
        assert!((a.value - b.value).abs() < 1e-8, "{} vs {}", a.value, b.value);
    }

    #[test]
    fn contour_rejects_bad_input() {
        let rates = AsepRates::new(0.2, 0.8).unwrap();
        assert!(matches!(
            tau_moment_contour_with(&[1], 1.0, &rates, Some(0.5), 64),
            Err(KpzError::ContourConstraint(_))
        ));
        assert!(tau_moment_contour(&[2, 1], 1.0, &rates).is_err());
        assert!(tau_moment_contour(&[1], 1.0, &AsepRates::new(0.5, 0.5).unwrap()).is_err());
    }

    #[test]
    fn mc_matches_contour_single_site() {
        let rates = AsepRates::from_tau(0.25).unwrap();
        let mc = tau_moment_mc(&[1], 2.0, &rates, 4000, 21).unwrap();
        let c = tau_moment_contour(&[1], 2.0, &rates).unwrap().value;
        assert!(mc.z_score(c) < 3.0, "{} ± {} vs {c}", mc.estimate, mc.se);
    }
}
