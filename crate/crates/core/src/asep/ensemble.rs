use rand::Rng;
use rayon::prelude::*;

use super::state::{init_flat, init_stationary, init_step, kmc_evolve, step_window, AsepRates, InitialCondition};
use crate::error::{require, Result};
use crate::rng::{stream, StreamPurpose};

/// Canonical heights at `sites` after time `t`, one row per replica.
pub fn height_ensemble(initial: InitialCondition, rates: &AsepRates, t: f64, sites: &[i64], replicas: usize, seed: u64) -> Result<Vec<Vec<i64>>> {
    require(!sites.is_empty(), || "no sites requested".into())?;
    let reach = sites.iter().map(|j| j.abs()).max().unwrap_or(0);
    let window = match initial {
        InitialCondition::Step => step_window(rates, t).max(reach + 2),
        _ => (4.0 * (rates.p + rates.q) * t).ceil() as i64 + reach + 16,
    };
    (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let state = match initial {
                InitialCondition::Step => init_step(window)?,
                InitialCondition::Flat => init_flat(window)?,
                InitialCondition::Stationary { rho } => init_stationary(window, rho, &mut stream(seed, r, StreamPurpose::AsepInitial))?,
            };
            let end = kmc_evolve(state, rates, t, &mut stream(seed, r, StreamPurpose::AsepDynamics))?;
            Ok(sites.iter().map(|&j| end.canonical_height(j)).collect())
        })
        .collect()
}

/// Step TASEP: h_c(0, t) ≈ −t/2 + 2^{−1/3} t^{1/3} χ with χ ~ F_GUE.
pub fn tasep_gue_scale(t: f64) -> f64 {
    2f64.powf(-1.0 / 3.0) * t.cbrt()
}

/// Rescaled step-TASEP heights (h_c(0, t) + t/2)/(2^{−1/3} t^{1/3}), each
/// spread by an independent U(−1, 1) jitter over its lattice cell (heights
/// at a fixed site move in steps of 2).
pub fn tasep_step_scaled(t: f64, replicas: usize, seed: u64) -> Result<Vec<f64>> {
    let heights = height_ensemble(InitialCondition::Step, &AsepRates::tasep(), t, &[0], replicas, seed)?;
    let scale = tasep_gue_scale(t);
    Ok(heights
        .iter()
        .enumerate()
        .map(|(r, h)| {
            let jitter = stream(seed, r as u64, StreamPurpose::Sampling).random_range(-1.0..1.0);
            (h[0] as f64 + jitter + 0.5 * t) / scale
        })
        .collect())
}
