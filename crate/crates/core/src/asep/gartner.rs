use serde::{Deserialize, Serialize};

use super::state::{AsepRates, AsepState};
use crate::error::{require, Result};

/// Discrete Cole-Hopf transform Z(j, t) = e^{νt} τ^{h(j,t)/2},
/// ν = p + q − 2√(pq), with h the growth-frame height. With this sign of ν
/// the mean obeys d/dt E[Z] = √(pq) ΔE[Z].
pub fn gartner_transform(state: &AsepState, rates: &AsepRates) -> Result<Vec<f64>> {
    require(rates.tau > 0.0 && rates.tau < 1.0, || format!("τ must lie in (0, 1), got {}", rates.tau))?;
    let nu = rates.p + rates.q - 2.0 * (rates.p * rates.q).sqrt();
    let half_log_tau = 0.5 * rates.tau.ln();
    Ok(state.heights().iter().map(|&h| (nu * state.time + half_log_tau * h as f64).exp()).collect())
}

/// Weakly asymmetric rates q − p = ε^{1/2} with the diffusive scale factors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakAsymmetryConfig {
    pub epsilon: f64,
    pub rates: AsepRates,
    /// ASEP time per unit KPZ time, ε^{−2}.
    pub time_factor: f64,
    /// Lattice sites per unit KPZ length, ε^{−1}.
    pub space_factor: f64,
}

pub fn weak_asymmetry_config(epsilon: f64) -> Result<WeakAsymmetryConfig> {
    require(epsilon > 0.0 && epsilon <= 1.0, || format!("ε must lie in (0, 1], got {epsilon}"))?;
    let r = epsilon.sqrt();
    Ok(WeakAsymmetryConfig {
        epsilon,
        rates: AsepRates { p: 0.5 * (1.0 - r), q: 0.5 * (1.0 + r), tau: (1.0 - r) / (1.0 + r) },
        time_factor: epsilon.powi(-2),
        space_factor: 1.0 / epsilon,
    })
}
