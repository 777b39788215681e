//! KPZ scaling parameters, the effective nonlinearity of smoothed Hamiltonians,
//! and the one-point rescaling h ↦ (h − v_∞t)/(Γt)^{1/3}.

use serde::{Deserialize, Serialize};

use crate::error::{require, Result};

/// Roughness exponent of the stationary (Brownian) profile.
pub const ROUGHNESS_EXPONENT: f64 = 0.5;
/// Dynamic exponent: transverse correlations grow as t^{1/z}.
pub const DYNAMIC_EXPONENT: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub lambda: f64,
    pub nu: f64,
    pub d: f64,
    /// σ = √(D/2ν), amplitude of the stationary Brownian profile.
    pub sigma: f64,
    /// Γ = ½|λ|σ⁴.
    pub gamma: f64,
    pub v_inf: f64,
}

impl ScalingParams {
    pub fn new(lambda: f64, nu: f64, d: f64, v_inf: f64) -> Result<Self> {
        require(nu > 0.0 && d > 0.0, || format!("ν and D must be positive, got ν={nu}, D={d}"))?;
        require(lambda.is_finite() && v_inf.is_finite(), || "λ and v_∞ must be finite".into())?;
        let sigma = (d / (2.0 * nu)).sqrt();
        Ok(Self { lambda, nu, d, sigma, gamma: 0.5 * lambda.abs() * sigma.powi(4), v_inf })
    }

    /// λ = D = 1, ν = ½: σ = 1, Γ = ½.
    pub fn standard() -> Self {
        Self::new(1.0, 0.5, 1.0, 0.0).expect("standard units are valid")
    }

    /// Parameters given directly through Γ, for lattice models.
    pub fn from_gamma(gamma: f64, v_inf: f64) -> Result<Self> {
        require(gamma > 0.0, || format!("Γ must be positive, got {gamma}"))?;
        Ok(Self { lambda: 2.0 * gamma, nu: 0.5, d: 1.0, sigma: 1.0, gamma, v_inf })
    }
}

/// E[X^m] for a standard Gaussian X.
fn gaussian_moment(m: usize) -> f64 {
    if m % 2 == 1 {
        0.0
    } else {
        (1..m).step_by(2).map(|k| k as f64).product()
    }
}

/// λ̄ = F̄''(0) for F̄(ϑ) = E[F(σX + ϑ)], F(ϑ) = Σ c_k ϑ^k with degree ≤ 8.
pub fn effective_lambda(coefficients: &[f64], sigma: f64) -> Result<f64> {
    require(coefficients.len() <= 9, || format!("polynomial degree must be ≤ 8, got {}", coefficients.len().saturating_sub(1)))?;
    require(sigma >= 0.0 && sigma.is_finite(), || format!("σ must be non-negative, got {sigma}"))?;
    // F̄''(0) = E[F''(σX)] = Σ_k c_k k(k−1) σ^{k−2} E[X^{k−2}]
    Ok(coefficients
        .iter()
        .enumerate()
        .skip(2)
        .map(|(k, &c)| c * (k * (k - 1)) as f64 * sigma.powi(k as i32 - 2) * gaussian_moment(k - 2))
        .sum())
}

/// ζ̂ = (h − v_∞t)/(Γt)^{1/3} elementwise.
pub fn kpz_rescale(h: &[f64], params: &ScalingParams, t: f64) -> Result<Vec<f64>> {
    require(params.gamma > 0.0, || format!("Γ must be positive, got {}", params.gamma))?;
    require(t > 0.0, || format!("t must be positive, got {t}"))?;
    let scale = (params.gamma * t).cbrt();
    Ok(h.iter().map(|x| (x - params.v_inf * t) / scale).collect())
}
