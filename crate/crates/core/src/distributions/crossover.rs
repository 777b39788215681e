//! Finite-time sharp-wedge law: the generating function G_t as a Fredholm
//! determinant of the smoothed Airy kernel, and F_t recovered from it by
//! Gumbel deconvolution.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::kernels::{AiryWeight, FactoredAiryKernel};
use super::table::{DistributionTable, TableProvenance};
use crate::error::{require, KpzError, Result};
use crate::fredholm::{fredholm_det_with, FredholmOptions, FredholmResult, Kernel, KernelSpec};
use crate::specfun::{gumbel_characteristic, QuadratureRule};

/// Euler-Mascheroni constant, the mean of a standard (max) Gumbel variable.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossoverParams {
    pub t: f64,
    pub gamma_t: f64,
}

impl CrossoverParams {
    pub fn new(t: f64) -> Result<Self> {
        require(t.is_finite() && t > 0.0, || format!("KPZ time must be positive, got {t}"))?;
        Ok(Self { t, gamma_t: (0.5 * t).cbrt() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossoverOptions {
    /// Nodes per 10 units of truncated domain.
    pub n: usize,
    pub length: f64,
}

impl Default for CrossoverOptions {
    fn default() -> Self {
        Self { n: 40, length: 10.0 }
    }
}

/// The smoothed Airy kernel K_{t,s}(x, y).
pub fn smoothed_airy_kernel(params: &CrossoverParams, s: f64, x: f64, y: f64) -> f64 {
    FactoredAiryKernel::new(AiryWeight::Fermi { gamma: params.gamma_t, s }, x.min(y)).eval(x, y)
}

/// det(1 − P₀ K_{t,s} P₀) with diagnostics. The node count grows with the
/// truncation length, since at small t the kernel decays only like e^{−γ_t x}.
pub fn crossover_det(params: &CrossoverParams, s: f64, opts: CrossoverOptions) -> Result<FredholmResult> {
    require(s.is_finite(), || format!("s must be finite, got {s}"))?;
    let kernel = FactoredAiryKernel::new(AiryWeight::Fermi { gamma: params.gamma_t, s }, 0.0);
    let fopts = FredholmOptions { max_doublings: 5, ..Default::default() };
    let mut length = opts.length;
    let mut result;
    loop {
        let n = ((opts.n as f64) * (length / opts.length).max(1.0).sqrt()).ceil() as usize;
        result = fredholm_det_with(&KernelSpec::new(&kernel, 0.0, length, true), n, &fopts)?;
        if result.length <= length {
            break;
        }
        length = result.length;
    }
    Ok(result)
}

/// G_t(γ_t s) = ⟨exp(−exp(η(0,t) − γ_t s))⟩.
pub fn crossover_generating(params: &CrossoverParams, s: f64) -> Result<f64> {
    Ok(crossover_det(params, s, CrossoverOptions::default())?.value)
}

/// Mean and variance of η(0,t)/γ_t, from those of (η − G)/γ_t with G an
/// independent min-Gumbel variable: E = E_V − γ_E/γ_t, Var = Var_V − π²/(6γ_t²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossoverMoments {
    pub mean: f64,
    pub variance: f64,
    pub generating_mean: f64,
    pub generating_variance: f64,
}

pub fn crossover_moments(params: &CrossoverParams, opts: CrossoverOptions) -> Result<CrossoverMoments> {
    let g = |s: f64| crossover_det(params, s, opts).map(|r| r.value);
    let gamma = params.gamma_t;
    // locate a window outside of which 1 − G and G are negligible
    let scale = 1.0 / gamma.min(1.0);
    let mut a = -2.0 * scale - 2.0;
    while g(a)? > 1e-14 {
        a -= scale;
    }
    let mut b = 2.0 * scale;
    while 1.0 - g(b)? > 1e-14 {
        b += 2.0 * scale;
    }
    let width0 = 0.5 * scale.max(1.0) / gamma.max(1.0).sqrt().min(1.0).max(0.5);
    let center = -1.77;
    let rule = QuadratureRule::graded(a, b, 12, |s| width0 * (1.0 + 0.25 * (s - center).abs()))?;
    let (mut i0, mut i1) = (0.0, 0.0);
    for (&s, &w) in rule.nodes.iter().zip(&rule.weights) {
        let tail = 1.0 - g(s)?;
        i0 += w * tail;
        i1 += w * 2.0 * s * tail;
    }
    let mean_v = a + i0;
    let var_v = a * a + i1 - mean_v * mean_v;
    Ok(CrossoverMoments {
        mean: mean_v - EULER_GAMMA / gamma,
        variance: var_v - PI * PI / (6.0 * gamma * gamma),
        generating_mean: mean_v,
        generating_variance: var_v,
    })
}

/// Regularized deconvolution of F_t from G_t on a uniform s-grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deconvolution {
    pub table: DistributionTable,
    pub generating: Vec<f64>,
    pub regularization: f64,
    pub round_trip_residual: f64,
    pub min_raw_density: f64,
}

fn cyclic_convolve(planner: &mut FftPlanner<f64>, a_hat: &[Complex64], b: &[f64]) -> Vec<f64> {
    let n = a_hat.len();
    let mut buf: Vec<Complex64> = b.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    buf.resize(n, Complex64::new(0.0, 0.0));
    planner.plan_fft_forward(n).process(&mut buf);
    for (x, y) in buf.iter_mut().zip(a_hat) {
        *x *= y;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|c| c.re / n as f64).collect()
}

/// Cell masses of η/γ from the CDF values of V = η/γ + G/γ (G max-Gumbel) on
/// a uniform grid of step ds, by Tikhonov-regularized spectral division. α is
/// lowered by decades from 1e−2 until the re-convolved CDF matches the input
/// within `residual_target`.
/// Returns (masses, α, residual).
pub fn gumbel_deconvolve(generating: &[f64], ds: f64, gamma: f64, residual_target: f64) -> Result<(Vec<f64>, f64, f64)> {
    require(generating.len() >= 2 && ds > 0.0 && gamma > 0.0, || "deconvolution needs a grid, ds > 0 and γ > 0".into())?;
    // V = η/γ + G/γ with G max-Gumbel: cell masses of V are samples of the
    // box-smoothed density, so their transform is that of η's cell masses
    // times the Gumbel characteristic function Γ(1 − iω/γ)
    let cells: Vec<f64> = generating.windows(2).map(|w| w[1] - w[0]).collect();
    let right_tail = (37.0 / gamma / ds).ceil() as usize;
    let fft_len = (cells.len() + right_tail + 64).next_power_of_two();
    let mut planner = FftPlanner::new();
    let g_hat: Vec<Complex64> = (0..fft_len)
        .map(|k| {
            let kk = if k <= fft_len / 2 { k as f64 } else { k as f64 - fft_len as f64 };
            // forward DFT uses e^{−iωs}, i.e. the characteristic function at −ω
            let omega = 2.0 * PI * kk / (fft_len as f64 * ds);
            gumbel_characteristic(-omega / gamma)
        })
        .collect();
    let mut m_hat: Vec<Complex64> = cells.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    m_hat.resize(fft_len, Complex64::new(0.0, 0.0));
    planner.plan_fft_forward(fft_len).process(&mut m_hat);

    let target_cdf: Vec<f64> = generating.iter().map(|g| g - generating[0]).collect();
    let mut chosen: Option<(f64, f64, Vec<f64>)> = None;
    let mut last_residual = f64::INFINITY;
    for e in 2..=24 {
        let alpha = 10f64.powi(-e);
        let p_hat: Vec<Complex64> = m_hat
            .iter()
            .zip(&g_hat)
            .map(|(m, g)| m * g.conj() / (g.norm_sqr() + alpha))
            .collect();
        let mut buf = p_hat.clone();
        planner.plan_fft_inverse(fft_len).process(&mut buf);
        let p: Vec<f64> = buf[..cells.len()].iter().map(|c| c.re / fft_len as f64).collect();
        // re-convolve and compare cumulative masses with the generating function
        let again = cyclic_convolve(&mut planner, &g_hat, &p);
        let mut acc = 0.0;
        let mut residual: f64 = 0.0;
        for j in 0..cells.len() {
            acc += again[j];
            residual = residual.max((acc - target_cdf[j + 1]).abs());
        }
        last_residual = residual;
        if residual < residual_target {
            chosen = Some((alpha, residual, p));
            break;
        }
    }
    let (alpha, residual, p) = chosen.ok_or(KpzError::IllConditioned {
        regularization: 1e-24,
        residual: last_residual,
    })?;
    Ok((p, alpha, residual))
}

pub fn crossover_cdf_and_density(params: &CrossoverParams, s_grid: &[f64]) -> Result<Deconvolution> {
    crossover_cdf_and_density_with(params, s_grid, CrossoverOptions::default(), 1e-4)
}

pub fn crossover_cdf_and_density_with(
    params: &CrossoverParams,
    s_grid: &[f64],
    opts: CrossoverOptions,
    residual_target: f64,
) -> Result<Deconvolution> {
    require(s_grid.len() >= 8, || "deconvolution needs at least 8 grid points".into())?;
    let ds = s_grid[1] - s_grid[0];
    require(
        ds > 0.0 && s_grid.windows(2).all(|w| ((w[1] - w[0]) - ds).abs() < 1e-9 * ds.max(1.0)),
        || "deconvolution needs a uniform increasing s-grid".into(),
    )?;
    let generating: Vec<f64> = s_grid
        .iter()
        .map(|&s| crossover_det(params, s, opts).map(|r| r.value.clamp(0.0, 1.0)))
        .collect::<Result<_>>()?;
    let n = s_grid.len();
    let mass_in_grid = generating[n - 1] - generating[0];
    if mass_in_grid < 1.0 - 1e-3 {
        return Err(KpzError::RangeMismatch(format!(
            "s-grid [{}, {}] carries only {mass_in_grid} of the generating-function mass",
            s_grid[0],
            s_grid[n - 1]
        )));
    }
    let (p, alpha, residual) = gumbel_deconvolve(&generating, ds, params.gamma_t, residual_target)?;
    let min_raw_density = p.iter().cloned().fold(f64::INFINITY, f64::min) / ds;
    // cell masses → CDF at grid points (left tail mass G(s_0) is below the grid check)
    let mut cdf = Vec::with_capacity(n);
    let mut acc = 0.0;
    cdf.push(0.0);
    for &m in &p {
        acc += m.max(0.0);
        cdf.push(acc);
    }
    let total = acc;
    for c in cdf.iter_mut() {
        *c = (*c / total).min(1.0);
    }
    // density at grid points from neighbouring cell masses
    let density: Vec<f64> = (0..n)
        .map(|i| {
            let left = if i > 0 { p[i - 1].max(0.0) } else { 0.0 };
            let right = if i < n - 1 { p[i].max(0.0) } else { 0.0 };
            0.5 * (left + right) / ds / total
        })
        .collect();
    let table = DistributionTable::new(
        s_grid.to_vec(),
        cdf,
        Some(density),
        TableProvenance {
            kernel: "smoothed-airy/gumbel-deconvolution".into(),
            n: opts.n,
            length: opts.length,
            t: Some(params.t),
            notes: vec![
                ("regularization".into(), alpha),
                ("round_trip_residual".into(), residual),
                ("min_raw_density".into(), min_raw_density),
            ],
        },
    )?;
    Ok(Deconvolution { table, generating, regularization: alpha, round_trip_residual: residual, min_raw_density })
}
