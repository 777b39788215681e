//! Two-point law of the Airy process through the extended Airy kernel, and
//! the structure function g(w) = ⟨(A(0) − A(w))²⟩.

use serde::{Deserialize, Serialize};

use super::kernels::{AiryWeight, BackwardComplementKernel, FactoredAiryKernel};
use super::tracy_widom::{tw_moments, Ensemble, TwOptions};
use crate::error::{require, KpzError, Result};
use crate::fredholm::{block_det_with_rules, BlockKernel, Kernel, ZeroKernel};
use crate::specfun::QuadratureRule;

/// Upper end of every block domain: K_Ai(x, x) < 1e−12 beyond it.
const X_MAX: f64 = 6.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPointOptions {
    /// Gauss-Legendre order per panel of the block rules.
    pub order: usize,
    /// Block-rule panel width; `None` picks min(1, 3√w).
    pub panel_width: Option<f64>,
    /// Range of the lower level u in the structure-function integral.
    pub u_range: (f64, f64),
    /// Gauss-Legendre order per panel of the (u, d) integral.
    pub outer_order: usize,
    /// Drop the off-diagonal blocks (independent two-point law).
    pub decoupled: bool,
}

impl Default for TwoPointOptions {
    fn default() -> Self {
        Self { order: 16, panel_width: None, u_range: (-7.0, 4.5), outer_order: 6, decoupled: false }
    }
}

/// The four blocks of K^{(2)} for levels (s₁, s₂) and separation w.
pub struct ExtendedAiryKernel {
    pub w: f64,
    diagonal: FactoredAiryKernel,
    forward: FactoredAiryKernel,
    backward: BackwardComplementKernel,
}

impl ExtendedAiryKernel {
    pub fn new(w: f64, x_min: f64) -> Result<Self> {
        require(w.is_finite() && w > 0.0, || format!("separation must be positive, got {w}"))?;
        Ok(Self {
            w,
            diagonal: FactoredAiryKernel::new(AiryWeight::Step, x_min),
            forward: FactoredAiryKernel::new(AiryWeight::DecayingPositive { w }, x_min),
            backward: BackwardComplementKernel::new(w, x_min),
        })
    }

    /// Blocks [[K_Ai, −e^{−wH}(1 − K_Ai)], [e^{wH}K_Ai, K_Ai]].
    pub fn blocks(&self, decoupled: bool) -> BlockKernel<'_> {
        let (b12, b21): (&dyn Kernel, &dyn Kernel) =
            if decoupled { (&ZeroKernel, &ZeroKernel) } else { (&self.backward, &self.forward) };
        BlockKernel { blocks: [[&self.diagonal, b12], [b21, &self.diagonal]] }
    }
}

fn block_rule(s: f64, width: f64, order: usize) -> Result<QuadratureRule> {
    let hi = (s + 1.0).max(X_MAX);
    let panels = ((hi - s) / width).ceil().max(1.0) as usize;
    let breaks: Vec<f64> = (0..=panels).map(|i| s + (hi - s) * i as f64 / panels as f64).collect();
    QuadratureRule::composite(&breaks, order)
}

fn panel_width(w: f64, opts: &TwoPointOptions) -> f64 {
    opts.panel_width.unwrap_or_else(|| (3.0 * w.sqrt()).min(1.0))
}

/// (P(A(0) ≤ s₁, A(w) ≤ s₂), P(A(0) ≤ s₁)) from one discretization.
pub fn extended_airy_cdf(w: f64, s1: f64, s2: f64, opts: &TwoPointOptions) -> Result<(f64, f64)> {
    let kernel = ExtendedAiryKernel::new(w, s1.min(s2))?;
    let h = panel_width(w, opts);
    let r1 = block_rule(s1, h, opts.order)?;
    let r2 = block_rule(s2, h, opts.order)?;
    let (joint, marginal, _) = block_det_with_rules(&kernel.blocks(opts.decoupled), &r1, &r2)?;
    Ok((joint, marginal))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPointResult {
    pub w: f64,
    /// g(w) = ⟨(A(0) − A(w))²⟩.
    pub g: f64,
    /// Cov(A(0), A(w)) = c² − g/2.
    pub covariance: f64,
    /// c², the GUE Tracy-Widom variance.
    pub variance: f64,
    pub determinants: usize,
}

pub fn two_point_covariance(w: f64) -> Result<TwoPointResult> {
    two_point_covariance_with(w, &TwoPointOptions::default())
}

/// g(w) = 4 ∫∫_{u<v} P(A(0) ≤ u, A(w) > v) du dv, with the integrand
/// P(A(0) ≤ u) − P(A(0) ≤ u, A(w) ≤ v) taken from a single block
/// discretization. The joint law is symmetric under exchanging the two
/// points, which gives the factor 4. Writing g this way avoids the
/// cancellation in 2c² − 2Cov when w is small.
pub fn two_point_covariance_with(w: f64, opts: &TwoPointOptions) -> Result<TwoPointResult> {
    require(w > 0.0 && w <= 5.0, || format!("separation must lie in (0, 5], got {w}"))?;
    let (u_lo, u_hi) = opts.u_range;
    require(u_lo < u_hi, || "empty u range".into())?;
    let u_panels = ((u_hi - u_lo) / 2.0).ceil() as usize;
    let u_breaks: Vec<f64> = (0..=u_panels).map(|i| u_lo + (u_hi - u_lo) * i as f64 / u_panels as f64).collect();
    let u_rule = QuadratureRule::composite(&u_breaks, opts.outer_order)?;
    // d = v − u: geometric panels starting at the Brownian scale √w
    let mut d_breaks = vec![0.0];
    let mut h = 0.5 * w.sqrt().min(1.0);
    while *d_breaks.last().unwrap() < u_hi - u_lo + 1.0 {
        d_breaks.push(d_breaks.last().unwrap() + h);
        h *= 1.6;
    }
    let d_rule = QuadratureRule::composite(&d_breaks, opts.outer_order)?;

    let mut total = 0.0;
    let mut determinants = 0;
    for (&u, &wu) in u_rule.nodes.iter().zip(&u_rule.weights) {
        let mut inner = 0.0;
        let mut small_run = 0;
        for (&d, &wd) in d_rule.nodes.iter().zip(&d_rule.weights) {
            // 1 − F_GUE(v) < 1e−10 once v exceeds u_hi + 1
            if u + d > u_hi + 1.0 {
                break;
            }
            let (joint, marginal) = extended_airy_cdf(w, u, u + d, opts)?;
            determinants += 1;
            let p = marginal - joint;
            if !p.is_finite() {
                return Err(KpzError::NonFinite(format!("two-point integrand at u={u}, d={d}")));
            }
            inner += wd * p;
            // P(A(0) ≤ u, A(w) > u + d) decreases in d
            // determinants carry ~1e−13 noise, so stop well above it
            small_run = if p.abs() < 1e-11 { small_run + 1 } else { 0 };
            if small_run >= 2 {
                break;
            }
        }
        total += wu * inner;
    }
    let g = 4.0 * total;
    let variance = tw_moments(Ensemble::Gue, TwOptions::default())?.1;
    Ok(TwoPointResult { w, g, covariance: variance - 0.5 * g, variance, determinants })
}
