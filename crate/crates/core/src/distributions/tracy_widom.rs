//! Tracy-Widom GUE and GOE distribution functions as Fredholm determinants.

use serde::{Deserialize, Serialize};

use super::kernels::{AiryWeight, FactoredAiryKernel, GoeKernel};
use super::table::{DistributionTable, TableProvenance};
use crate::error::{require, Result};
use crate::fredholm::{fredholm_det, FredholmResult, KernelSpec};
use crate::specfun::QuadratureRule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ensemble {
    Gue,
    Goe,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwOptions {
    pub n: usize,
    pub length: f64,
}

impl Default for TwOptions {
    fn default() -> Self {
        Self { n: 40, length: 10.0 }
    }
}

fn check_s(s: f64) -> Result<()> {
    require(s.is_finite() && (-10.0..=20.0).contains(&s), || format!("s = {s} outside [-10, 20]"))
}

/// det(1 − P_s K_Ai P_s) with full diagnostics.
pub fn tw_gue_det(s: f64, opts: TwOptions) -> Result<FredholmResult> {
    check_s(s)?;
    let kernel = FactoredAiryKernel::new(AiryWeight::Step, s);
    fredholm_det(&KernelSpec::new(&kernel, s, opts.length, true), opts.n)
}

/// F_GUE(s).
pub fn tw_gue_cdf(s: f64) -> Result<f64> {
    Ok(tw_gue_det(s, TwOptions::default())?.value)
}

/// det(1 − P₀ B_{s/2} P₀) = P(ζ_GOE ≤ s), so ζ_GOE is twice the standard TW-GOE variable.
pub fn tw_goe_det(s: f64, opts: TwOptions) -> Result<FredholmResult> {
    check_s(s)?;
    let kernel = GoeKernel { s: 0.5 * s };
    fredholm_det(&KernelSpec::new(&kernel, 0.0, opts.length, true), opts.n)
}

/// F_GOE(s); the kernel parameter is s/2.
pub fn tw_goe_cdf(s: f64) -> Result<f64> {
    Ok(tw_goe_det(s, TwOptions::default())?.value)
}

pub fn tw_det(which: Ensemble, s: f64, opts: TwOptions) -> Result<FredholmResult> {
    match which {
        Ensemble::Gue => tw_gue_det(s, opts),
        Ensemble::Goe => tw_goe_det(s, opts),
    }
}

/// Table on a uniform grid with centered-difference density.
pub fn tw_table(which: Ensemble, s_min: f64, s_max: f64, ds: f64, opts: TwOptions) -> Result<DistributionTable> {
    require(s_min < s_max && ds > 0.0, || "table needs s_min < s_max and ds > 0".into())?;
    let count = ((s_max - s_min) / ds).round() as usize + 1;
    let s: Vec<f64> = (0..count).map(|i| s_min + i as f64 * ds).collect();
    let mut cdf = Vec::with_capacity(count);
    let mut length = opts.length;
    for &x in &s {
        let r = tw_det(which, x, opts)?;
        length = length.max(r.length);
        cdf.push(r.value.clamp(0.0, 1.0));
    }
    let density = super::table::differentiate(&s, &cdf).into_iter().map(|d| d.max(0.0)).collect();
    let kernel = match which {
        Ensemble::Gue => "airy",
        Ensemble::Goe => "goe-airy",
    };
    DistributionTable::new(
        s,
        cdf,
        Some(density),
        TableProvenance { kernel: kernel.into(), n: opts.n, length, t: None, notes: vec![] },
    )
}

/// Mean and variance from Gauss-Legendre integration of the CDF over [-10, 12].
pub fn tw_moments(which: Ensemble, opts: TwOptions) -> Result<(f64, f64)> {
    let a = -10.0;
    // [-10, 12] in unit panels
    let breaks: Vec<f64> = (0..=22).map(|i| a + i as f64).collect();
    let rule = QuadratureRule::composite(&breaks, 12)?;
    let mut int_tail = 0.0;
    let mut int_s_tail = 0.0;
    for (&s, &w) in rule.nodes.iter().zip(&rule.weights) {
        let g = 1.0 - tw_det(which, s, opts)?.value;
        int_tail += w * g;
        int_s_tail += w * 2.0 * s * g;
    }
    let mean = a + int_tail;
    let second = a * a + int_s_tail;
    Ok((mean, second - mean * mean))
}
