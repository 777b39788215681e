//! Numerical residuals of two Airy integral identities used by the replica derivation.

use std::f64::consts::PI;

use super::airy::ai;
use super::quadrature::QuadratureRule;
use crate::error::{require, KpzError, Result};

const CUT: f64 = 1e-14;
const PANEL_ORDER: usize = 16;

/// |∫ Ai(y) e^{a y} dy − e^{a³/3}| with a = λ n.
pub fn airy_cubic_identity_residual(lambda: f64, n: u32) -> Result<f64> {
    require(lambda.is_finite() && lambda > 0.0, || format!("lambda must be positive, got {lambda}"))?;
    require(n >= 1, || "n must be a positive integer".into())?;
    let a = lambda * n as f64;
    if a > 3.0 {
        return Err(KpzError::InvalidArgument(format!(
            "lambda*n = {a} exceeds 3: the truncated integral no longer resolves the growing integrand"
        )));
    }
    let exact = (a * a * a / 3.0).exp();
    let threshold = CUT * exact.max(1.0);
    // left cut: the oscillatory envelope e^{a y} |y|^{-1/4}/√π falls below the threshold
    let mut lo = -1.0;
    while (a * lo).exp() * lo.abs().powf(-0.25) / PI.sqrt() >= threshold {
        lo *= 1.25;
    }
    // right cut: Ai decays superexponentially past the peak of the integrand near y = a²
    let mut hi = (a * a).max(1.0);
    while ai(hi) * (a * hi).exp() >= threshold {
        hi += 0.5;
    }
    let rule = QuadratureRule::graded(lo, hi, PANEL_ORDER, |y| {
        if y < -1.0 {
            (4.0 / (-y).sqrt()).min(1.0)
        } else {
            1.0
        }
    })?;
    let integral = rule.integrate(|y| ai(y) * (a * y).exp());
    Ok((integral - exact).abs())
}

/// The left side 2^{2/3} ∫ (2π)^{-1} e^{2iqu} Ai(2^{2/3}(q²+x)) dq of the product identity.
pub fn airy_product_integral(x: f64, u: f64) -> Result<f64> {
    require(x.is_finite() && u.is_finite(), || format!("non-finite arguments ({x}, {u})"))?;
    let c = 2f64.powf(2.0 / 3.0);
    let mut q_max = 1.0;
    while ai(c * (q_max * q_max + x)).abs() >= CUT || q_max * q_max + x < 0.0 {
        q_max += 0.25;
    }
    let rule = QuadratureRule::graded(0.0, q_max, PANEL_ORDER, |_| 0.25)?;
    // the imaginary part is odd in q and integrates to zero; fold the even real part
    let half = rule.integrate(|q| (2.0 * q * u).cos() * ai(c * (q * q + x)));
    Ok(c * 2.0 * half / (2.0 * PI))
}

/// |left side − Ai(x+u)Ai(x−u)|.
pub fn airy_product_identity_residual(x: f64, u: f64) -> Result<f64> {
    let lhs = airy_product_integral(x, u)?;
    Ok((lhs - ai(x + u) * ai(x - u)).abs())
}
