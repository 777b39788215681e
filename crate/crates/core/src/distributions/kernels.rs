//! Airy-type kernels of the form ∫ ω(u) Ai(x+u) Ai(y+u) du, assembled through their factorization.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::fredholm::Kernel;
use crate::specfun::{ai, QuadratureRule};

const PANEL_ORDER: usize = 16;
const CUT: f64 = 1e-16;

/// Weight ω(u) of a factored Airy kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AiryWeight {
    /// 1 on [0, ∞): the Airy kernel.
    Step,
    /// [1 + e^{−γ(u−s)}]^{−1} on ℝ: the finite-time smoothed kernel.
    Fermi { gamma: f64, s: f64 },
    /// e^{−w u} on [0, ∞): e^{wH} K_Ai.
    DecayingPositive { w: f64 },
    /// e^{w u} on [0, ∞).
    GrowingPositive { w: f64 },
    /// e^{w u} on (−∞, 0]: e^{−wH}(1 − K_Ai).
    GrowingNegative { w: f64 },
}

impl AiryWeight {
    #[inline]
    pub fn value(&self, u: f64) -> f64 {
        match *self {
            AiryWeight::Step => 1.0,
            AiryWeight::Fermi { gamma, s } => {
                let z = -gamma * (u - s);
                if z > 700.0 {
                    0.0
                } else {
                    1.0 / (1.0 + z.exp())
                }
            }
            AiryWeight::DecayingPositive { w } => (-w * u).exp(),
            AiryWeight::GrowingPositive { w } | AiryWeight::GrowingNegative { w } => (w * u).exp(),
        }
    }

    /// Finite endpoints of the support, `None` for an infinite side.
    fn support(&self) -> (Option<f64>, Option<f64>) {
        match self {
            AiryWeight::Fermi { .. } => (None, None),
            AiryWeight::GrowingNegative { .. } => (None, Some(0.0)),
            _ => (Some(0.0), None),
        }
    }

    /// Length scale on which ω varies near `center`, used to refine panels.
    fn feature(&self) -> Option<(f64, f64)> {
        match *self {
            AiryWeight::Fermi { gamma, s } => Some((s, 1.0 / gamma)),
            AiryWeight::DecayingPositive { w } | AiryWeight::GrowingPositive { w } | AiryWeight::GrowingNegative { w } => {
                Some((0.0, 2.0 / w.max(1e-3)))
            }
            AiryWeight::Step => None,
        }
    }
}

/// Upper bound on |Ai(z)|² used for truncation decisions.
fn ai_square_bound(z: f64) -> f64 {
    if z > 0.0 {
        let a = ai(z);
        a * a
    } else {
        1.0 / (PI * (-z).sqrt().max(0.2))
    }
}

/// The u-rule serving every argument x ≥ x_min.
pub fn airy_weight_rule(weight: &AiryWeight, x_min: f64) -> QuadratureRule {
    let (lo, hi) = weight.support();
    let upper = hi.unwrap_or_else(|| {
        // start where ω is no longer small, since ω·Ai² need not decrease before that
        let start = weight.feature().map_or(0.0, |(c, _)| c);
        let mut u = lo.unwrap_or(0.0).max(-x_min).max(start);
        while weight.value(u) * ai_square_bound(x_min + u) >= CUT {
            u += 0.25;
        }
        u
    });
    let lower = lo.unwrap_or_else(|| {
        let mut u = upper.min(-1.0);
        let mut step = 0.5;
        while weight.value(u) * ai_square_bound(x_min + u) >= CUT {
            u -= step;
            step *= 1.1;
        }
        u
    });
    let feature = weight.feature();
    let width = move |u: f64| {
        let z = x_min + u;
        let mut h: f64 = 1.0;
        if z < -1.0 {
            h = h.min(4.0 / (-z).sqrt());
        }
        if let Some((c, scale)) = feature {
            h = h.min((2.0 * scale).max(0.5 * (u - c).abs()));
        }
        h
    };
    if upper <= lower {
        // weight negligible everywhere on this argument range
        return QuadratureRule { nodes: vec![], weights: vec![], interval: (lower, lower) };
    }
    let mut rule = QuadratureRule::graded(lower, upper, PANEL_ORDER, width).expect("valid panel bounds");
    for (w, &u) in rule.weights.iter_mut().zip(&rule.nodes) {
        *w *= weight.value(u);
    }
    rule
}

/// K(x, y) = ∫ ω(u) Ai(x+u) Ai(y+u) du for arguments x, y ≥ x_min.
#[derive(Debug, Clone)]
pub struct FactoredAiryKernel {
    pub weight: AiryWeight,
    pub x_min: f64,
    rule: QuadratureRule,
}

impl FactoredAiryKernel {
    pub fn new(weight: AiryWeight, x_min: f64) -> Self {
        let rule = airy_weight_rule(&weight, x_min);
        Self { weight, x_min, rule }
    }

    pub fn airy() -> Self {
        Self::new(AiryWeight::Step, -10.0)
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    /// A_ik = Ai(x_i + u_k) √|W_k|.
    fn factor(&self, xs: &[f64]) -> DMatrix<f64> {
        let m = self.rule.len();
        let mut a = DMatrix::zeros(xs.len(), m);
        for k in 0..m {
            let u = self.rule.nodes[k];
            let sw = self.rule.weights[k].sqrt();
            for (i, &x) in xs.iter().enumerate() {
                a[(i, k)] = ai(x + u) * sw;
            }
        }
        a
    }

    fn serves(&self, xs: &[f64]) -> bool {
        xs.iter().all(|&x| x >= self.x_min - 1e-12)
    }
}

impl Kernel for FactoredAiryKernel {
    fn eval(&self, x: f64, y: f64) -> f64 {
        if self.serves(&[x, y]) {
            self.rule.integrate(|u| ai(x + u) * ai(y + u))
        } else {
            airy_weight_rule(&self.weight, x.min(y)).integrate(|u| ai(x + u) * ai(y + u))
        }
    }

    fn block(&self, xs: &[f64], ys: &[f64]) -> DMatrix<f64> {
        if !(self.serves(xs) && self.serves(ys)) {
            let lo = xs.iter().chain(ys).cloned().fold(f64::INFINITY, f64::min);
            return FactoredAiryKernel::new(self.weight, lo).block(xs, ys);
        }
        let ax = self.factor(xs);
        if std::ptr::eq(xs, ys) || xs == ys {
            &ax * ax.transpose()
        } else {
            &ax * self.factor(ys).transpose()
        }
    }
}

/// K_Ai(x, y) = ∫₀^∞ Ai(x+u) Ai(y+u) du.
pub fn airy_kernel(x: f64, y: f64) -> f64 {
    let x_min = x.min(y);
    if !x_min.is_finite() || !x.max(y).is_finite() {
        return f64::NAN;
    }
    airy_weight_rule(&AiryWeight::Step, x_min).integrate(|u| ai(x + u) * ai(y + u))
}

/// Heat kernel of e^{−wH} for the Airy operator H = −∂² + x:
/// (4πw)^{−1/2} exp(−(x−y)²/(4w) − w(x+y)/2 + w³/12).
pub fn airy_heat_kernel(w: f64, x: f64, y: f64) -> f64 {
    let d = x - y;
    (-(d * d) / (4.0 * w) - 0.5 * w * (x + y) + w * w * w / 12.0).exp() / (4.0 * PI * w).sqrt()
}

/// −e^{−wH}(1 − K_Ai) restricted to arguments ≥ x_min, the upper-right block of the two-time kernel.
#[derive(Debug, Clone)]
pub struct BackwardComplementKernel {
    pub w: f64,
    direct: Option<FactoredAiryKernel>,
    subtracted: Option<FactoredAiryKernel>,
}

impl BackwardComplementKernel {
    /// For w ≥ 1/2 the negative-half-line integral converges quickly; for smaller w
    /// the heat kernel minus the positive-half-line part is used instead.
    pub fn new(w: f64, x_min: f64) -> Self {
        if w >= 0.5 {
            Self { w, direct: Some(FactoredAiryKernel::new(AiryWeight::GrowingNegative { w }, x_min)), subtracted: None }
        } else {
            Self { w, direct: None, subtracted: Some(FactoredAiryKernel::new(AiryWeight::GrowingPositive { w }, x_min)) }
        }
    }
}

impl Kernel for BackwardComplementKernel {
    fn eval(&self, x: f64, y: f64) -> f64 {
        match (&self.direct, &self.subtracted) {
            (Some(k), _) => -k.eval(x, y),
            (None, Some(k)) => -(airy_heat_kernel(self.w, x, y) - k.eval(x, y)),
            _ => unreachable!(),
        }
    }

    fn block(&self, xs: &[f64], ys: &[f64]) -> DMatrix<f64> {
        match (&self.direct, &self.subtracted) {
            (Some(k), _) => -k.block(xs, ys),
            (None, Some(k)) => {
                let heat = DMatrix::from_fn(xs.len(), ys.len(), |i, j| airy_heat_kernel(self.w, xs[i], ys[j]));
                k.block(xs, ys) - heat
            }
            _ => unreachable!(),
        }
    }
}

/// B_s(x, y) = Ai(x + y + s).
#[derive(Debug, Clone, Copy)]
pub struct GoeKernel {
    pub s: f64,
}

impl Kernel for GoeKernel {
    fn eval(&self, x: f64, y: f64) -> f64 {
        ai(x + y + self.s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::airy_pair;

    /// Closed form (Ai(x)Ai'(y) − Ai'(x)Ai(y))/(x − y), diagonal Ai'(x)² − x Ai(x)².
    fn christoffel_darboux(x: f64, y: f64) -> f64 {
        let (ax, dx) = airy_pair(x);
        let (ay, dy) = airy_pair(y);
        if (x - y).abs() < 1e-12 {
            dx * dx - x * ax * ax
        } else {
            (ax * dy - dx * ay) / (x - y)
        }
    }

    #[test]
    fn airy_kernel_matches_closed_form() {
        let pts = [-10.0, -6.3, -2.0, -0.4, 0.0, 0.7, 3.1, 8.0, 15.0, 30.0];
        for &x in &pts {
            for &y in &pts {
                let num = airy_kernel(x, y);
                let exact = christoffel_darboux(x, y);
                assert!((num - exact).abs() < 1e-12, "K({x},{y}) = {num} vs {exact}");
            }
        }
    }

    #[test]
    fn airy_kernel_value_at_origin() {
        // K(0,0) = Ai'(0)² = ∫₀^∞ Ai(u)² du
        let k = airy_kernel(0.0, 0.0);
        let direct = QuadratureRule::graded(0.0, 20.0, 16, |_| 0.5).unwrap().integrate(|u| ai(u) * ai(u));
        assert!((k - crate::specfun::airy::AIP0.powi(2)).abs() < 1e-13, "{k}");
        assert!((k - direct).abs() < 1e-14);
    }

    #[test]
    fn factored_block_agrees_with_pointwise() {
        let k = FactoredAiryKernel::new(AiryWeight::Step, -3.0);
        let xs = [-3.0, -1.0, 0.5, 4.0];
        let m = k.block(&xs, &xs);
        for i in 0..4 {
            for j in 0..4 {
                assert!((m[(i, j)] - christoffel_darboux(xs[i], xs[j])).abs() < 1e-12);
                assert!((m[(i, j)] - m[(j, i)]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn heat_kernel_is_full_line_integral() {
        for &w in &[0.6, 1.0, 2.5] {
            for &(x, y) in &[(0.0, 0.0), (-1.5, 0.7), (2.0, 3.0)] {
                let neg = FactoredAiryKernel::new(AiryWeight::GrowingNegative { w }, -2.0).eval(x, y);
                let pos = FactoredAiryKernel::new(AiryWeight::GrowingPositive { w }, -2.0).eval(x, y);
                let heat = airy_heat_kernel(w, x, y);
                assert!((neg + pos - heat).abs() < 1e-11 * heat.max(1.0), "w={w} ({x},{y}): {} vs {heat}", neg + pos);
            }
        }
    }

    #[test]
    fn complement_kernel_routes_agree() {
        // at w = 1/2 both constructions are available; compare them on a small grid
        let w = 0.5;
        let direct = BackwardComplementKernel::new(w, -3.0);
        let sub = BackwardComplementKernel { w, direct: None, subtracted: Some(FactoredAiryKernel::new(AiryWeight::GrowingPositive { w }, -3.0)) };
        let xs = [-3.0, -1.0, 0.0, 2.0, 5.0];
        let a = direct.block(&xs, &xs);
        let b = sub.block(&xs, &xs);
        assert!((a - b).amax() < 1e-11);
    }

    #[test]
    fn fermi_rule_covers_far_shifted_step() {
        // a sharp Fermi factor centred well inside the Airy decay region
        let gamma = 17.0;
        for s in [2.2, 5.0] {
            let k = FactoredAiryKernel::new(AiryWeight::Fermi { gamma, s }, 0.0);
            let fine = crate::specfun::gauss_legendre(400, s - 4.0, s + 12.0).unwrap();
            let exact = fine.integrate(|u| ai(u).powi(2) / (1.0 + (-gamma * (u - s)).exp()));
            let got = k.eval(0.0, 0.0);
            assert!((got - exact).abs() < 1e-12, "s={s}: {got:e} vs {exact:e}");
        }
    }
}
