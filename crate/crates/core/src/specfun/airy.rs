//! Airy function Ai and its derivative on the real line.
//!
//! |x| ≥ 12: asymptotic expansions summed to their smallest term (error below
//! e^{-2ζ} with ζ = (2/3)|x|^{3/2} ≥ 27).
//! |x| < 12: local Taylor expansion of the Airy ODE about the nearest anchor of a
//! table spaced 1/8 apart. Anchors on the negative side are obtained by
//! integrating forward from the exact values at the origin; on the positive side
//! by integrating backward from x = 12, the direction in which the recessive
//! solution is stable.

use std::f64::consts::{FRAC_PI_4, PI};
use std::sync::OnceLock;

use crate::error::{KpzError, Result};

/// Ai(0) = 3^{-2/3} / Γ(2/3).
pub const AI0: f64 = 0.355_028_053_887_817_239_26;
/// Ai'(0) = -3^{-1/3} / Γ(1/3).
pub const AIP0: f64 = -0.258_819_403_792_806_798_41;

const SEAM: f64 = 12.0;
const STEP: f64 = 0.125;
const ANCHORS_PER_SIDE: usize = 96; // SEAM / STEP

/// Describes how `airy_ai` is evaluated; kept for provenance in reports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AiryEvaluator {
    pub asymptotic_seam: f64,
    pub anchor_spacing: f64,
    pub target_relative_error: f64,
}

impl Default for AiryEvaluator {
    fn default() -> Self {
        Self {
            asymptotic_seam: SEAM,
            anchor_spacing: STEP,
            target_relative_error: 1e-12,
        }
    }
}

/// Coefficients u_k of the Airy asymptotic series, up to the point where they stop being useful.
fn u_coefficients() -> &'static [f64] {
    static U: OnceLock<Vec<f64>> = OnceLock::new();
    U.get_or_init(|| {
        let mut u = vec![1.0];
        for k in 1..40 {
            let kf = k as f64;
            let prev = u[k - 1];
            u.push(prev * (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0) / ((2.0 * kf - 1.0) * 216.0 * kf));
        }
        u
    })
}

fn v_coefficient(k: usize) -> f64 {
    let u = u_coefficients()[k];
    if k == 0 {
        1.0
    } else {
        let kf = k as f64;
        -(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * u
    }
}

/// Σ_k (-1)^k c_k / ζ^k stopped at the smallest term.
fn alternating_series(zeta: f64, coef: impl Fn(usize) -> f64) -> f64 {
    let mut sum = 0.0;
    let mut pow = 1.0;
    let mut last = f64::INFINITY;
    for k in 0..u_coefficients().len() {
        let term = coef(k) * pow;
        if term.abs() > last {
            break;
        }
        sum += if k % 2 == 0 { term } else { -term };
        last = term.abs();
        if last < 1e-18 * sum.abs() {
            break;
        }
        pow /= zeta;
    }
    sum
}

/// Oscillatory-side sums P(ζ) = Σ(-1)^k c_{2k} ζ^{-2k} and Q(ζ) = Σ(-1)^k c_{2k+1} ζ^{-2k-1}.
fn oscillatory_series(zeta: f64, coef: impl Fn(usize) -> f64) -> (f64, f64) {
    let (mut even, mut odd) = (0.0, 0.0);
    let mut pow = 1.0;
    let mut last = f64::INFINITY;
    for k in 0..u_coefficients().len() {
        let term = coef(k) * pow;
        if term.abs() > last {
            break;
        }
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            even += sign * term;
        } else {
            odd += sign * term;
        }
        last = term.abs();
        if last < 1e-18 {
            break;
        }
        pow /= zeta;
    }
    (even, odd)
}

fn asymptotic(x: f64) -> (f64, f64) {
    let u = u_coefficients();
    if x > 0.0 {
        let zeta = 2.0 / 3.0 * x * x.sqrt();
        let q = x.powf(0.25);
        let e = (-zeta).exp() / (2.0 * PI.sqrt());
        let ai = e / q * alternating_series(zeta, |k| u[k]);
        let aip = -e * q * alternating_series(zeta, v_coefficient);
        (ai, aip)
    } else {
        let z = -x;
        let zeta = 2.0 / 3.0 * z * z.sqrt();
        let q = z.powf(0.25);
        let (p_u, q_u) = oscillatory_series(zeta, |k| u[k]);
        let (p_v, q_v) = oscillatory_series(zeta, v_coefficient);
        let (s, c) = (zeta - FRAC_PI_4).sin_cos();
        let ai = (c * p_u + s * q_u) / (PI.sqrt() * q);
        let aip = q * (s * p_v - c * q_v) / PI.sqrt();
        (ai, aip)
    }
}

/// Taylor step of y'' = x y from (x0, y, y') by displacement h.
#[inline]
fn taylor(x0: f64, y: f64, dy: f64, h: f64) -> (f64, f64) {
    // a_{k+2} = (x0 a_k + a_{k-1}) / ((k+1)(k+2))
    let (mut am1, mut a0, mut a1) = (0.0, y, dy);
    let mut hp = 1.0; // h^k
    let mut val = 0.0;
    let mut der = 0.0;
    let scale = y.abs() + dy.abs() * h.abs() + 1e-300;
    for k in 0..60 {
        let term = a0 * hp;
        val += term;
        if k > 0 {
            der += k as f64 * a0 * hp / h;
        }
        let a2 = (x0 * a0 + am1) / ((k as f64 + 1.0) * (k as f64 + 2.0));
        am1 = a0;
        a0 = a1;
        a1 = a2;
        hp *= h;
        if k > 4 && (a0 * hp).abs() < 1e-18 * scale && (a1 * hp * h).abs() < 1e-18 * scale {
            break;
        }
    }
    if h == 0.0 {
        der = dy;
    }
    (val, der)
}

struct AnchorTable {
    values: Vec<(f64, f64)>, // index i ↦ x = -SEAM + i*STEP
}

fn anchors() -> &'static AnchorTable {
    static TABLE: OnceLock<AnchorTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = 2 * ANCHORS_PER_SIDE + 1;
        let mut values = vec![(0.0, 0.0); n];
        let mid = ANCHORS_PER_SIDE;
        values[mid] = (AI0, AIP0);
        // negative side: forward from the origin, substepped for accuracy
        let sub = 4;
        let h = STEP / sub as f64;
        let mut state = (AI0, AIP0);
        for i in 1..=ANCHORS_PER_SIDE {
            for j in 0..sub {
                let x0 = -((i - 1) as f64) * STEP - j as f64 * h;
                state = taylor(x0, state.0, state.1, -h);
            }
            values[mid - i] = state;
        }
        // positive side: backward from the seam
        let mut state = asymptotic(SEAM);
        values[n - 1] = state;
        for i in (1..ANCHORS_PER_SIDE).rev() {
            for j in 0..sub {
                let x0 = (i + 1) as f64 * STEP - j as f64 * h;
                state = taylor(x0, state.0, state.1, -h);
            }
            values[mid + i] = state;
        }
        AnchorTable { values }
    })
}

/// (Ai(x), Ai'(x)) without input validation; NaN in, NaN out.
#[inline]
pub fn airy_pair(x: f64) -> (f64, f64) {
    if !x.is_finite() {
        return (f64::NAN, f64::NAN);
    }
    if x.abs() >= SEAM {
        return asymptotic(x);
    }
    let idx = ((x + SEAM) / STEP).round() as usize;
    let x0 = -SEAM + idx as f64 * STEP;
    let (y, dy) = anchors().values[idx];
    taylor(x0, y, dy, x - x0)
}

/// Ai(x) without input validation, for inner loops.
#[inline]
pub fn ai(x: f64) -> f64 {
    if x > 105.0 {
        return 0.0; // below the smallest positive double
    }
    airy_pair(x).0
}

pub fn airy_ai(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(KpzError::NonFinite(format!("Airy argument {x}")));
    }
    Ok(ai(x))
}

pub fn airy_ai_prime(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(KpzError::NonFinite(format!("Airy argument {x}")));
    }
    if x > 105.0 {
        return Ok(0.0);
    }
    Ok(airy_pair(x).1)
}
