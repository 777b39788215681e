use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{require, Result};

/// Nodes and positive weights of an interpolatory rule on `interval`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub interval: (f64, f64),
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Concatenation of `order`-point Gauss-Legendre rules on consecutive panels.
    pub fn composite(breakpoints: &[f64], order: usize) -> Result<QuadratureRule> {
        require(breakpoints.len() >= 2, || "composite rule needs at least one panel".into())?;
        let mut nodes = Vec::with_capacity(order * (breakpoints.len() - 1));
        let mut weights = Vec::with_capacity(nodes.capacity());
        for pair in breakpoints.windows(2) {
            let panel = gauss_legendre(order, pair[0], pair[1])?;
            nodes.extend(panel.nodes);
            weights.extend(panel.weights);
        }
        Ok(QuadratureRule {
            nodes,
            weights,
            interval: (breakpoints[0], breakpoints[breakpoints.len() - 1]),
        })
    }

    /// Composite rule whose panel widths never exceed `width(u)` at the panel start.
    pub fn graded(a: f64, b: f64, order: usize, width: impl Fn(f64) -> f64) -> Result<QuadratureRule> {
        require(a < b, || format!("graded rule needs a < b, got [{a}, {b}]"))?;
        let mut breaks = vec![a];
        let mut u = a;
        while u < b {
            let h = width(u).max(1e-6);
            // look ahead so a panel is never wider than the local width at its far end either
            let h = h.min(width((u + h).min(b)).max(1e-6));
            u = if u + h >= b - 1e-12 { b } else { u + h };
            breaks.push(u);
        }
        Self::composite(&breaks, order)
    }
}

type Canonical = Arc<(Vec<f64>, Vec<f64>)>;

fn memo() -> &'static Mutex<HashMap<usize, Canonical>> {
    static TABLE: OnceLock<Mutex<HashMap<usize, Canonical>>> = OnceLock::new();
    TABLE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Legendre P_n(x) and P_n'(x) by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

fn canonical(n: usize) -> Canonical {
    if let Some(rule) = memo().lock().expect("quadrature memo poisoned").get(&n) {
        return rule.clone();
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // ascending order: the largest root comes last
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    let rule = Arc::new((nodes, weights));
    memo()
        .lock()
        .expect("quadrature memo poisoned")
        .insert(n, rule.clone());
    rule
}

/// n-point Gauss-Legendre rule on [a, b]; exact for polynomials of degree ≤ 2n-1.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Result<QuadratureRule> {
    require(n >= 1, || "Gauss-Legendre order must be at least 1".into())?;
    require(a.is_finite() && b.is_finite() && a < b, || {
        format!("Gauss-Legendre interval must satisfy a < b, got [{a}, {b}]")
    })?;
    let base = canonical(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    Ok(QuadratureRule {
        nodes: base.0.iter().map(|&x| mid + half * x).collect(),
        weights: base.1.iter().map(|&w| half * w).collect(),
        interval: (a, b),
    })
}
