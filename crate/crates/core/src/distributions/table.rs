use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{require, KpzError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TableProvenance {
    pub kernel: String,
    pub n: usize,
    pub length: f64,
    pub t: Option<f64>,
    /// Free-form numeric metadata (regularization parameters, residuals, ...).
    pub notes: Vec<(String, f64)>,
}

/// A tabulated distribution function, optionally with its density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionTable {
    pub s: Vec<f64>,
    pub cdf: Vec<f64>,
    pub density: Option<Vec<f64>>,
    pub provenance: TableProvenance,
}

impl DistributionTable {
    pub fn new(s: Vec<f64>, cdf: Vec<f64>, density: Option<Vec<f64>>, provenance: TableProvenance) -> Result<Self> {
        require(s.len() >= 2 && s.len() == cdf.len(), || "table needs at least two (s, F) pairs".into())?;
        require(s.windows(2).all(|w| w[0] < w[1]), || "s-grid must be strictly increasing".into())?;
        if let Some(d) = &density {
            require(d.len() == s.len(), || "density length must match the grid".into())?;
        }
        Ok(Self { s, cdf, density, provenance })
    }

    /// Checks the CDF invariants: monotone, range limits, density sign and mass.
    pub fn validate(&self, limit_tolerance: f64) -> Result<()> {
        if let Some(i) = self.cdf.windows(2).position(|w| w[1] < w[0] - 1e-10) {
            return Err(KpzError::InvalidArgument(format!("CDF decreases at s = {}", self.s[i + 1])));
        }
        let (first, last) = (self.cdf[0], *self.cdf.last().unwrap());
        if first.abs() > limit_tolerance || (last - 1.0).abs() > limit_tolerance {
            return Err(KpzError::RangeMismatch(format!("CDF end values {first:e}, {last} miss 0/1")));
        }
        if let Some(d) = &self.density {
            if d.iter().any(|&v| v < 0.0) {
                return Err(KpzError::InvalidArgument("negative density value".into()));
            }
            let mass = trapezoid(&self.s, d);
            if (mass - 1.0).abs() > 1e-3 {
                return Err(KpzError::InvalidArgument(format!("density integrates to {mass}")));
            }
        }
        Ok(())
    }

    /// Fritsch-Carlson monotone slopes of the CDF at the grid points.
    fn slopes(&self) -> Vec<f64> {
        let n = self.s.len();
        let h: Vec<f64> = self.s.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (self.cdf[i + 1] - self.cdf[i]) / h[i]).collect();
        let mut m = vec![0.0; n];
        m[0] = delta[0];
        m[n - 1] = delta[n - 2];
        for i in 1..n - 1 {
            if delta[i - 1] * delta[i] <= 0.0 {
                m[i] = 0.0;
            } else {
                let (w1, w2) = (2.0 * h[i] + h[i - 1], h[i] + 2.0 * h[i - 1]);
                m[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        m
    }

    /// Monotone cubic (PCHIP) interpolation; clamps outside the grid.
    pub fn interpolate(&self, x: f64) -> f64 {
        self.interpolator().eval(x)
    }

    pub fn interpolator(&self) -> MonotoneCubic<'_> {
        MonotoneCubic { table: self, slopes: self.slopes() }
    }

    /// ∫ s dF and ∫ s² dF − mean², from the CDF on the grid by the trapezoid rule in s.
    pub fn mean_variance(&self) -> (f64, f64) {
        let a = self.s[0];
        let one_minus: Vec<f64> = self.cdf.iter().map(|f| 1.0 - f).collect();
        // E X = a + ∫_a^b (1 − F) ds ;  E X² = a² + ∫_a^b 2s (1 − F) ds   (F(a) ≈ 0, F(b) ≈ 1)
        let mean = a + trapezoid(&self.s, &one_minus);
        let weighted: Vec<f64> = self.s.iter().zip(&one_minus).map(|(s, g)| 2.0 * s * g).collect();
        let second = a * a + trapezoid(&self.s, &weighted);
        (mean, second - mean * mean)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,F,density\n");
        for i in 0..self.s.len() {
            let d = self.density.as_ref().map(|d| d[i]);
            match d {
                Some(v) => writeln!(out, "{:.10},{:.15e},{:.15e}", self.s[i], self.cdf[i], v).unwrap(),
                None => writeln!(out, "{:.10},{:.15e},", self.s[i], self.cdf[i]).unwrap(),
            }
        }
        out
    }
}

pub struct MonotoneCubic<'a> {
    table: &'a DistributionTable,
    slopes: Vec<f64>,
}

impl MonotoneCubic<'_> {
    pub fn eval(&self, x: f64) -> f64 {
        let s = &self.table.s;
        let f = &self.table.cdf;
        if x <= s[0] {
            return f[0];
        }
        if x >= s[s.len() - 1] {
            return f[s.len() - 1];
        }
        let i = s.partition_point(|&v| v <= x) - 1;
        let h = s[i + 1] - s[i];
        let t = (x - s[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * f[i] + h10 * h * self.slopes[i] + h01 * f[i + 1] + h11 * h * self.slopes[i + 1]
    }

    /// Smallest x with F(x) ≥ p, by bisection on the interpolant.
    pub fn quantile(&self, p: f64) -> f64 {
        let s = &self.table.s;
        let (mut lo, mut hi) = (s[0], s[s.len() - 1]);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if self.eval(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2).zip(y.windows(2)).map(|(xw, yw)| 0.5 * (xw[1] - xw[0]) * (yw[0] + yw[1])).sum()
}

/// Centered differences in the interior, one-sided at the ends.
pub fn differentiate(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            let (a, b) = if i == 0 { (0, 1) } else if i == n - 1 { (n - 2, n - 1) } else { (i - 1, i + 1) };
            (y[b] - y[a]) / (x[b] - x[a])
        })
        .collect()
}
