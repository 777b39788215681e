//! Empirical distributions and simulated-vs-exact comparison reports.

use serde::{Deserialize, Serialize};

use crate::distributions::crossover::{crossover_generating, CrossoverParams};
use crate::distributions::DistributionTable;
use crate::error::{require, KpzError, Result};

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub estimate: f64,
    pub se: f64,
    pub n_samples: usize,
}

impl Estimate {
    pub fn from_samples(values: &[f64]) -> Result<Self> {
        require(values.len() >= 2, || "an estimate needs at least two samples".into())?;
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Ok(Self { estimate: mean, se: (var / n).sqrt(), n_samples: values.len() })
    }

    /// |estimate − reference| in units of the standard error.
    pub fn z_score(&self, reference: f64) -> f64 {
        let d = (self.estimate - reference).abs();
        if self.se > 0.0 { d / self.se } else if d == 0.0 { 0.0 } else { f64::INFINITY }
    }
}

/// Streaming mean/variance accumulator (Chan et al. merge), so that ensemble
/// reductions do not depend on the order in which replicas finish.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub n: usize,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    pub fn from_slice(values: &[f64]) -> Self {
        let mut m = Self::default();
        values.iter().for_each(|&x| m.push(x));
        m
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(self, other: Self) -> Self {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        Self {
            n,
            mean: self.mean + d * other.n as f64 / n as f64,
            m2: self.m2 + other.m2 + d * d * (self.n as f64 * other.n as f64) / n as f64,
        }
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 { 0.0 } else { self.m2 / (self.n - 1) as f64 }
    }

    pub fn estimate(&self) -> Estimate {
        Estimate { estimate: self.mean, se: (self.variance() / self.n as f64).sqrt(), n_samples: self.n }
    }
}

/// Sorted Monte Carlo samples with provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDistribution {
    pub samples: Vec<f64>,
    pub seed: Option<u64>,
    pub config_hash: Option<String>,
}

pub fn ecdf(samples: &[f64]) -> Result<EmpiricalDistribution> {
    require(samples.len() >= 2, || "an empirical distribution needs at least two samples".into())?;
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(KpzError::NonFinite("sample".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(EmpiricalDistribution { samples: sorted, seed: None, config_hash: None })
}

impl EmpiricalDistribution {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Right-continuous ECDF: fraction of samples ≤ x.
    pub fn eval(&self, x: f64) -> f64 {
        self.samples.partition_point(|&v| v <= x) as f64 / self.len() as f64
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.len() as f64
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.samples.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (self.len() - 1) as f64
    }

    /// Standard errors of the sample mean and sample variance.
    pub fn moment_errors(&self) -> (f64, f64) {
        let n = self.len() as f64;
        let m = self.mean();
        let var = self.variance();
        let m4 = self.samples.iter().map(|v| (v - m).powi(4)).sum::<f64>() / n;
        ((var / n).sqrt(), ((m4 - var * var).max(0.0) / n).sqrt())
    }

    pub fn with_provenance(mut self, seed: u64, config_hash: impl Into<String>) -> Self {
        self.seed = Some(seed);
        self.config_hash = Some(config_hash.into());
        self
    }
}

/// Sup-distance between the ECDF and the monotone-cubic interpolant of the
/// table. Samples beyond the table are allowed only where the table has
/// already reached its limit (0 or 1 within 1e−4).
pub fn ks_distance(emp: &EmpiricalDistribution, table: &DistributionTable) -> Result<f64> {
    let (lo, hi) = (table.s[0], *table.s.last().unwrap());
    let (f_lo, f_hi) = (table.cdf[0], *table.cdf.last().unwrap());
    if (emp.samples[0] < lo && f_lo > 1e-4) || (*emp.samples.last().unwrap() > hi && f_hi < 1.0 - 1e-4) {
        return Err(KpzError::RangeMismatch(format!(
            "samples span [{}, {}] but the table covers [{lo}, {hi}]",
            emp.samples[0],
            emp.samples.last().unwrap()
        )));
    }
    let f = table.interpolator();
    Ok(ks_against(emp, |x| f.eval(x)))
}

/// Sup-distance between the ECDF and an arbitrary continuous CDF.
pub fn ks_against(emp: &EmpiricalDistribution, cdf: impl Fn(f64) -> f64) -> f64 {
    let n = emp.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < emp.len() {
        // treat ties as one jump
        let x = emp.samples[i];
        let mut j = i;
        while j < emp.len() && emp.samples[j] == x {
            j += 1;
        }
        let fx = cdf(x);
        d = d.max((fx - i as f64 / n).abs()).max((j as f64 / n - fx).abs());
        i = j;
    }
    d.min(1.0)
}

/// Two-sample Kolmogorov-Smirnov distance.
pub fn ks_two_sample(a: &EmpiricalDistribution, b: &EmpiricalDistribution) -> f64 {
    let mut d: f64 = 0.0;
    for &x in a.samples.iter().chain(&b.samples) {
        d = d.max((a.eval(x) - b.eval(x)).abs());
    }
    d
}

/// Asymptotic one-sample Kolmogorov critical value at level alpha.
pub fn kolmogorov_critical(n: usize, alpha: f64) -> f64 {
    (-(0.5 * alpha).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointComparison {
    pub s: f64,
    pub estimate: f64,
    pub se: f64,
    pub reference: f64,
    pub z: f64,
}

/// Simulated-vs-exact comparison with explicit tolerances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub ks: Option<f64>,
    pub ks_tolerance: Option<f64>,
    pub mean_difference: Option<Estimate>,
    pub variance_difference: Option<Estimate>,
    pub points: Vec<PointComparison>,
    /// Maximal allowed |z| per point.
    pub z_tolerance: f64,
    pub seed: Option<u64>,
    pub config_hash: Option<String>,
    pub pass: bool,
}

impl ComparisonReport {
    pub fn max_z(&self) -> f64 {
        self.points.iter().map(|p| p.z).fold(0.0, f64::max)
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        if let Some(ks) = self.ks {
            out += &format!("KS distance {ks:.5} (tolerance {:?})\n", self.ks_tolerance);
        }
        if let Some(m) = self.mean_difference {
            out += &format!("mean difference {:.5} ± {:.5}\n", m.estimate, m.se);
        }
        if let Some(v) = self.variance_difference {
            out += &format!("variance difference {:.5} ± {:.5}\n", v.estimate, v.se);
        }
        if !self.points.is_empty() {
            out += &format!("{} points, max |z| = {:.3} (tolerance {})\n", self.points.len(), self.max_z(), self.z_tolerance);
        }
        out += if self.pass { "PASS" } else { "FAIL" };
        out
    }
}

/// KS and moment comparison of samples against a table.
pub fn compare_with_table(emp: &EmpiricalDistribution, table: &DistributionTable, ks_tolerance: f64) -> Result<ComparisonReport> {
    let ks = ks_distance(emp, table)?;
    let (mean_t, var_t) = table.mean_variance();
    let (se_m, se_v) = emp.moment_errors();
    Ok(ComparisonReport {
        ks: Some(ks),
        ks_tolerance: Some(ks_tolerance),
        mean_difference: Some(Estimate { estimate: emp.mean() - mean_t, se: se_m, n_samples: emp.len() }),
        variance_difference: Some(Estimate { estimate: emp.variance() - var_t, se: se_v, n_samples: emp.len() }),
        points: Vec::new(),
        z_tolerance: f64::INFINITY,
        seed: emp.seed,
        config_hash: emp.config_hash.clone(),
        pass: ks < ks_tolerance,
    })
}

/// Per-s Monte Carlo means of exp(−exp(η − γ_t s)) against a reference function.
pub fn gumbel_convolve_compare_with(
    eta: &[f64],
    params: &CrossoverParams,
    s_grid: &[f64],
    z_tolerance: f64,
    reference: impl Fn(f64) -> Result<f64>,
) -> Result<ComparisonReport> {
    require(eta.len() >= 2, || "need at least two η samples".into())?;
    let mut points = Vec::with_capacity(s_grid.len());
    for &s in s_grid {
        let values: Vec<f64> = eta.iter().map(|&e| (-(e - params.gamma_t * s).exp()).exp()).collect();
        let est = Estimate::from_samples(&values)?;
        let r = reference(s)?;
        points.push(PointComparison { s, estimate: est.estimate, se: est.se, reference: r, z: est.z_score(r) });
    }
    let pass = points.iter().all(|p| p.z <= z_tolerance);
    Ok(ComparisonReport {
        ks: None,
        ks_tolerance: None,
        mean_difference: None,
        variance_difference: None,
        points,
        z_tolerance,
        seed: None,
        config_hash: None,
        pass,
    })
}

/// Gumbel-smoothed comparison against the crossover determinant, 3 SE per point.
pub fn gumbel_convolve_compare(eta: &[f64], params: &CrossoverParams, s_grid: &[f64]) -> Result<ComparisonReport> {
    gumbel_convolve_compare_with(eta, params, s_grid, 3.0, |s| crossover_generating(params, s))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub slope_se: f64,
    pub intercept: f64,
}

/// Ordinary least squares y = a + b x with the standard error of b.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LineFit> {
    require(x.len() == y.len() && x.len() >= 2, || "fit needs matching x and y with at least two points".into())?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    require(sxx > 0.0, || "fit needs at least two distinct x values".into())?;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_se = if x.len() > 2 {
        let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LineFit { slope, slope_se, intercept })
}

/// Log-log least-squares slope with its standard error.
pub fn exponent_fit(x: &[f64], y: &[f64]) -> Result<LineFit> {
    require(x.len() >= 4, || format!("exponent fit needs at least 4 points, got {}", x.len()))?;
    if x.iter().chain(y).any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(KpzError::InvalidArgument("exponent fit needs positive finite data".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, &ly)
}
