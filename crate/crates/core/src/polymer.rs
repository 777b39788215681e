//! Directed polymer in a random medium on the (1+1)-dimensional lattice.
//!
//! Z(n+1, M) = e^{βξ(n+1, M)}·½(Z(n, M+1) + Z(n, M−1)), Z(0, M) = δ_{M,0}.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{require, KpzError, Result};
use crate::stats::{exponent_fit, linear_fit, Estimate, Moments};

/// Law of the site potential ξ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Disorder {
    Gaussian { mean: f64, std: f64 },
    /// ±1 with equal probability.
    Bernoulli,
    /// Exponential with the given rate.
    Exponential { rate: f64 },
}

impl Disorder {
    pub fn standard_gaussian() -> Self {
        Disorder::Gaussian { mean: 0.0, std: 1.0 }
    }

    /// Cumulant generating function Λ(β) = log E[e^{βξ}], or `None` where it diverges.
    pub fn log_mgf(&self, beta: f64) -> Option<f64> {
        match *self {
            Disorder::Gaussian { mean, std } => Some(beta * mean + 0.5 * beta * beta * std * std),
            Disorder::Bernoulli => {
                // log cosh β without overflow
                let b = beta.abs();
                Some(b + (-2.0 * b).exp().ln_1p() - std::f64::consts::LN_2)
            }
            Disorder::Exponential { rate } => (beta < rate).then(|| -(1.0 - beta / rate).ln()),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Disorder::Gaussian { mean, std } => {
                require(mean.is_finite() && std.is_finite() && std >= 0.0, || format!("bad Gaussian disorder ({mean}, {std})"))
            }
            Disorder::Bernoulli => Ok(()),
            Disorder::Exponential { rate } => require(rate > 0.0 && rate.is_finite(), || format!("exponential rate must be positive, got {rate}")),
        }
    }

    /// Checks that E[e^{βξ}] is finite.
    pub fn admits(&self, beta: f64) -> Result<()> {
        self.validate()?;
        require(beta.is_finite(), || format!("β must be finite, got {beta}"))?;
        match self.log_mgf(beta) {
            Some(l) if l.is_finite() => Ok(()),
            _ => Err(KpzError::InvalidArgument(format!("E[exp(βξ)] diverges at β = {beta} for {self:?}"))),
        }
    }
}

/// I.i.d. field ξ(i, j), evaluated on demand from a keyed hash of (seed, i, j).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisorderField {
    pub disorder: Disorder,
    pub seed: u64,
    key: u64,
}

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl DisorderField {
    /// Field for one replica; distinct (seed, replica) pairs give independent fields.
    pub fn new(disorder: Disorder, seed: u64, replica: u64) -> Result<Self> {
        disorder.validate()?;
        let key = mix(mix(seed ^ 0x50_4f4c_5944).wrapping_add(replica.wrapping_mul(0x9E37_79B9_7F4A_7C15)));
        Ok(Self { disorder, seed, key })
    }

    #[inline]
    fn bits(&self, i: u64, j: i64, lane: u64) -> u64 {
        let site = (i << 32) ^ (j as u32 as u64);
        mix(mix(self.key ^ site.wrapping_mul(0xD1B5_4A32_D192_ED03)).wrapping_add(lane.wrapping_mul(0x9E37_79B9_7F4A_7C15)))
    }

    #[inline]
    fn unit(&self, i: u64, j: i64, lane: u64) -> f64 {
        crate::rng::open_unit(self.bits(i, j, lane))
    }

    /// ξ(i, j).
    #[inline]
    pub fn value(&self, i: u64, j: i64) -> f64 {
        match self.disorder {
            Disorder::Gaussian { mean, std } => {
                let r = (-2.0 * self.unit(i, j, 0).ln()).sqrt();
                let theta = std::f64::consts::TAU * self.unit(i, j, 1);
                mean + std * r * theta.cos()
            }
            Disorder::Bernoulli => {
                if self.bits(i, j, 0) >> 63 == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
            Disorder::Exponential { rate } => -self.unit(i, j, 0).ln() / rate,
        }
    }
}

/// log Z(n, M) for 0 ≤ n ≤ N and |M| ≤ n; zero weights are stored as −∞.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionLattice {
    pub beta: f64,
    rows: Vec<Vec<f64>>,
}

impl PartitionLattice {
    pub fn depth(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn log_z(&self, n: usize, m: i64) -> f64 {
        match self.rows.get(n) {
            Some(row) if m.unsigned_abs() as usize <= n => row[(m + n as i64) as usize],
            _ => f64::NEG_INFINITY,
        }
    }

    pub fn z(&self, n: usize, m: i64) -> f64 {
        self.log_z(n, m).exp()
    }

    /// Row n as (M, log Z) pairs on the sites reachable by the walk.
    pub fn row(&self, n: usize) -> Vec<(i64, f64)> {
        (-(n as i64)..=n as i64).step_by(2).map(|m| (m, self.log_z(n, m))).collect()
    }

    /// CSV with header "n,M,log_Z" over the reachable sites.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,M,log_Z\n");
        for n in 0..self.rows.len() {
            for (m, v) in self.row(n) {
                out.push_str(&format!("{n},{m},{v:.17e}\n"));
            }
        }
        out
    }
}

#[inline]
fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        hi
    } else {
        hi + (lo - hi).exp().ln_1p()
    }
}

/// Full point-to-point lattice up to depth N, in log space.
pub fn evolve_partition(n_steps: usize, beta: f64, field: &DisorderField) -> Result<PartitionLattice> {
    require(n_steps >= 1, || "N must be at least 1".into())?;
    field.disorder.admits(beta)?;
    let mut rows = Vec::with_capacity(n_steps + 1);
    rows.push(vec![0.0]);
    for n in 0..n_steps {
        let prev: &Vec<f64> = &rows[n];
        let at = |m: i64| -> f64 {
            if m.unsigned_abs() as usize <= n {
                prev[(m + n as i64) as usize]
            } else {
                f64::NEG_INFINITY
            }
        };
        let width = n as i64 + 1;
        let next: Vec<f64> = (-width..=width)
            .map(|m| {
                let s = log_add(at(m + 1), at(m - 1));
                if s == f64::NEG_INFINITY {
                    s
                } else {
                    s - std::f64::consts::LN_2 + beta * field.value(n as u64 + 1, m)
                }
            })
            .collect();
        if let Some(bad) = next.iter().find(|v| v.is_nan() || **v == f64::INFINITY) {
            return Err(KpzError::NonFinite(format!("log Z = {bad} in row {}", n + 1)));
        }
        rows.push(next);
    }
    Ok(PartitionLattice { beta, rows })
}

/// log Z(N, 0) restricted to the backward light cone of (N, 0).
///
/// Rows are carried in linear scale with a running log offset, which is
/// exact up to rounding and much cheaper than a log-sum-exp per site.
pub fn log_partition_endpoint(n_steps: usize, beta: f64, field: &DisorderField) -> Result<f64> {
    require(n_steps >= 2 && n_steps % 2 == 0, || format!("endpoint (N, 0) needs even N ≥ 2, got {n_steps}"))?;
    field.disorder.admits(beta)?;
    let big_n = n_steps as i64;
    // row n holds M = lo, lo+2, ..., with |M| ≤ min(n, N − n)
    let mut row = vec![1.0f64];
    let mut lo = 0i64;
    let mut offset = 0.0f64;
    for n in 1..=big_n {
        let half = n.min(big_n - n);
        let new_lo = -half;
        let len = (half + 1) as usize;
        let mut next = vec![0.0f64; len];
        let mut peak = 0.0f64;
        for (k, slot) in next.iter_mut().enumerate() {
            let m = new_lo + 2 * k as i64;
            let get = |mm: i64| -> f64 {
                let idx = mm - lo;
                if idx >= 0 && idx % 2 == 0 && ((idx / 2) as usize) < row.len() {
                    row[(idx / 2) as usize]
                } else {
                    0.0
                }
            };
            let v = 0.5 * (get(m - 1) + get(m + 1)) * (beta * field.value(n as u64, m)).exp();
            peak = peak.max(v);
            *slot = v;
        }
        if !(peak > 0.0 && peak.is_finite()) {
            return Err(KpzError::NonFinite(format!("row maximum {peak} at n = {n}")));
        }
        let inv = 1.0 / peak;
        next.iter_mut().for_each(|v| *v *= inv);
        offset += peak.ln();
        row = next;
        lo = new_lo;
    }
    Ok(offset + row[0].ln())
}

/// log Z(N, 0) for replicas 0..replicas, in replica order.
pub fn log_partition_samples(n_steps: usize, beta: f64, disorder: Disorder, seed: u64, replicas: usize) -> Result<Vec<f64>> {
    (0..replicas as u64)
        .into_par_iter()
        .map(|r| log_partition_endpoint(n_steps, beta, &DisorderField::new(disorder, seed, r)?))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeEnergyEstimate {
    pub v_inf: f64,
    /// 95% bootstrap interval of the extrapolated value.
    pub ci: (f64, f64),
    /// N^{−1} log Z(N, 0) per ladder rung.
    pub per_n: Vec<(usize, Estimate)>,
    /// Whether the per-N means move monotonically toward the extrapolated value.
    pub monotone: bool,
}

/// v_∞ from N^{−1}E[log Z(N, 0)] extrapolated linearly in 1/N.
pub fn free_energy_estimate(beta: f64, disorder: Disorder, ladder: &[usize], replicas: usize, seed: u64) -> Result<FreeEnergyEstimate> {
    require(ladder.len() >= 2, || "ladder needs at least two depths".into())?;
    require(ladder.windows(2).all(|w| w[0] < w[1]), || "ladder must be increasing".into())?;
    require(replicas >= 10, || format!("at least 10 replicas needed, got {replicas}"))?;
    let samples: Vec<Vec<f64>> = ladder
        .iter()
        .map(|&n| Ok(log_partition_samples(n, beta, disorder, seed, replicas)?.into_iter().map(|v| v / n as f64).collect()))
        .collect::<Result<_>>()?;
    let xs: Vec<f64> = ladder.iter().map(|&n| 1.0 / n as f64).collect();
    let extrapolate = |means: &[f64]| -> Result<f64> { Ok(linear_fit(&xs, means)?.intercept) };
    let means: Vec<f64> = samples.iter().map(|s| s.iter().sum::<f64>() / s.len() as f64).collect();
    let v_inf = extrapolate(&means)?;
    if !v_inf.is_finite() {
        return Err(KpzError::NonConvergence(format!("extrapolated free energy {v_inf}")));
    }

    use rand::Rng;
    let mut rng = crate::rng::stream(seed, 0, crate::rng::StreamPurpose::Bootstrap);
    let mut boot: Vec<f64> = (0..400)
        .map(|_| {
            let m: Vec<f64> = samples
                .iter()
                .map(|s| (0..s.len()).map(|_| s[rng.random_range(0..s.len())]).sum::<f64>() / s.len() as f64)
                .collect();
            extrapolate(&m)
        })
        .collect::<Result<_>>()?;
    boot.sort_by(f64::total_cmp);
    let ci = (boot[10], boot[389]);
    let gaps: Vec<f64> = means.iter().map(|m| (m - v_inf).abs()).collect();
    let monotone = gaps.windows(2).all(|w| w[1] <= w[0]);
    let per_n = ladder.iter().zip(&samples).map(|(&n, s)| Ok((n, Estimate::from_samples(s)?))).collect::<Result<_>>()?;
    Ok(FreeEnergyEstimate { v_inf, ci, per_n, monotone })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluctuationFit {
    pub slope: f64,
    pub slope_se: f64,
    /// (N, Var log Z(N, 0), standard error of the variance).
    pub points: Vec<(usize, f64, f64)>,
}

impl FluctuationFit {
    /// Rows "N,variance,variance_se".
    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,variance,variance_se\n");
        for (n, v, se) in &self.points {
            out.push_str(&format!("{n},{v:.10e},{se:.4e}\n"));
        }
        out
    }
}

/// Variance of log Z(N, 0) with its standard error.
pub fn log_partition_variance(samples: &[f64]) -> (f64, f64) {
    let m = Moments::from_slice(samples);
    let var = m.variance();
    let mean = m.mean;
    let n = samples.len() as f64;
    let m4 = samples.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    (var, ((m4 - var * var) / n).max(0.0).sqrt())
}

/// Least-squares slope of log Var(log Z(N, 0)) against log N.
pub fn fluctuation_exponent(beta: f64, disorder: Disorder, grid: &[usize], replicas: usize, seed: u64) -> Result<FluctuationFit> {
    require(grid.len() >= 4, || "need at least four depths".into())?;
    let points: Vec<(usize, f64, f64)> = grid
        .iter()
        .map(|&n| {
            let s = log_partition_samples(n, beta, disorder, seed, replicas)?;
            let (v, se) = log_partition_variance(&s);
            Ok((n, v, se))
        })
        .collect::<Result<_>>()?;
    let ns: Vec<f64> = points.iter().map(|p| p.0 as f64).collect();
    let vs: Vec<f64> = points.iter().map(|p| p.1).collect();
    if vs.iter().any(|&v| v <= 0.0) {
        return Err(KpzError::InsufficientStatistics("zero variance: the partition function is deterministic".into()));
    }
    let fit = exponent_fit(&ns, &vs)?;
    if fit.slope_se > 0.1 {
        return Err(KpzError::InsufficientStatistics(format!("slope standard error {} exceeds 0.1", fit.slope_se)));
    }
    Ok(FluctuationFit { slope: fit.slope, slope_se: fit.slope_se, points })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntermediateDisorder {
    pub value: f64,
    pub beta: f64,
    pub n: usize,
    pub m: i64,
    /// Set when ⌊x/ε⌋ had the wrong parity and was moved to the nearest even site.
    pub parity_adjusted: bool,
}

/// e^{−nΛ(β)}·Z_β(n, M) with β = (ε/2)^{1/2}, n = ⌊t/ε²⌋ and M = ⌊x/ε⌋.
pub fn intermediate_disorder_partition(epsilon: f64, t: f64, x: f64, field: &DisorderField) -> Result<IntermediateDisorder> {
    require(epsilon > 0.0 && epsilon <= 1.0, || format!("ε must lie in (0, 1], got {epsilon}"))?;
    let n_real = (t / (epsilon * epsilon)).floor();
    require(n_real >= 1.0 && n_real < 1e8, || format!("⌊t/ε²⌋ = {n_real} out of range"))?;
    let n = n_real as usize;
    let mut m = (x / epsilon).floor() as i64;
    let parity_adjusted = (n as i64 + m).rem_euclid(2) == 1;
    if parity_adjusted {
        // x/ε ∈ [M, M+1), so M + 1 is the nearer even-parity site
        m += 1;
    }
    require(m.unsigned_abs() as usize <= n, || format!("endpoint {m} outside the light cone of depth {n}"))?;
    let beta = (0.5 * epsilon).sqrt();
    let lambda = field.disorder.log_mgf(beta).ok_or_else(|| KpzError::InvalidArgument(format!("Λ(β) diverges at β = {beta}")))?;
    let lattice = evolve_partition(n, beta, field)?;
    let value = (lattice.log_z(n, m) - n as f64 * lambda).exp();
    Ok(IntermediateDisorder { value, beta, n, m, parity_adjusted })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn log_binomial_weight(n: usize, m: i64) -> f64 {
        let k = ((n as i64 + m) / 2) as usize;
        let lg = |x: usize| (1..=x).map(|i| (i as f64).ln()).sum::<f64>();
        lg(n) - lg(k) - lg(n - k) - n as f64 * std::f64::consts::LN_2
    }

    #[test]
    fn zero_temperature_gives_walk_probabilities() {
        let field = DisorderField::new(Disorder::standard_gaussian(), 1, 0).unwrap();
        let lat = evolve_partition(40, 0.0, &field).unwrap();
        for n in 0..=40usize {
            for m in -(n as i64)..=n as i64 {
                if (n as i64 + m) % 2 == 0 {
                    assert!((lat.log_z(n, m) - log_binomial_weight(n, m)).abs() < 1e-12, "n={n} m={m}");
                } else {
                    assert_eq!(lat.z(n, m), 0.0);
                }
            }
        }
    }

    #[test]
    fn one_step_values() {
        let field = DisorderField::new(Disorder::Bernoulli, 5, 2).unwrap();
        let beta = 0.7;
        let lat = evolve_partition(1, beta, &field).unwrap();
        for m in [-1i64, 1] {
            let expect = 0.5 * (beta * field.value(1, m)).exp();
            assert!((lat.z(1, m) - expect).abs() < 1e-15);
        }
        assert_eq!(lat.z(1, 0), 0.0);
        assert_eq!(lat.z(0, 0), 1.0);
    }

    #[test]
    fn field_is_a_function_of_seed_and_site() {
        let a = DisorderField::new(Disorder::standard_gaussian(), 9, 3).unwrap();
        let b = DisorderField::new(Disorder::standard_gaussian(), 9, 3).unwrap();
        let c = DisorderField::new(Disorder::standard_gaussian(), 9, 4).unwrap();
        assert_eq!(a.value(17, -5), b.value(17, -5));
        assert_ne!(a.value(17, -5), c.value(17, -5));
        assert_ne!(a.value(17, -5), a.value(17, -3));
    }

    #[test]
    fn field_moments_match_the_law() {
        for (d, mean, var) in [
            (Disorder::standard_gaussian(), 0.0, 1.0),
            (Disorder::Bernoulli, 0.0, 1.0),
            (Disorder::Exponential { rate: 2.0 }, 0.5, 0.25),
        ] {
            let f = DisorderField::new(d, 11, 0).unwrap();
            let xs: Vec<f64> = (0..200u64).flat_map(|i| (-250i64..250).map(move |j| (i, j))).map(|(i, j)| f.value(i, j)).collect();
            let m = Moments::from_slice(&xs);
            let n = xs.len() as f64;
            assert!((m.mean - mean).abs() < 5.0 * (var / n).sqrt(), "{d:?} mean {}", m.mean);
            assert!((m.variance() - var).abs() < 0.02 * var, "{d:?} var {}", m.variance());
        }
    }

    #[test]
    fn log_mgf_closed_forms() {
        assert!((Disorder::standard_gaussian().log_mgf(0.6).unwrap() - 0.18).abs() < 1e-15);
        assert!((Disorder::Bernoulli.log_mgf(0.6).unwrap() - 0.6f64.cosh().ln()).abs() < 1e-15);
        assert!((Disorder::Bernoulli.log_mgf(800.0).unwrap() - (800.0 - std::f64::consts::LN_2)).abs() < 1e-9);
        assert!((Disorder::Exponential { rate: 1.0 }.log_mgf(0.5).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!(Disorder::Exponential { rate: 1.0 }.admits(1.0).is_err());
    }

    #[test]
    fn height_recursion_matches_linear_evolution() {
        let field = DisorderField::new(Disorder::standard_gaussian(), 3, 1).unwrap();
        let beta = 0.9;
        let lat = evolve_partition(32, beta, &field).unwrap();
        let mut z = vec![vec![1.0f64]];
        for n in 0..32usize {
            let prev = &z[n];
            let at = |m: i64| if m.unsigned_abs() as usize <= n { prev[(m + n as i64) as usize] } else { 0.0 };
            let w = n as i64 + 1;
            let next: Vec<f64> = (-w..=w).map(|m| (beta * field.value(n as u64 + 1, m)).exp() * 0.5 * (at(m + 1) + at(m - 1))).collect();
            z.push(next);
        }
        for n in 0..=32usize {
            for m in -(n as i64)..=n as i64 {
                let linear = z[n][(m + n as i64) as usize];
                if linear > 0.0 {
                    assert!((lat.log_z(n, m) - linear.ln()).abs() < 1e-12);
                } else {
                    assert_eq!(lat.log_z(n, m), f64::NEG_INFINITY);
                }
            }
        }
    }

    #[test]
    fn endpoint_path_matches_full_lattice() {
        for d in [Disorder::standard_gaussian(), Disorder::Bernoulli, Disorder::Exponential { rate: 1.0 }] {
            let field = DisorderField::new(d, 21, 0).unwrap();
            let lat = evolve_partition(200, 0.8, &field).unwrap();
            let fast = log_partition_endpoint(200, 0.8, &field).unwrap();
            assert!((lat.log_z(200, 0) - fast).abs() < 1e-10 * fast.abs().max(1.0), "{d:?}");
        }
    }

    #[test]
    fn zero_temperature_variance_vanishes() {
        let s = log_partition_samples(64, 0.0, Disorder::standard_gaussian(), 4, 20).unwrap();
        assert_eq!(log_partition_variance(&s).0, 0.0);
        assert!(fluctuation_exponent(0.0, Disorder::standard_gaussian(), &[8, 16, 32, 64], 10, 4).is_err());
    }

    #[test]
    fn zero_temperature_free_energy_decays_to_zero() {
        let est = free_energy_estimate(0.0, Disorder::standard_gaussian(), &[64, 128, 256, 512], 10, 1).unwrap();
        for (n, e) in &est.per_n {
            assert!((e.estimate - log_binomial_weight(*n, 0) / *n as f64).abs() < 1e-12);
        }
        assert!(est.per_n.windows(2).all(|w| w[1].1.estimate.abs() < w[0].1.estimate.abs()));
        assert!(est.v_inf.abs() < 5e-3);
    }

    #[test]
    fn intermediate_disorder_single_step() {
        let field = DisorderField::new(Disorder::Bernoulli, 8, 0).unwrap();
        let r = intermediate_disorder_partition(1.0, 1.0, 0.0, &field).unwrap();
        assert!(r.parity_adjusted);
        assert_eq!((r.n, r.m), (1, 1));
        let beta = 0.5f64.sqrt();
        let expect = (beta * field.value(1, 1)).exp() / (2.0 * beta.cosh());
        assert!((r.value - expect).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn parity_and_positivity(seed in 0u64..1000, beta in 0.0f64..2.0) {
            let field = DisorderField::new(Disorder::standard_gaussian(), seed, 0).unwrap();
            let lat = evolve_partition(64, beta, &field).unwrap();
            for n in 0..=64usize {
                for m in -(n as i64)..=n as i64 {
                    let z = lat.z(n, m);
                    if (n as i64 + m) % 2 != 0 {
                        prop_assert_eq!(z, 0.0);
                    } else {
                        prop_assert!(z > 0.0 && z.is_finite());
                    }
                }
            }
        }
    }
}
