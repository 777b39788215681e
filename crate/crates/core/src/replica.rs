//! Bethe-string pieces of the replica solution for sharp-wedge data: string
//! energies, overlap weights and the finite string sums for ⟨Z(0,t)^N⟩.

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{require, KpzError, Result};
use crate::specfun::gauss_legendre;

/// Strings with sizes n_α and real centers q_α.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StringConfiguration {
    pub strings: Vec<(usize, f64)>,
}

impl StringConfiguration {
    pub fn new(strings: Vec<(usize, f64)>) -> Result<Self> {
        require(!strings.is_empty(), || "at least one string needed".into())?;
        require(strings.iter().all(|&(n, q)| n >= 1 && q.is_finite()), || format!("invalid strings {strings:?}"))?;
        Ok(Self { strings })
    }

    /// N = Σ n_α.
    pub fn particles(&self) -> usize {
        self.strings.iter().map(|s| s.0).sum()
    }
}

/// E = ½ Σ n_α q_α² − (1/24) Σ (n_α³ − n_α).
pub fn string_energy(config: &StringConfiguration) -> f64 {
    config
        .strings
        .iter()
        .map(|&(n, q)| {
            let n = n as f64;
            0.5 * n * q * q - (n * n * n - n) / 24.0
        })
        .sum()
}

/// Relative imaginary part tolerated in the overlap weights.
pub const IMAGINARY_TOLERANCE: f64 = 1e-10;

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// N!·det[1/(½(n_α + n_β) + i(q_α − q_β))] for at most three strings.
pub fn norm_weight(config: &StringConfiguration) -> Result<f64> {
    let m = config.strings.len();
    require(m <= 3, || format!("at most three strings supported, got {m}"))?;
    let matrix = DMatrix::from_fn(m, m, |a, b| {
        let (na, qa) = config.strings[a];
        let (nb, qb) = config.strings[b];
        Complex::new(0.5 * (na + nb) as f64, qa - qb).inv()
    });
    let det = small_det(&matrix) * factorial(config.particles());
    if det.im.abs() > IMAGINARY_TOLERANCE * det.re.abs().max(1.0) {
        return Err(KpzError::ImaginaryResidual(det.im));
    }
    Ok(det.re)
}

fn small_det(a: &DMatrix<Complex<f64>>) -> Complex<f64> {
    match a.nrows() {
        1 => a[(0, 0)],
        2 => a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)],
        3 => {
            a[(0, 0)] * (a[(1, 1)] * a[(2, 2)] - a[(1, 2)] * a[(2, 1)]) - a[(0, 1)] * (a[(1, 0)] * a[(2, 2)] - a[(1, 2)] * a[(2, 0)])
                + a[(0, 2)] * (a[(1, 0)] * a[(2, 1)] - a[(1, 1)] * a[(2, 0)])
        }
        _ => unreachable!("sizes above three are rejected earlier"),
    }
}

/// Ordered compositions of `n` into `parts` positive sizes.
fn compositions(n: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![n]];
    }
    (1..n).filter(|&first| n - first >= parts - 1).flat_map(|first| {
        compositions(n - first, parts - 1).into_iter().map(move |mut rest| {
            rest.insert(0, first);
            rest
        })
    }).collect()
}

/// Gauss-Legendre order of every q-integral.
pub const Q_ORDER: usize = 200;

/// ⟨Z(0,t)^N⟩ = Σ_M (1/M!) Σ_{n_1+…+n_M = N} ∫ Π dq_α/(2π) weight·e^{−E t}.
pub fn moment_via_strings(n: usize, t: f64) -> Result<f64> {
    require((1..=3).contains(&n), || format!("moment order must be 1, 2 or 3, got {n}"))?;
    require(t > 0.0 && t <= 1.5, || format!("t must lie in (0, 1.5], got {t}"))?;
    let mut total = 0.0;
    for m in 1..=n {
        for sizes in compositions(n, m) {
            // q_α ∈ [−Q_α, Q_α] with Q_α = 8/√(n_α t)
            let rules: Vec<_> = sizes
                .iter()
                .map(|&na| {
                    let q = 8.0 / (na as f64 * t).sqrt();
                    gauss_legendre(Q_ORDER, -q, q)
                })
                .collect::<Result<_>>()?;
            let mut sum = 0.0;
            let mut idx = vec![0usize; m];
            loop {
                let strings: Vec<(usize, f64)> = sizes.iter().zip(&idx).zip(&rules).map(|((&na, &i), r)| (na, r.nodes[i])).collect();
                let weight: f64 = idx.iter().zip(&rules).map(|(&i, r)| r.weights[i]).product();
                let config = StringConfiguration { strings };
                sum += weight * norm_weight(&config)? * (-string_energy(&config) * t).exp();
                // odometer over the product grid
                let mut k = 0;
                while k < m {
                    idx[k] += 1;
                    if idx[k] < Q_ORDER {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
                if k == m {
                    break;
                }
            }
            total += sum / (2.0 * std::f64::consts::PI).powi(m as i32) / factorial(m);
        }
    }
    if !total.is_finite() {
        return Err(KpzError::NonConvergence(format!("string sum for N = {n} at t = {t}")));
    }
    Ok(total)
}

/// ⟨Z^N⟩/⟨Z⟩^N from the string sums.
pub fn normalized_moment_via_strings(n: usize, t: f64) -> Result<f64> {
    Ok(moment_via_strings(n, t)? / moment_via_strings(1, t)?.powi(n as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn erf(x: f64) -> f64 {
        // Simpson on e^{−u²}; independent of the library quadrature
        let n = 4000;
        let h = x / n as f64;
        let f = |u: f64| (-u * u).exp();
        let mut s = f(0.0) + f(x);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
        }
        s * h / 3.0 * 2.0 / PI.sqrt()
    }

    /// ⟨Z(0,t)²⟩/p_t(0)² from the local time at zero of a Brownian bridge:
    /// P(L > ℓ) = e^{−ℓ²/2t} gives 1 + √(πt)·e^{t/4}·Φ(√(t/2)).
    fn second_moment_oracle(t: f64) -> f64 {
        let phi = 0.5 * (1.0 + erf((t / 2.0).sqrt() / 2f64.sqrt()));
        (1.0 + (PI * t).sqrt() * (t / 4.0).exp() * phi) / (2.0 * PI * t)
    }

    #[test]
    fn energies() {
        assert_eq!(string_energy(&StringConfiguration::new(vec![(1, 0.0)]).unwrap()), 0.0);
        assert!((string_energy(&StringConfiguration::new(vec![(2, 0.0)]).unwrap()) + 0.25).abs() < 1e-15);
        let a = StringConfiguration::new(vec![(2, 0.3)]).unwrap();
        let b = StringConfiguration::new(vec![(3, -1.1)]).unwrap();
        let ab = StringConfiguration::new(vec![(2, 0.3), (3, -1.1)]).unwrap();
        assert!((string_energy(&ab) - string_energy(&a) - string_energy(&b)).abs() < 1e-14);
    }

    #[test]
    fn single_string_weight() {
        for n in 1..=3 {
            let w = norm_weight(&StringConfiguration::new(vec![(n, 0.7)]).unwrap()).unwrap();
            assert!((w - factorial(n) / n as f64).abs() < 1e-14);
        }
    }

    #[test]
    fn two_string_weights() {
        let equal = norm_weight(&StringConfiguration::new(vec![(1, 0.4), (1, 0.4)]).unwrap()).unwrap();
        assert!(equal.abs() < 1e-15);
        // 2!·(1 − 1/(1 + Δ²)) with Δ = 1
        let w = norm_weight(&StringConfiguration::new(vec![(1, 0.0), (1, 1.0)]).unwrap()).unwrap();
        assert!((w - 1.0).abs() < 1e-14);
    }

    #[test]
    fn three_string_weights_are_real() {
        for qs in [[0.1, -0.5, 2.0], [0.0, 0.0, 1.0], [3.0, -2.0, 0.25]] {
            let c = StringConfiguration::new(vec![(1, qs[0]), (1, qs[1]), (1, qs[2])]).unwrap();
            assert!(norm_weight(&c).unwrap().is_finite());
        }
        let mixed = StringConfiguration::new(vec![(2, 0.3), (1, -0.4)]).unwrap();
        assert!(norm_weight(&mixed).unwrap().is_finite());
    }

    #[test]
    fn first_moment_is_the_heat_kernel() {
        for t in [0.25, 0.5, 1.0] {
            let m = moment_via_strings(1, t).unwrap();
            assert!((m - 1.0 / (2.0 * PI * t).sqrt()).abs() < 1e-10);
        }
    }

    #[test]
    fn second_moment_matches_local_time_formula() {
        for t in [0.25, 0.5, 1.0, 1.5] {
            let m = moment_via_strings(2, t).unwrap();
            let exact = second_moment_oracle(t);
            assert!((m / exact - 1.0).abs() < 1e-6, "t={t}: {m} vs {exact}");
        }
    }

    #[test]
    fn normalized_second_moment_grows() {
        let r: Vec<f64> = [0.25, 0.5, 0.75, 1.0, 1.5].iter().map(|&t| normalized_moment_via_strings(2, t).unwrap()).collect();
        assert!(r.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn compositions_enumerate() {
        assert_eq!(compositions(3, 2), vec![vec![1, 2], vec![2, 1]]);
        assert_eq!(compositions(3, 3), vec![vec![1, 1, 1]]);
    }
}
