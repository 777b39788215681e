//! Nyström discretization of Fredholm determinants on truncated half-lines.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{require, KpzError, Result};
use crate::specfun::{gauss_legendre, QuadratureRule};

/// An integral kernel K(x, y). Factored kernels override `block` with a fast path.
pub trait Kernel: Sync {
    fn eval(&self, x: f64, y: f64) -> f64;

    /// Matrix of values K(x_i, y_j).
    fn block(&self, xs: &[f64], ys: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(xs.len(), ys.len(), |i, j| self.eval(xs[i], ys[j]))
    }
}

impl<F: Fn(f64, f64) -> f64 + Sync> Kernel for F {
    fn eval(&self, x: f64, y: f64) -> f64 {
        self(x, y)
    }
}

/// The zero kernel.
pub struct ZeroKernel;

impl Kernel for ZeroKernel {
    fn eval(&self, _: f64, _: f64) -> f64 {
        0.0
    }
    fn block(&self, xs: &[f64], ys: &[f64]) -> DMatrix<f64> {
        DMatrix::zeros(xs.len(), ys.len())
    }
}

/// A kernel restricted to [s, s + length].
#[derive(Clone, Copy)]
pub struct KernelSpec<'a> {
    pub kernel: &'a dyn Kernel,
    pub s: f64,
    pub length: f64,
    pub symmetric: bool,
}

impl<'a> KernelSpec<'a> {
    pub fn new(kernel: &'a dyn Kernel, s: f64, length: f64, symmetric: bool) -> Self {
        Self { kernel, s, length, symmetric }
    }

    fn validate(&self) -> Result<()> {
        require(self.s.is_finite(), || format!("domain endpoint must be finite, got {}", self.s))?;
        require(self.length.is_finite() && self.length > 0.0, || {
            format!("truncation length must be positive, got {}", self.length)
        })
    }
}

#[derive(Debug, Clone)]
pub struct DiscretizedOperator {
    pub matrix: DMatrix<f64>,
    pub rule: QuadratureRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FredholmResult {
    pub value: f64,
    pub n: usize,
    /// Truncation length actually used (after any doubling retries).
    pub length: f64,
    /// |value(n) − value(⌈n/2⌉)|.
    pub convergence_estimate: f64,
    /// Smallest over largest LU pivot magnitude of I − M; small values flag ill-conditioning.
    pub pivot_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FredholmOptions {
    pub decay_tolerance: f64,
    pub max_doublings: u32,
    pub symmetry_tolerance: f64,
}

impl Default for FredholmOptions {
    fn default() -> Self {
        Self {
            decay_tolerance: 1e-12,
            max_doublings: 4,
            symmetry_tolerance: 1e-12,
        }
    }
}

fn scale_by_weights(mut m: DMatrix<f64>, left: &[f64], right: &[f64]) -> DMatrix<f64> {
    for j in 0..m.ncols() {
        let rj = right[j].sqrt();
        for i in 0..m.nrows() {
            m[(i, j)] *= left[i].sqrt() * rj;
        }
    }
    m
}

fn check_finite(m: &DMatrix<f64>) -> Result<()> {
    if let Some(v) = m.iter().find(|v| !v.is_finite()) {
        Err(KpzError::NonFinite(format!("kernel value {v} at a node pair")))
    } else {
        Ok(())
    }
}

/// M_ij = √w_i K(x_i, x_j) √w_j with Gauss-Legendre nodes on [s, s + L].
pub fn discretize(spec: &KernelSpec, n: usize) -> Result<DiscretizedOperator> {
    spec.validate()?;
    let rule = gauss_legendre(n, spec.s, spec.s + spec.length)?;
    let raw = spec.kernel.block(&rule.nodes, &rule.nodes);
    check_finite(&raw)?;
    if spec.symmetric {
        let asym = (&raw - raw.transpose()).amax();
        if asym > FredholmOptions::default().symmetry_tolerance * raw.amax().max(1.0) {
            return Err(KpzError::InvalidArgument(format!(
                "kernel flagged symmetric but max |K(x,y) - K(y,x)| = {asym:e}"
            )));
        }
    }
    let matrix = scale_by_weights(raw, &rule.weights, &rule.weights);
    Ok(DiscretizedOperator { matrix, rule })
}

/// det(I − M) through LU with partial pivoting, plus the pivot ratio.
pub fn det_identity_minus(m: &DMatrix<f64>) -> Result<(f64, f64)> {
    let n = m.nrows();
    let a = DMatrix::<f64>::identity(n, n) - m;
    let lu = a.lu();
    let u = lu.u();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..n {
        let p = u[(i, i)].abs();
        lo = lo.min(p);
        hi = hi.max(p);
    }
    let det = lu.determinant();
    if !det.is_finite() {
        return Err(KpzError::DeterminantFailure(format!("det(I - M) = {det}")));
    }
    let ratio = if n == 0 { 1.0 } else if hi > 0.0 { lo / hi } else { 0.0 };
    Ok((det, ratio))
}

/// Doubles the truncation length until |K(s+L, s+L)| falls below the tolerance.
fn settle_length(kernel: &dyn Kernel, s: f64, length: f64, opts: &FredholmOptions) -> Result<f64> {
    let mut l = length;
    for attempt in 0..=opts.max_doublings {
        let v = kernel.eval(s + l, s + l);
        if !v.is_finite() {
            return Err(KpzError::NonFinite(format!("K(s+L, s+L) = {v}")));
        }
        if v.abs() < opts.decay_tolerance {
            return Ok(l);
        }
        if attempt == opts.max_doublings {
            return Err(KpzError::TruncationCheck { value: v.abs(), length: l });
        }
        l *= 2.0;
    }
    unreachable!()
}

pub fn fredholm_det(spec: &KernelSpec, n: usize) -> Result<FredholmResult> {
    fredholm_det_with(spec, n, &FredholmOptions::default())
}

pub fn fredholm_det_with(spec: &KernelSpec, n: usize, opts: &FredholmOptions) -> Result<FredholmResult> {
    spec.validate()?;
    let length = settle_length(spec.kernel, spec.s, spec.length, opts)?;
    let settled = KernelSpec { length, ..*spec };
    let full = discretize(&settled, n)?;
    let (value, pivot_ratio) = det_identity_minus(&full.matrix)?;
    let coarse_n = n.div_ceil(2);
    let coarse = if coarse_n == n {
        value
    } else {
        det_identity_minus(&discretize(&settled, coarse_n)?.matrix)?.0
    };
    Ok(FredholmResult {
        value,
        n,
        length,
        convergence_estimate: (value - coarse).abs(),
        pivot_ratio,
    })
}

/// A 2×2 operator-valued kernel; `blocks[i][j]` maps domain j into domain i.
pub struct BlockKernel<'a> {
    pub blocks: [[&'a dyn Kernel; 2]; 2],
}

fn assemble_block(bk: &BlockKernel, r1: &QuadratureRule, r2: &QuadratureRule) -> Result<DMatrix<f64>> {
    let rules = [r1, r2];
    let n1 = r1.len();
    let n = n1 + r2.len();
    let mut m = DMatrix::zeros(n, n);
    for (i, ri) in rules.iter().enumerate() {
        for (j, rj) in rules.iter().enumerate() {
            let raw = bk.blocks[i][j].block(&ri.nodes, &rj.nodes);
            check_finite(&raw)?;
            let scaled = scale_by_weights(raw, &ri.weights, &rj.weights);
            let (oi, oj) = (if i == 0 { 0 } else { n1 }, if j == 0 { 0 } else { n1 });
            m.view_mut((oi, oj), (ri.len(), rj.len())).copy_from(&scaled);
        }
    }
    Ok(m)
}

/// det(I − K) for a 2×2 block kernel discretized with one rule per block.
/// Returns (det(I − K), det(I − K₁₁), pivot ratio); the marginal shares the
/// discretization so that differences of the two cancel consistently.
pub fn block_det_with_rules(bk: &BlockKernel, r1: &QuadratureRule, r2: &QuadratureRule) -> Result<(f64, f64, f64)> {
    let m = assemble_block(bk, r1, r2)?;
    let n1 = r1.len();
    let (marginal, _) = det_identity_minus(&m.view((0, 0), (n1, n1)).into_owned())?;
    let (joint, pivot_ratio) = det_identity_minus(&m)?;
    Ok((joint, marginal, pivot_ratio))
}

/// det(I − K) for a 2×2 block kernel, block i living on [s_i, s_i + L].
pub fn block_fredholm_det(bk: &BlockKernel, domains: (f64, f64), length: f64, n: usize) -> Result<FredholmResult> {
    let opts = FredholmOptions::default();
    require(domains.0.is_finite() && domains.1.is_finite(), || "block domains must be finite".into())?;
    require(length > 0.0, || format!("truncation length must be positive, got {length}"))?;
    let l1 = settle_length(bk.blocks[0][0], domains.0, length, &opts)?;
    let l2 = settle_length(bk.blocks[1][1], domains.1, length, &opts)?;
    let length = l1.max(l2);
    let det_at = |n: usize| -> Result<(f64, f64)> {
        let r1 = gauss_legendre(n, domains.0, domains.0 + length)?;
        let r2 = gauss_legendre(n, domains.1, domains.1 + length)?;
        det_identity_minus(&assemble_block(bk, &r1, &r2)?)
    };
    let (value, pivot_ratio) = det_at(n)?;
    let coarse_n = n.div_ceil(2);
    let coarse = if coarse_n == n { value } else { det_at(coarse_n)?.0 };
    Ok(FredholmResult {
        value,
        n,
        length,
        convergence_estimate: (value - coarse).abs(),
        pivot_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_kernel() {
        let spec = KernelSpec::new(&ZeroKernel, 0.0, 10.0, true);
        let d = discretize(&spec, 12).unwrap();
        assert_eq!(d.matrix.amax(), 0.0);
        assert_eq!(fredholm_det(&spec, 12).unwrap().value, 1.0);
    }

    #[test]
    fn single_node() {
        let k = |x: f64, y: f64| (x + 2.0) * (y + 3.0);
        let spec = KernelSpec::new(&k, 0.0, 1.0, false);
        let d = discretize(&spec, 1).unwrap();
        assert!((d.matrix[(0, 0)] - 1.0 * 2.5 * 3.5).abs() < 1e-14);
    }

    #[test]
    fn symmetric_kernel_gives_symmetric_matrix() {
        let k = |x: f64, y: f64| (-(x - y).powi(2)).exp() * (-(x + y)).exp();
        let spec = KernelSpec::new(&k, -1.0, 10.0, true);
        let m = discretize(&spec, 30).unwrap().matrix;
        assert!((&m - m.transpose()).amax() < 1e-12);
    }

    #[test]
    fn rank_one_exponential() {
        let k = |x: f64, y: f64| (-x - y).exp();
        let r = fredholm_det(&KernelSpec::new(&k, 0.0, 10.0, true), 40).unwrap();
        assert!((r.value - 0.5).abs() < 1e-12, "{}", r.value);
        assert_eq!(r.length, 20.0);
    }

    #[test]
    fn truncation_failure_is_reported() {
        let k = |_: f64, _: f64| 0.1;
        assert!(matches!(
            fredholm_det(&KernelSpec::new(&k, 0.0, 10.0, true), 10),
            Err(KpzError::TruncationCheck { .. })
        ));
    }

    #[test]
    fn non_finite_kernel_is_rejected() {
        let k = |x: f64, _: f64| if x > 5.0 { f64::NAN } else { 0.0 };
        assert!(discretize(&KernelSpec::new(&k, 0.0, 10.0, false), 10).is_err());
    }

    #[test]
    fn block_determinants() {
        let phi = |x: f64, y: f64| 0.5 * (-x - y).exp();
        let psi = |x: f64, y: f64| 0.3 * (-(x * x) - y * y).exp();
        let zero = BlockKernel { blocks: [[&ZeroKernel, &ZeroKernel], [&ZeroKernel, &ZeroKernel]] };
        assert_eq!(block_fredholm_det(&zero, (0.0, 0.5), 10.0, 8).unwrap().value, 1.0);
        let diag = BlockKernel { blocks: [[&phi, &ZeroKernel], [&ZeroKernel, &psi]] };
        let joint = block_fredholm_det(&diag, (0.0, -1.0), 20.0, 40).unwrap().value;
        let a = fredholm_det(&KernelSpec::new(&phi, 0.0, 20.0, true), 40).unwrap().value;
        let b = fredholm_det(&KernelSpec::new(&psi, -1.0, 20.0, true), 40).unwrap().value;
        assert!((joint - a * b).abs() < 1e-10);
    }

    proptest! {
        // rank-k kernels: Nyström determinant equals det(I − G) with G the Gram matrix of the factors
        #[test]
        fn rank_k_gram(k in 1usize..=3, rates in proptest::collection::vec(0.5f64..3.0, 3),
                       amps in proptest::collection::vec(-0.8f64..0.8, 3)) {
            let (ka, kr) = (amps.clone(), rates.clone());
            let kernel = move |x: f64, y: f64| (0..k).map(|i| ka[i] * ka[i] * (-kr[i] * (x + y)).exp()).sum::<f64>();
            let r = fredholm_det(&KernelSpec::new(&kernel, 0.0, 40.0, true), 120).unwrap();
            let g = DMatrix::from_fn(k, k, |i, j| amps[i].abs() * amps[j].abs() / (rates[i] + rates[j]));
            let exact = (DMatrix::<f64>::identity(k, k) - g).determinant();
            prop_assert!((r.value - exact).abs() < 1e-10, "{} vs {}", r.value, exact);
        }

        #[test]
        fn psd_contraction_in_unit_interval(a in 0.0f64..0.99, rate in 0.3f64..3.0) {
            let kernel = move |x: f64, y: f64| a * 2.0 * rate * (-rate * (x + y)).exp();
            let r = fredholm_det(&KernelSpec::new(&kernel, 0.0, 40.0, true), 60).unwrap();
            prop_assert!(r.value >= 0.0 && r.value <= 1.0);
        }
    }
}
