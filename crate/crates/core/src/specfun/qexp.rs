use num_complex::Complex64;

use crate::error::{require, KpzError, Result};

/// Default factor cutoff: the product stops once |z τ^k| < cutoff.
pub const DEFAULT_CUTOFF: f64 = 1e-16;
const POLE_DISTANCE: f64 = 1e-12;

/// q-exponential e_τ(z) = 1/(z; τ)_∞ with the default cutoff.
pub fn q_exponential(z: impl Into<Complex64>, tau: f64) -> Result<Complex64> {
    q_exponential_with_cutoff(z, tau, DEFAULT_CUTOFF)
}

pub fn q_exponential_with_cutoff(z: impl Into<Complex64>, tau: f64, cutoff: f64) -> Result<Complex64> {
    let z = z.into();
    require(tau > 0.0 && tau < 1.0, || format!("tau must lie in (0,1), got {tau}"))?;
    require(cutoff > 0.0 && cutoff < 1.0, || format!("cutoff must lie in (0,1), got {cutoff}"))?;
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(KpzError::NonFinite(format!("q-exponential argument {z}")));
    }
    let mut product = Complex64::new(1.0, 0.0);
    let mut term = z;
    let mut k = 0usize;
    while term.norm() >= cutoff {
        let factor = Complex64::new(1.0, 0.0) - term;
        let distance = factor.norm();
        if distance < POLE_DISTANCE {
            return Err(KpzError::PoleProximity { k, distance });
        }
        product *= factor;
        term *= tau;
        k += 1;
    }
    Ok(product.inv())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn value_at_zero() {
        for tau in [0.1, 0.5, 0.9] {
            assert_eq!(q_exponential(0.0, tau).unwrap(), Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn small_tau_limit() {
        let z = Complex64::new(0.4, -0.3);
        let v = q_exponential(z, 1e-20).unwrap();
        assert!((v - (Complex64::new(1.0, 0.0) - z).inv()).norm() < 1e-15);
    }

    #[test]
    fn functional_identity() {
        let lhs = (1.0 - 0.3) * q_exponential(0.3, 0.5).unwrap();
        let rhs = q_exponential(0.3 * 0.5, 0.5).unwrap();
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn rejects_bad_tau_and_poles() {
        assert!(q_exponential(0.1, 0.0).is_err());
        assert!(q_exponential(0.1, 1.0).is_err());
        assert!(q_exponential(0.1, -0.2).is_err());
        // z = τ^{-2} hits the third factor
        assert!(matches!(q_exponential(4.0, 0.5), Err(KpzError::PoleProximity { k: 2, .. })));
    }

    proptest! {
        #[test]
        fn cutoff_doubling_is_harmless(re in -3.0f64..3.0, im in -3.0f64..3.0, tau in 0.05f64..0.95) {
            let z = Complex64::new(re, im);
            let a = q_exponential_with_cutoff(z, tau, 1e-16);
            let b = q_exponential_with_cutoff(z, tau, 0.5e-16);
            if let (Ok(a), Ok(b)) = (a, b) {
                prop_assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0));
            }
        }

        #[test]
        fn shift_identity(re in -0.9f64..0.9, im in -0.9f64..0.9, tau in 0.05f64..0.95) {
            let z = Complex64::new(re, im);
            let lhs = (Complex64::new(1.0, 0.0) - z) * q_exponential(z, tau).unwrap();
            let rhs = q_exponential(z * tau, tau).unwrap();
            prop_assert!((lhs - rhs).norm() < 1e-12 * rhs.norm().max(1.0));
        }
    }
}
