//! Complex log-gamma (Lanczos, g = 7), used for Gumbel characteristic functions.

use std::f64::consts::PI;

use num_complex::Complex64;

const G: f64 = 7.0;
const COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// log Γ(z) on the principal branch for Re z > 0; reflection below 1/2.
pub fn ln_gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        let s = (Complex64::from(PI) * z).sin();
        return Complex64::from(PI.ln()) - s.ln() - ln_gamma(1.0 - z);
    }
    let z = z - 1.0;
    let mut x = Complex64::from(COEF[0]);
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        x += c / (z + i as f64);
    }
    let t = z + G + 0.5;
    Complex64::from(0.5 * (2.0 * PI).ln()) + (z + 0.5) * t.ln() - t + x.ln()
}

/// Characteristic function E[e^{iωG}] = Γ(1 − iω) of a standard max-Gumbel variable.
pub fn gumbel_characteristic(omega: f64) -> Complex64 {
    ln_gamma(Complex64::new(1.0, -omega)).exp()
}
