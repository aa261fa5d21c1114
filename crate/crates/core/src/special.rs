//! Log-gamma on the real line and in the complex plane.
//!
//! Both routines use the same scheme: shift the argument upward with the
//! recurrence `Gamma(z + 1) = z Gamma(z)` until `Re z >= 15`, then sum the
//! Stirling series with eight Bernoulli terms. At `|z| >= 15` the first
//! omitted term is below `2e-21`, so the result is limited by rounding only
//! (about `1e-15 * |z ln z|` absolute). Arguments with `Re z < 1/2` go through
//! the reflection formula.

use num_complex::Complex64;
use std::f64::consts::PI;

const SHIFT_THRESHOLD: f64 = 15.0;
const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_8;

/// `B_{2k} / (2k (2k - 1))` for `k = 1..=8`.
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

fn stirling_tail_real(x: f64) -> f64 {
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut acc = 0.0;
    for c in STIRLING.iter().rev() {
        acc = acc * inv2 + c;
    }
    acc * inv
}

fn stirling_tail(z: Complex64) -> Complex64 {
    let inv = z.inv();
    let inv2 = inv * inv;
    let mut acc = Complex64::new(0.0, 0.0);
    for &c in STIRLING.iter().rev() {
        acc = acc * inv2 + c;
    }
    acc * inv
}

/// `ln Gamma(x)` for `x > 0`; `ln |Gamma(x)|` for negative non-integers.
///
/// Returns `+inf` at the poles `x = 0, -1, -2, ...`.
pub fn ln_gamma(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.5 {
        if x == x.floor() {
            return f64::INFINITY;
        }
        // Gamma(x) Gamma(1 - x) = pi / sin(pi x)
        let s = (PI * x).sin().abs();
        return PI.ln() - s.ln() - ln_gamma(1.0 - x);
    }
    let mut z = x;
    let mut prod = 1.0;
    while z < SHIFT_THRESHOLD {
        prod *= z;
        z += 1.0;
    }
    (z - 0.5) * z.ln() - z + HALF_LN_TWO_PI + stirling_tail_real(z) - prod.ln()
}

/// A logarithm of `Gamma(z)` for complex `z` off the non-positive integers.
///
/// For `Re z >= 1/2` this is the principal branch (continuous from the
/// positive real axis). On the reflected half-plane the imaginary part is
/// only defined modulo `2 pi`, which is irrelevant once exponentiated.
pub fn ln_gamma_complex(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        let sin = (z * PI).sin();
        return Complex64::new(PI.ln(), 0.0) - sin.ln() - ln_gamma_complex(Complex64::new(1.0, 0.0) - z);
    }
    let mut w = z;
    let mut shift = Complex64::new(0.0, 0.0);
    while w.re < SHIFT_THRESHOLD {
        shift += w.ln();
        w += 1.0;
    }
    (w - 0.5) * w.ln() - w + HALF_LN_TWO_PI + stirling_tail(w) - shift
}

/// `ln (Gamma(a) / Gamma(b))` for positive reals.
pub fn ln_gamma_ratio(a: f64, b: f64) -> f64 {
    ln_gamma(a) - ln_gamma(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn real_integers_and_half_integers() {
        let mut fact = 1.0f64;
        for n in 1..30 {
            // Gamma(n) = (n-1)!
            assert_relative_eq!(ln_gamma(n as f64), fact.ln(), epsilon = 1e-13, max_relative = 1e-14);
            fact *= n as f64;
        }
        // Gamma(n + 1/2) = sqrt(pi) (2n)! / (4^n n!)
        let mut g = PI.sqrt();
        for n in 0..20 {
            assert_relative_eq!(ln_gamma(n as f64 + 0.5), g.ln(), epsilon = 1e-13, max_relative = 1e-14);
            g *= n as f64 + 0.5;
        }
    }

    #[test]
    fn real_reflection_and_poles() {
        // Gamma(-1/2) = -2 sqrt(pi)
        assert_relative_eq!(ln_gamma(-0.5), (2.0 * PI.sqrt()).ln(), max_relative = 1e-14);
        assert!(ln_gamma(0.0).is_infinite());
        assert!(ln_gamma(-3.0).is_infinite());
    }

    #[test]
    fn complex_matches_high_precision_reference() {
        // reference values from an arbitrary-precision loggamma
        let cases = [
            (c(0.5, 10.0), c(-14.789_024_734_744_293, 13.030_020_034_911_09)),
            (c(3.7, -2.2), c(0.726_446_751_624_426_5, -2.718_064_292_441_145_7)),
            (c(1.0, 0.5), c(-0.190_945_499_186_779_36, -0.244_058_298_905_427_76)),
            (c(0.25, 40.0), c(-62.835_129_518_830_19, 107.162_739_501_899_1)),
            (c(0.6, 0.001), c(0.398_232_039_966_374_8, -0.001_540_617_553_423_861)),
            (c(12.5, 100.0), c(-100.870_024_775_444_2, 378.648_703_397_237_2)),
        ];
        for (z, want) in cases {
            let got = ln_gamma_complex(z);
            let err = (got - want).norm();
            assert!(err <= 1e-12 * want.norm().max(1.0), "z={z}: got {got}, want {want}");
        }
    }

    #[test]
    fn complex_reflected_value_agrees_after_exponentiation() {
        let z = c(-2.3, 1.7);
        let want = c(-4.005_547_700_452_267, -6.945_026_776_596_145);
        let got = ln_gamma_complex(z);
        assert_relative_eq!(got.re, want.re, max_relative = 1e-12);
        let dphase = (got.im - want.im) / (2.0 * PI);
        assert!((dphase - dphase.round()).abs() < 1e-12);
    }

    #[test]
    fn modulus_identities_on_vertical_lines() {
        for &y in &[0.1, 0.7, 1.0, 3.3, 8.0, 20.0] {
            // |Gamma(1/2 + iy)|^2 = pi / cosh(pi y)
            let lhs = 2.0 * ln_gamma_complex(c(0.5, y)).re;
            let rhs = PI.ln() - (PI * y).cosh().ln();
            assert_relative_eq!(lhs, rhs, epsilon = 1e-13, max_relative = 1e-13);
            // |Gamma(1 + iy)|^2 = pi y / sinh(pi y)
            let lhs = 2.0 * ln_gamma_complex(c(1.0, y)).re;
            let rhs = (PI * y).ln() - (PI * y).sinh().ln();
            assert_relative_eq!(lhs, rhs, epsilon = 1e-13, max_relative = 1e-13);
        }
    }

    #[test]
    fn recurrence_holds() {
        for &(re, im) in &[(0.6, 0.3), (2.5, -7.0), (7.25, 30.0), (0.51, 0.0)] {
            let z = c(re, im);
            let lhs = ln_gamma_complex(z + 1.0);
            let rhs = ln_gamma_complex(z) + z.ln();
            assert!((lhs - rhs).norm() < 1e-12 * lhs.norm().max(1.0));
        }
    }

    #[test]
    fn complex_agrees_with_real_on_axis() {
        for &x in &[0.5, 0.75, 1.5, 4.2, 17.0, 120.5] {
            let z = ln_gamma_complex(c(x, 0.0));
            assert_relative_eq!(z.re, ln_gamma(x), epsilon = 1e-14, max_relative = 1e-14);
            assert_eq!(z.im, 0.0);
        }
    }
}
