//! Incomplete gamma functions on the positive imaginary axis.
//!
//! The memory kernel and its moments reduce to `Γ(a, i s)` for half-integer
//! orders `a`. Small arguments use the power series of the lower function,
//! larger ones a continued fraction for the upper function evaluated with
//! the modified Lentz method; each route is used where it has no cancellation.

use num_complex::Complex64;
use std::f64::consts::PI;

/// Below this |z| the series is used, above it the continued fraction.
const SERIES_LIMIT: f64 = 2.5;
const MAX_TERMS: usize = 100_000;
const TINY: f64 = 1e-300;

/// `Γ(a)` for half-integer `a >= -1/2`.
pub fn gamma_half_integer(a: f64) -> f64 {
    let twice = (2.0 * a).round();
    assert!(
        (2.0 * a - twice).abs() < 1e-12 && twice as i64 % 2 != 0 && twice >= -1.0,
        "gamma_half_integer: order {a} is not a half-integer >= -1/2"
    );
    let mut value = PI.sqrt();
    let mut order = 0.5;
    if a < 0.0 {
        // Γ(-1/2) = Γ(1/2) / (-1/2)
        return value / -0.5;
    }
    while order < a - 0.25 {
        value *= order;
        order += 1.0;
    }
    value
}

/// `(i s)^a` on the principal branch.
fn imag_pow(s: f64, a: f64) -> Complex64 {
    Complex64::from_polar(s.powf(a), 0.5 * PI * a)
}

/// Lower incomplete gamma by its power series, `z = i s`.
fn lower_series(a: f64, s: f64, eps: f64) -> Complex64 {
    let z = Complex64::new(0.0, s);
    let mut term = Complex64::new(1.0 / a, 0.0);
    let mut sum = term;
    for n in 1..MAX_TERMS {
        term = term * z / (a + n as f64);
        sum += term;
        if term.norm() <= eps * sum.norm() {
            break;
        }
    }
    imag_pow(s, a) * Complex64::from_polar(1.0, -s) * sum
}

/// Upper incomplete gamma by its continued fraction, `z = i s`.
fn upper_fraction(a: f64, s: f64, eps: f64) -> Complex64 {
    let z = Complex64::new(0.0, s);
    let tiny = Complex64::new(TINY, 0.0);
    let mut b = z + 1.0 - a;
    let mut c = Complex64::new(1.0 / TINY, 0.0);
    let mut d = b.inv();
    let mut f = d;
    for n in 1..MAX_TERMS {
        let an = -(n as f64) * (n as f64 - a);
        b += 2.0;
        d = b + an * d;
        if d.norm() < TINY {
            d = tiny;
        }
        c = b + an / c;
        if c.norm() < TINY {
            c = tiny;
        }
        d = d.inv();
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).norm() < eps {
            break;
        }
    }
    imag_pow(s, a) * Complex64::from_polar(1.0, -s) * f
}

/// Upper incomplete gamma `Γ(a, i s)` for half-integer `a >= -1/2` and `s > 0`.
pub fn upper_gamma_imag(a: f64, s: f64, eps: f64) -> Complex64 {
    debug_assert!(s > 0.0);
    if s < SERIES_LIMIT {
        Complex64::new(gamma_half_integer(a), 0.0) - lower_series(a, s, eps)
    } else {
        upper_fraction(a, s, eps)
    }
}

/// Lower incomplete gamma `γ(a, i s)` for half-integer `a >= 1/2` and `s >= 0`.
pub fn lower_gamma_imag(a: f64, s: f64, eps: f64) -> Complex64 {
    if s == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    if s < SERIES_LIMIT {
        lower_series(a, s, eps)
    } else {
        Complex64::new(gamma_half_integer(a), 0.0) - upper_fraction(a, s, eps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_values() {
        assert!((gamma_half_integer(0.5) - PI.sqrt()).abs() < 1e-15);
        assert!((gamma_half_integer(1.5) - 0.5 * PI.sqrt()).abs() < 1e-15);
        assert!((gamma_half_integer(2.5) - 0.75 * PI.sqrt()).abs() < 1e-15);
        assert!((gamma_half_integer(-0.5) + 2.0 * PI.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn routes_agree_at_the_switch() {
        for &a in &[-0.5, 0.5, 1.5] {
            for &s in &[1.5, 2.0, 2.5, 3.0, 4.0] {
                let series = Complex64::new(gamma_half_integer(a), 0.0) - lower_series(a, s, 1e-16);
                let fraction = upper_fraction(a, s, 1e-16);
                let rel = (series - fraction).norm() / fraction.norm();
                assert!(rel < 1e-12, "a={a} s={s} rel={rel:e}");
            }
        }
    }

    #[test]
    fn half_order_matches_fresnel_limit() {
        // Γ(1/2, i s) -> 0 and γ(1/2, i s) -> √π as s grows.
        let g = lower_gamma_imag(0.5, 1e6, 1e-15);
        assert!((g - Complex64::new(PI.sqrt(), 0.0)).norm() < 2e-3);
    }

    #[test]
    fn recurrence_holds() {
        // Γ(a+1, z) = a Γ(a, z) + z^a e^{-z}
        for &s in &[0.3, 1.0, 3.0, 17.0, 250.0] {
            let z = Complex64::new(0.0, s);
            let lhs = upper_gamma_imag(0.5, s, 1e-15);
            let rhs = -0.5 * upper_gamma_imag(-0.5, s, 1e-15) + imag_pow(s, -0.5) * (-z).exp();
            assert!((lhs - rhs).norm() < 1e-13 * lhs.norm().max(1.0), "s={s}");
        }
    }
}
