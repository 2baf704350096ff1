//! `K_nu` on the open right half plane.

use num_complex::Complex64;

use crate::error::{FptError, Result};

/// Above this modulus the Hankel expansion is used; its smallest term is
/// near `e^{-2|z|}`.
const ASYMPTOTIC_MODULUS: f64 = 20.0;

/// `K_nu(z)` for `Re z > 0`.
pub fn bessel_k_complex(nu: f64, z: Complex64) -> Result<Complex64> {
    Ok(bessel_k_complex_scaled(nu, z)? * (-z).exp())
}

/// `e^z K_nu(z)` for `Re z > 0`.
pub fn bessel_k_complex_scaled(nu: f64, z: Complex64) -> Result<Complex64> {
    if !(z.re > 0.0) || !z.im.is_finite() || !z.re.is_finite() {
        return Err(FptError::domain(format!(
            "complex K_nu needs Re z > 0, got {z}"
        )));
    }
    let nu = nu.abs();
    if z.norm() > ASYMPTOTIC_MODULUS {
        return Ok(hankel_expansion(nu, z));
    }
    cosh_integral(nu, z)
}

fn hankel_expansion(nu: f64, z: Complex64) -> Complex64 {
    let mu = 4.0 * nu * nu;
    let zinv = z.inv();
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    for k in 1..80 {
        let kf = k as f64;
        let next = term * zinv * ((mu - (2.0 * kf - 1.0).powi(2)) / (8.0 * kf));
        if next.norm() > term.norm() {
            break;
        }
        term = next;
        sum += term;
        if term.norm() < 1e-17 * sum.norm() {
            break;
        }
    }
    (std::f64::consts::FRAC_PI_2 * zinv).sqrt() * sum
}

/// Trapezoid rule for `int_0^inf exp(-z (cosh s - 1)) cosh(nu s) ds`. The
/// integrand is even and analytic, so the rule converges geometrically as
/// the step halves.
fn cosh_integral(nu: f64, z: Complex64) -> Result<Complex64> {
    let f = |s: f64| (-z * (s.cosh() - 1.0)).exp() * (nu * s).cosh();
    let mut s_max = 1.0;
    while z.re * (f64::cosh(s_max) - 1.0) - nu * s_max < 46.0 {
        s_max += 0.25;
    }
    let mut n = 32usize;
    let mut h = s_max / n as f64;
    let mut sum = 0.5 * f(0.0) + 0.5 * f(s_max);
    for k in 1..n {
        sum += f(k as f64 * h);
    }
    let mut prev = sum * h;
    let mut diff = f64::INFINITY;
    while n < 1 << 16 {
        // Add the midpoints of the current grid.
        for k in 0..n {
            sum += f((k as f64 + 0.5) * h);
        }
        n *= 2;
        h *= 0.5;
        let cur = sum * h;
        diff = (cur - prev).norm();
        if diff <= 1e-14 * cur.norm() {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(FptError::NonConvergence {
        what: "complex K_nu trapezoid rule",
        achieved: diff / prev.norm(),
        requested: 1e-14,
    })
}
