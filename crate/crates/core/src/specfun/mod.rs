//! Special functions: Bessel kernels, the normalizing function `Lambda_nu`,
//! Green functions, the heat kernel and incomplete gamma ratios.

mod bessel;
mod complex;

pub use bessel::{
    bessel_i, bessel_jy, bessel_k, bessel_k_i_difference, bessel_k_pair, bessel_k_scaled,
    I_SERIES_CROSSOVER,
};
pub use complex::{bessel_k_complex, bessel_k_complex_scaled};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma as sgamma;

use crate::error::{FptError, Result};

/// Euler's constant to 20 digits.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_61;

/// Taylor coefficients of `1/Gamma(1+z)` about zero.
pub(crate) const RECIP_GAMMA_TAYLOR: [f64; 29] = [
    1.0,
    5.772_156_649_015_328_66e-1,
    -6.558_780_715_202_539_02e-1,
    -4.200_263_503_409_523_70e-2,
    1.665_386_113_822_914_79e-1,
    -4.219_773_455_554_433_34e-2,
    -9.621_971_527_876_973_03e-3,
    7.218_943_246_663_099_90e-3,
    -1.165_167_591_859_065_17e-3,
    -2.152_416_741_149_509_75e-4,
    1.280_502_823_881_161_96e-4,
    -2.013_485_478_078_823_87e-5,
    -1.250_493_482_142_670_63e-6,
    1.133_027_231_981_695_93e-6,
    -2.056_338_416_977_607_07e-7,
    6.116_095_104_481_416_09e-9,
    5.002_007_644_469_222_95e-9,
    -1.181_274_570_487_020_04e-9,
    1.043_426_711_691_100_54e-10,
    7.782_263_439_905_070_81e-12,
    -3.696_805_618_642_205_98e-12,
    5.100_370_287_454_475_75e-13,
    -2.058_326_053_566_506_64e-14,
    -5.348_122_539_423_017_82e-15,
    1.226_778_628_238_260_84e-15,
    -1.181_259_301_697_458_83e-16,
    1.186_692_254_751_600_37e-18,
    1.412_380_655_318_031_86e-18,
    -2.298_745_684_435_370_22e-19,
];

/// Bessel order `nu`, equivalently the dimension `d = 2 nu + 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Order {
    nu: f64,
}

impl Order {
    pub fn new(nu: f64) -> Result<Self> {
        if !nu.is_finite() {
            return Err(FptError::domain(format!("order must be finite, got {nu}")));
        }
        Ok(Order { nu })
    }

    pub fn from_dimension(d: f64) -> Result<Self> {
        Order::new(0.5 * d - 1.0)
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn d(&self) -> f64 {
        2.0 * self.nu + 2.0
    }

    pub fn abs(&self) -> Order {
        Order { nu: self.nu.abs() }
    }

    pub fn is_integer(&self) -> bool {
        self.nu.fract() == 0.0
    }
}

/// Euler's constant together with `kappa = 2 e^{-2 gamma}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    pub euler_gamma: f64,
    pub kappa: f64,
}

impl Constants {
    pub fn get() -> Self {
        let kappa = 2.0 * (-2.0 * EULER_GAMMA).exp();
        debug_assert!((kappa - 0.630_473_503_374_386_8).abs() < 1e-15);
        Constants {
            euler_gamma: EULER_GAMMA,
            kappa,
        }
    }
}

pub fn kappa() -> f64 {
    Constants::get().kappa
}

pub fn gamma(x: f64) -> f64 {
    sgamma::gamma(x)
}

pub fn ln_gamma(x: f64) -> f64 {
    sgamma::ln_gamma(x)
}

/// `1/Gamma(x)`, exactly zero at the poles `x = 0, -1, -2, ...`.
pub fn recip_gamma(x: f64) -> f64 {
    if x <= 0.0 && x.fract() == 0.0 {
        return 0.0;
    }
    if x > 170.0 {
        return (-sgamma::ln_gamma(x)).exp();
    }
    1.0 / sgamma::gamma(x)
}

/// Heat kernel `(2 pi t)^{-d/2} e^{-x^2/2t}`.
pub fn gaussian_weight(order: Order, t: f64, x: f64) -> Result<f64> {
    Ok(ln_gaussian_weight(order, t, x)?.exp())
}

pub fn ln_gaussian_weight(order: Order, t: f64, x: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(FptError::domain(format!(
            "heat kernel needs t > 0, got {t}"
        )));
    }
    Ok(-(order.nu() + 1.0) * (2.0 * PI * t).ln() - x * x / (2.0 * t))
}

/// Green function `G(x) = Gamma(nu) / (2 pi^{nu+1} x^{2 nu})` for `nu > 0`.
pub fn green_g(nu: f64, x: f64) -> Result<f64> {
    if !(nu > 0.0) {
        return Err(FptError::domain(format!("G(x) needs nu > 0, got {nu}")));
    }
    if !(x > 0.0) {
        return Err(FptError::domain(format!("G(x) needs x > 0, got {x}")));
    }
    Ok((ln_gamma(nu) - 2.0 * nu * x.ln() - (nu + 1.0) * PI.ln()).exp() / 2.0)
}

/// Resolvent density `G_lambda(x) = int_0^inf p_t(x) e^{-lambda t} dt`.
pub fn green_g_lambda(nu: f64, lam: f64, x: f64) -> Result<f64> {
    if nu < 0.0 {
        return Err(FptError::domain(format!(
            "G_lambda needs nu >= 0, got {nu}"
        )));
    }
    if !(lam > 0.0) || !(x > 0.0) {
        return Err(FptError::domain(format!(
            "G_lambda needs lambda, x > 0, got {lam}, {x}"
        )));
    }
    let r = (2.0 * lam).sqrt();
    let y = x * r;
    let ln =
        2f64.ln() - (nu + 1.0) * (2.0 * PI).ln() + nu * (r / x).ln() + bessel_k_scaled(nu, y)?.ln()
            - y;
    Ok(ln.exp())
}

/// `ln Lambda_nu(y)`; minus infinity for `Lambda_0(0) = 0`.
pub fn ln_lambda_nu(nu: f64, y: f64) -> Result<f64> {
    if nu < 0.0 || nu.is_nan() {
        return Err(FptError::domain(format!(
            "Lambda_nu needs nu >= 0, got {nu}"
        )));
    }
    if y < 0.0 || y.is_nan() {
        return Err(FptError::domain(format!("Lambda_nu needs y >= 0, got {y}")));
    }
    if y == 0.0 || (nu > 0.0 && y < 1e-8) {
        if nu == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        return Ok(2f64.ln() + (nu + 1.0) * PI.ln() - ln_gamma(nu));
    }
    let ks = bessel_k_scaled(nu, y)?;
    Ok((nu + 1.0) * (2.0 * PI).ln() - 2f64.ln() - nu * y.ln() - ks.ln() + y)
}

/// `ln Lambda_nu(y) - y`, finite for large `y` where `Lambda_nu` itself
/// overflows.
pub fn ln_lambda_nu_scaled(nu: f64, y: f64) -> Result<f64> {
    if y > 1e-8 && nu >= 0.0 {
        let ks = bessel_k_scaled(nu, y)?;
        return Ok((nu + 1.0) * (2.0 * PI).ln() - 2f64.ln() - nu * y.ln() - ks.ln());
    }
    Ok(ln_lambda_nu(nu, y)? - y)
}

/// `Lambda_nu(y) = (2 pi)^{nu+1} / (2 y^nu K_nu(y))`.
pub fn lambda_nu(nu: f64, y: f64) -> Result<f64> {
    let v = ln_lambda_nu(nu, y)?.exp();
    if v.is_infinite() {
        return Err(FptError::OutOfRange(format!("Lambda_{nu}({y}) overflows")));
    }
    Ok(v)
}

/// `Lambda_nu` through `2 pi^{nu+1} / int_0^inf exp(-y^2/4u) e^{-u} u^{nu-1} du`.
///
/// The integral is evaluated with the given sign of `nu`. For `nu < 0` it
/// equals `(y/2)^{2nu}` times the `|nu|` integral, and that factor is divided
/// back out so both signs return `Lambda_|nu|(y)`.
pub fn lambda_nu_integral(nu: f64, y: f64) -> Result<f64> {
    if !(y > 0.0) || !nu.is_finite() {
        return Err(FptError::domain(format!(
            "integral form needs y > 0, got {y}"
        )));
    }
    let ln_d = ln_k01_integral(nu, y)?;
    let m = nu.abs();
    let ln = 2f64.ln() + (m + 1.0) * PI.ln()
        - ln_d
        - if nu < 0.0 {
            2.0 * m * (0.5 * y).ln()
        } else {
            0.0
        };
    Ok(ln.exp())
}

/// `ln int_0^inf exp(-y^2/4u - u) u^{nu-1} du` via `u = e^s` and the
/// trapezoid rule, which converges geometrically for this doubly
/// exponentially decaying integrand.
fn ln_k01_integral(nu: f64, y: f64) -> Result<f64> {
    let c = 0.25 * y * y;
    let g = |s: f64| -c * (-s).exp() - s.exp() + nu * s;
    // Peak of g: e^s - c e^{-s} = nu.
    let e_peak = 0.5 * (nu + (nu * nu + 4.0 * c).sqrt());
    let s0 = e_peak.ln();
    let g0 = g(s0);
    let mut lo = s0 - 1.0;
    while g(lo) > g0 - 50.0 {
        lo -= 1.0;
    }
    let mut hi = s0 + 1.0;
    while g(hi) > g0 - 50.0 {
        hi += 0.5;
    }
    let f = |s: f64| (g(s) - g0).exp();
    let mut n = 16usize;
    let mut h = (hi - lo) / n as f64;
    let mut sum = 0.5 * (f(lo) + f(hi));
    for k in 1..n {
        sum += f(lo + k as f64 * h);
    }
    let mut prev = sum * h;
    while n < 1 << 18 {
        for k in 0..n {
            sum += f(lo + (k as f64 + 0.5) * h);
        }
        n *= 2;
        h *= 0.5;
        let cur = sum * h;
        if (cur - prev).abs() <= 1e-15 * cur {
            return Ok(cur.ln() + g0);
        }
        prev = cur;
    }
    Err(FptError::NonConvergence {
        what: "Lambda_nu integral",
        achieved: f64::NAN,
        requested: 1e-15,
    })
}

/// Normalized incomplete gamma pair `(gamma_nu(y), Gamma_nu(y))`; the
/// smaller one is computed and the other obtained by subtraction.
pub fn incomplete_gamma_ratios(nu: f64, y: f64) -> Result<(f64, f64)> {
    if !(nu > 0.0) {
        return Err(FptError::domain(format!(
            "incomplete gamma needs nu > 0, got {nu}"
        )));
    }
    if y < 0.0 || y.is_nan() {
        return Err(FptError::domain(format!(
            "incomplete gamma needs y >= 0, got {y}"
        )));
    }
    if y == 0.0 {
        return Ok((0.0, 1.0));
    }
    if y.is_infinite() {
        return Ok((1.0, 0.0));
    }
    if y < nu {
        let lower = sgamma::gamma_lr(nu, y);
        Ok((lower, 1.0 - lower))
    } else {
        let upper = sgamma::gamma_ur(nu, y);
        Ok((1.0 - upper, upper))
    }
}

/// Exponential integral `E_1(y) = int_y^inf e^{-u}/u du`.
pub fn exp_int_e1(y: f64) -> Result<f64> {
    if !(y > 0.0) {
        return Err(FptError::domain(format!("E1 needs y > 0, got {y}")));
    }
    if y <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..100 {
            let kf = k as f64;
            term *= -y / kf;
            let d = -term / kf;
            sum += d;
            if d.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        return Ok(sum - EULER_GAMMA - y.ln());
    }
    // Modified Lentz on the continued fraction for e^y E_1(y).
    let tiny = 1e-300;
    let mut b = y + 1.0;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..1000 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            return Ok(h * (-y).exp());
        }
    }
    Err(FptError::NonConvergence {
        what: "E1 continued fraction",
        achieved: f64::NAN,
        requested: 1e-16,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn kappa_from_euler_gamma() {
        let c = Constants::get();
        assert_eq!(c.euler_gamma, EULER_GAMMA);
        assert!((c.kappa - 2.0 * (-2.0 * EULER_GAMMA).exp()).abs() < 1e-16);
    }

    #[test]
    fn order_dimension() {
        let o = Order::new(0.5).unwrap();
        assert_eq!(o.d(), 3.0);
        assert_eq!(Order::from_dimension(1.0).unwrap().nu(), -0.5);
        assert!(Order::new(f64::NAN).is_err());
    }

    #[test]
    fn recip_gamma_poles() {
        assert_eq!(recip_gamma(0.0), 0.0);
        assert_eq!(recip_gamma(-3.0), 0.0);
        assert!(rel(recip_gamma(0.5), 1.0 / PI.sqrt()) < 1e-14);
        assert!(rel(recip_gamma(-0.5), -0.5 / PI.sqrt()) < 1e-13);
    }

    #[test]
    fn k_examples() {
        assert!(rel(bessel_k(0.5, 1.0).unwrap(), 0.461_068_504_447_894_3) < 1e-14);
        assert_eq!(bessel_k(-0.7, 2.0).unwrap(), bessel_k(0.7, 2.0).unwrap());
        let small = -(EULER_GAMMA.exp() * 0.005).ln();
        assert!((bessel_k(0.0, 0.01).unwrap() - small).abs() < 1e-3);
    }

    #[test]
    fn wronskian_ik() {
        for nu in [0.0, 0.3, 1.0, 2.5] {
            for x in [0.05, 0.9, 2.0, 6.0, 24.0, 28.0] {
                let (k0, k1) = bessel_k_pair(nu, x).unwrap();
                let w = bessel_i(nu, x).unwrap() * k1 + bessel_i(nu + 1.0, x).unwrap() * k0;
                assert!(rel(w, 1.0 / x) < 1e-9, "nu={nu} x={x}");
            }
        }
    }

    #[test]
    fn lambda_examples() {
        assert!(rel(lambda_nu(1.0, 0.0).unwrap(), 2.0 * PI * PI) < 1e-14);
        assert_eq!(lambda_nu(0.0, 0.0).unwrap(), 0.0);
        assert!(rel(lambda_nu(0.5, 2.0).unwrap(), 2.0 * PI * 2f64.exp()) < 1e-13);
        assert!(lambda_nu(-1.0, 1.0).is_err());
        assert!(lambda_nu(1.0, -1.0).is_err());
    }

    #[test]
    fn lambda_zero_small_argument() {
        let y = 1e-6;
        let r = lambda_nu(0.0, y).unwrap() * (-y.ln()) / PI;
        assert!((r - 1.0).abs() < 0.1);
    }

    #[test]
    fn lambda_integral_agrees() {
        assert!(rel(lambda_nu_integral(0.5, 1.0).unwrap(), 2.0 * PI * 1f64.exp()) < 1e-12);
        for nu in [0.3, 1.0, 2.0] {
            for y in [0.5, 1.0, 5.0] {
                let a = lambda_nu_integral(nu, y).unwrap();
                let b = lambda_nu(nu, y).unwrap();
                assert!(rel(a, b) < 1e-8, "nu={nu} y={y}");
                let c = lambda_nu_integral(-nu, y).unwrap();
                assert!(rel(c, a) < 1e-10, "nu={nu} y={y}");
            }
        }
    }

    #[test]
    fn heat_kernel_examples() {
        let d2 = Order::new(0.0).unwrap();
        assert!(rel(gaussian_weight(d2, 1.0, 0.0).unwrap(), 1.0 / (2.0 * PI)) < 1e-15);
        let d3 = Order::new(0.5).unwrap();
        let want = (4.0 * PI).powf(-1.5) * (-0.25f64).exp();
        assert!(rel(gaussian_weight(d3, 2.0, 1.0).unwrap(), want) < 1e-14);
        assert!(gaussian_weight(d3, 0.0, 1.0).is_err());
    }

    #[test]
    fn green_examples() {
        assert!(rel(green_g(0.5, 1.0).unwrap(), 1.0 / (2.0 * PI)) < 1e-14);
        for nu in [0.5, 1.0, 2.0] {
            assert!(rel(1.0 / green_g(nu, 1.0).unwrap(), lambda_nu(nu, 0.0).unwrap()) < 1e-13);
            let d = 2.0 * nu + 2.0;
            let r = green_g(nu, 6.0).unwrap() / green_g(nu, 3.0).unwrap();
            assert!(rel(r, 2f64.powf(2.0 - d)) < 1e-13);
        }
        assert!(green_g(0.0, 1.0).is_err());
        let want = (-1f64).exp() / (2.0 * PI);
        assert!(rel(green_g_lambda(0.5, 0.5, 1.0).unwrap(), want) < 1e-14);
        let lim = green_g_lambda(1.0, 1e-8, 1.0).unwrap();
        assert!(rel(lim, green_g(1.0, 1.0).unwrap()) < 1e-6);
    }

    #[test]
    fn incomplete_gamma_examples() {
        let (l, u) = incomplete_gamma_ratios(1.0, 1.0).unwrap();
        assert!((l - (1.0 - (-1f64).exp())).abs() < 1e-15);
        assert!((u - (-1f64).exp()).abs() < 1e-15);
        assert_eq!(incomplete_gamma_ratios(2.0, 0.0).unwrap(), (0.0, 1.0));
        let (l, u) = incomplete_gamma_ratios(0.5, 200.0).unwrap();
        assert!(l > 1.0 - 1e-15 && u < 1e-80);
        assert!(incomplete_gamma_ratios(0.0, 1.0).is_err());
    }

    #[test]
    fn e1_values() {
        assert!(rel(exp_int_e1(0.5).unwrap(), 0.559_773_594_776_160_8) < 1e-14);
        assert!(rel(exp_int_e1(1.0).unwrap(), 0.219_383_934_395_520_27) < 1e-14);
        assert!(rel(exp_int_e1(3.0).unwrap(), 0.013_048_381_094_197_037) < 1e-13);
        assert!(rel(exp_int_e1(50.0).unwrap(), 3.783_264_029_550_459e-24) < 1e-13);
    }

    proptest! {
        #[test]
        fn k_is_even_in_order(nu in 0.0f64..6.0, x in 0.01f64..80.0) {
            prop_assert_eq!(bessel_k(nu, x).unwrap(), bessel_k(-nu, x).unwrap());
        }

        #[test]
        fn k_recurrence(nu in 0.0f64..4.0, x in 0.05f64..60.0) {
            // K_{nu+1} - K_{nu-1} = (2 nu / x) K_nu
            let km = bessel_k(nu - 1.0, x).unwrap();
            let k0 = bessel_k(nu, x).unwrap();
            let kp = bessel_k(nu + 1.0, x).unwrap();
            let lhs = kp - km;
            prop_assert!((lhs - 2.0 * nu / x * k0).abs() <= 1e-12 * kp.abs());
        }

        #[test]
        fn lambda_increasing(nu in 0.0f64..3.0, y in 0.001f64..50.0, dy in 1e-3f64..5.0) {
            prop_assert!(lambda_nu(nu, y + dy).unwrap() > lambda_nu(nu, y).unwrap());
        }

        #[test]
        fn heat_kernel_scaling(nu in -0.9f64..3.0, t in 0.01f64..100.0, x in 0.0f64..20.0, a in 0.1f64..10.0) {
            let o = Order::new(nu).unwrap();
            let lhs = gaussian_weight(o, t / (a * a), x / a).unwrap();
            let rhs = a.powf(o.d()) * gaussian_weight(o, t, x).unwrap();
            prop_assert!(lhs == rhs || rel(lhs, rhs) < 1e-12);
        }

        #[test]
        fn green_lambda_scaling(nu in 0.0f64..3.0, lam in 0.01f64..10.0, x in 0.1f64..10.0) {
            let lhs = green_g_lambda(nu, lam, x).unwrap() * x.powf(2.0 * nu);
            let rhs = green_g_lambda(nu, x * x * lam, 1.0).unwrap();
            prop_assert!(rel(lhs, rhs) < 1e-12);
        }

        #[test]
        fn incomplete_gamma_pair_sums_to_one(nu in 0.05f64..10.0, y in 0.0f64..50.0) {
            let (l, u) = incomplete_gamma_ratios(nu, y).unwrap();
            prop_assert_eq!(l + u, 1.0);
        }
    }
}
