//! Global identities of the inversion density.

use serde::{Deserialize, Serialize};

use super::{bromwich_density, laplace_transform_ref, InversionConfig};
use crate::error::{FptError, Result};
use crate::quad::{gauss_legendre, integrate_points, KahanSum, Tolerance};
use crate::specfun::{gaussian_weight, incomplete_gamma_ratios, Order};

/// Below this exponent `e^{-(x-1)^2/2t}` the density is treated as zero.
const UNDERFLOW: f64 = 700.0;

/// Unit-barrier inversion density for any order.
fn unit_q(nu: f64, x: f64, t: f64, cfg: &InversionConfig) -> Result<f64> {
    if (x - 1.0).powi(2) / (2.0 * t) > UNDERFLOW {
        return Ok(0.0);
    }
    let v = bromwich_density(nu.abs(), x, t, cfg)?.0;
    Ok(if nu < 0.0 { v * x.powf(-2.0 * nu) } else { v })
}

/// `int_{t_lo}^{t_hi} w(t) q(x, t) dt` over `lg t`, one breakpoint per unit.
fn log_time_integral<W: Fn(f64) -> f64>(
    nu: f64,
    x: f64,
    t_lo: f64,
    t_hi: f64,
    w: W,
    rel: f64,
) -> Result<f64> {
    let cfg = InversionConfig::default();
    let (s0, s1) = (t_lo.ln(), t_hi.ln());
    let n = (s1 - s0).ceil().max(1.0) as usize;
    let pts: Vec<f64> = (0..=n)
        .map(|k| s0 + (s1 - s0) * k as f64 / n as f64)
        .collect();
    let mut failure = None;
    let g = |s: f64| {
        let t = s.exp();
        match unit_q(nu, x, t, &cfg) {
            Ok(v) => v * w(t) * t,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        }
    };
    let r = integrate_points(
        g,
        &pts,
        Tolerance::new(1e-300, rel).with_max_intervals(20 * n + 200),
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(r.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassCheck {
    pub mass: f64,
    pub target: f64,
    /// Part of `mass` contributed by the closed-form tail beyond the
    /// quadrature range.
    pub tail: f64,
}

impl MassCheck {
    pub fn relative_error(&self) -> f64 {
        ((self.mass - self.target) / self.target).abs()
    }
}

/// `int_0^inf q dt` against `(a/x)^{2nu}`. The range beyond `T = 10^6 (x/a)^2`
/// is completed with the integral of the large-time leading term,
/// `(a/x)^{2nu} [P(nu, x^2/2T) - P(nu, a^2/2T)]` in regularized lower
/// incomplete gammas.
pub fn total_mass_check(order: Order, x: f64, a: f64) -> Result<MassCheck> {
    let nu = order.nu();
    if !(nu > 0.0) || !(a > 0.0) || !(x > a) {
        return Err(FptError::domain(format!(
            "mass check needs nu > 0 and x > a > 0 (nu = {nu})"
        )));
    }
    let x = x / a;
    let target = x.powf(-2.0 * nu);
    let t_lo = (x - 1.0).powi(2) / (2.0 * UNDERFLOW);
    let t_hi = 1e6 * x * x;
    let body = log_time_integral(nu, x, t_lo, t_hi, |_| 1.0, 1e-9)?;
    let tail = target
        * (incomplete_gamma_ratios(nu, x * x / (2.0 * t_hi))?.0
            - incomplete_gamma_ratios(nu, 0.5 / t_hi)?.0);
    Ok(MassCheck {
        mass: body + tail,
        target,
        tail,
    })
}

/// `|int_0^inf e^{-lam t} q dt - F(lam)| / F(lam)`.
pub fn laplace_roundtrip_check(order: Order, x: f64, a: f64, lam: f64) -> Result<f64> {
    let reference = laplace_transform_ref(order, lam, x, a)?;
    let (x, lam) = (x / a, lam * a * a);
    let t_lo = (x - 1.0).powi(2) / (2.0 * UNDERFLOW);
    let t_hi = UNDERFLOW / lam;
    let v = log_time_integral(order.nu(), x, t_lo, t_hi, |t| (-lam * t).exp(), 1e-9)?;
    Ok(((v - reference) / reference).abs())
}

/// `P_x[sigma_a <= t]` as the quadrature of the inversion density over
/// `(0, t]`.
pub fn integrated_density(order: Order, x: f64, a: f64, t: f64) -> Result<f64> {
    if !(a > 0.0) || !(x > a) || !(t > 0.0) {
        return Err(FptError::domain(
            "integrated density needs x > a > 0 and t > 0",
        ));
    }
    let (x, t) = (x / a, t / (a * a));
    let t_lo = (x - 1.0).powi(2) / (2.0 * UNDERFLOW);
    if t <= t_lo {
        return Ok(0.0);
    }
    log_time_integral(order.nu(), x, t_lo, t, |_| 1.0, 1e-10)
}

/// Relative residual of `p_t(x) = int_0^t q(x, t-s; 1) p_s(1) ds`, the
/// right side by Gauss-Legendre with `resolution` nodes (16 per panel).
pub fn convolution_check(order: Order, x: f64, t: f64, resolution: usize) -> Result<f64> {
    let nu = order.nu();
    if !(nu >= 0.0) || !(x > 1.0) || !(t > 0.0) {
        return Err(FptError::domain(
            "convolution check needs nu >= 0, x > 1, t > 0",
        ));
    }
    let panels = (resolution / 16).max(1);
    let (nodes, weights) = gauss_legendre(16);
    let cfg = InversionConfig::default();
    let h = t / panels as f64;
    let mut acc = KahanSum::default();
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * h;
        for (z, w) in nodes.iter().zip(&weights) {
            let s = mid + 0.5 * h * z;
            let ps = gaussian_weight(order, s, 1.0)?;
            if ps == 0.0 {
                continue;
            }
            acc.add(0.5 * h * w * unit_q(nu, x, t - s, &cfg)? * ps);
        }
    }
    let lhs = gaussian_weight(order, t, x)?;
    Ok(((lhs - acc.sum()) / lhs).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn o(nu: f64) -> Order {
        Order::new(nu).unwrap()
    }

    #[test]
    fn exp_int_identity() {
        // int_0^inf e^{-b/2u^2 - lam u^2/2} du = sqrt(pi/2lam) e^{-sqrt(b lam)}
        for &(b, lam) in &[(0.0, 1.0), (1.0, 1.0), (2.0, 0.3), (0.5, 7.0)] {
            let g = |u: f64| {
                if u == 0.0 {
                    if b == 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    (-b / (2.0 * u * u) - lam * u * u / 2.0).exp()
                }
            };
            let pts: Vec<f64> = (0..=40).map(|k| k as f64 * 0.5).collect();
            let v = integrate_points(g, &pts, Tolerance::new(0.0, 1e-13))
                .unwrap()
                .value;
            let want = (PI / (2.0 * lam)).sqrt() * (-(b * lam).sqrt()).exp();
            assert!(
                ((v - want) / want).abs() < 1e-11,
                "b={b} lam={lam}: {v} vs {want}"
            );
        }
    }

    #[test]
    fn half_order_mass() {
        let m = total_mass_check(o(0.5), 2.0, 1.0).unwrap();
        assert!(m.relative_error() < 1e-4, "{m:?}");
        let m = total_mass_check(o(2.0), 4.0, 1.0).unwrap();
        assert_eq!(m.target, 1.0 / 256.0);
        assert!(m.relative_error() < 1e-4, "{m:?}");
        assert!(total_mass_check(o(0.0), 2.0, 1.0).is_err());
    }

    #[test]
    fn integrated_density_matches_distribution() {
        let v = integrated_density(o(0.5), 3.0, 1.5, 2.0).unwrap();
        let q = crate::fpt::FptQuery::new(0.5, 3.0, 1.5, 2.0).unwrap();
        let want = crate::fpt::closed_form_cdf_d3(&q);
        assert!(((v - want) / want).abs() < 1e-8, "{v} vs {want}");
    }

    #[test]
    fn half_order_roundtrip() {
        for lam in [1.0, 10.0] {
            let r = laplace_roundtrip_check(o(0.5), 2.0, 1.0, lam).unwrap();
            assert!(r < 1e-4, "lam={lam}: {r}");
        }
    }

    #[test]
    fn half_order_convolution() {
        let r = convolution_check(o(0.5), 2.0, 4.0, 512).unwrap();
        assert!(r < 1e-3, "{r}");
    }
}
