//! Bromwich inversion on the unit barrier, `nu >= 0`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use super::{BromwichContour, InversionConfig};
use crate::error::{FptError, Result};
use crate::quad::{geometric_breaks, integrate_points, Tolerance};
use crate::specfun::{bessel_jy, bessel_k_complex_scaled, gamma, EULER_GAMMA};

/// Decay, in e-folds, at which the vertical contour is truncated.
const LINE_DECAY: f64 = 42.0;
/// `e^{-t s^2/2}` is dropped below `e^{-46}` on the cut.
const CUT_DECAY: f64 = 46.0;
const MAX_PANELS: usize = 50_000;

enum Target {
    Density,
    Distribution,
}

fn use_line(x: f64, t: f64, cfg: &InversionConfig) -> bool {
    match cfg.contour {
        BromwichContour::Line => true,
        BromwichContour::BranchCut => false,
        BromwichContour::Auto => {
            cfg.bromwich_sigma.is_some()
                || cfg.bromwich_cutoff.is_some()
                || (x - 1.0).powi(2) / (2.0 * t) > 3.0
        }
    }
}

fn check(nu: f64, x: f64, t: f64) -> Result<()> {
    if !(nu >= 0.0) || !(x > 1.0) || !(t > 0.0) || !x.is_finite() || !t.is_finite() {
        return Err(FptError::domain(format!(
            "unit-barrier inversion needs nu >= 0, x > 1, t > 0 (got {nu}, {x}, {t})"
        )));
    }
    Ok(())
}

/// Density `q(x, t; 1)` and an absolute error estimate.
pub fn bromwich_density(nu: f64, x: f64, t: f64, cfg: &InversionConfig) -> Result<(f64, f64)> {
    check(nu, x, t)?;
    if use_line(x, t, cfg) {
        line(nu, x, t, cfg, Target::Density)
    } else {
        cut_density(nu, x, t, cfg)
    }
}

/// `P_x[sigma_1 <= t]`.
pub fn bromwich_distribution(nu: f64, x: f64, t: f64, cfg: &InversionConfig) -> Result<f64> {
    check(nu, x, t)?;
    if use_line(x, t, cfg) {
        Ok(line(nu, x, t, cfg, Target::Distribution)?.0)
    } else {
        cut_distribution(nu, x, t, cfg)
    }
}

/// `(1/pi) int_0^inf Re[e^{zt} F(z) / z^k] du` on `z = sigma + iu`, with `F`
/// written through `e^z K` so the exponentials combine before
/// exponentiating.
fn line(nu: f64, x: f64, t: f64, cfg: &InversionConfig, target: Target) -> Result<(f64, f64)> {
    let d = x - 1.0;
    let sigma = cfg
        .bromwich_sigma
        .unwrap_or_else(|| (2.0 / t).max(d * d / (2.0 * t * t)));
    let u_end = cfg.bromwich_cutoff.unwrap_or_else(|| {
        let r = (2.0 * sigma).sqrt() + LINE_DECAY / d;
        let modulus = r * r - sigma;
        (modulus * modulus - sigma * sigma).max(0.0).sqrt()
    });
    let width = (PI / t).max(u_end / MAX_PANELS as f64);
    let panels = (u_end / width).ceil().max(1.0) as usize;
    let pts: Vec<f64> = (0..=panels)
        .map(|k| (k as f64 * width).min(u_end))
        .collect();
    let mut failure = None;
    let lnx = x.ln();
    let g = |u: f64| {
        let z = Complex64::new(sigma, u);
        let w = (2.0 * z).sqrt();
        let ratio = match (
            bessel_k_complex_scaled(nu, w * x),
            bessel_k_complex_scaled(nu, w),
        ) {
            (Ok(a), Ok(b)) => a / b,
            (Err(e), _) | (_, Err(e)) => {
                failure.get_or_insert(e);
                return 0.0;
            }
        };
        let mut v = ratio * (z * t - d * w - nu * lnx).exp();
        if let Target::Distribution = target {
            v /= z;
        }
        v.re / PI
    };
    let tol = Tolerance::new(0.0, cfg.quad_tol).with_max_intervals(panels * 8 + 2000);
    let r = integrate_points(g, &pts, tol)?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok((r.value, r.abs_err))
}

/// `[J(s)Y(xs) - J(xs)Y(s)] / [J(s)^2 + Y(s)^2]`.
fn weber_ratio(nu: f64, x: f64, s: f64) -> Result<f64> {
    let (j1, y1) = bessel_jy(nu, s)?;
    let (jx, yx) = bessel_jy(nu, x * s)?;
    Ok((j1 * yx - jx * y1) / (j1 * j1 + y1 * y1))
}

fn cut_grid(x: f64, t: f64, s_lo: f64, levels: usize) -> (Vec<f64>, f64) {
    let s_max = (2.0 * CUT_DECAY / t).sqrt();
    let s0 = (1.0 / t.sqrt()).min(PI / x);
    let mut pts = geometric_breaks(s0, levels);
    pts[0] = s_lo;
    let width = (PI / x).min(s_max / 8.0);
    let mut s = s0 + width;
    while s < s_max {
        pts.push(s);
        s += width;
    }
    pts.push(s_max.max(s0 * 1.5));
    (pts, s0)
}

/// Weber-type integral on the cut:
/// `q = (x^{-nu}/pi) int_0^inf R(s) e^{-t s^2/2} s ds`.
fn cut_density(nu: f64, x: f64, t: f64, cfg: &InversionConfig) -> Result<(f64, f64)> {
    let (pts, _) = cut_grid(x, t, 0.0, 12);
    let n = pts.len();
    let mut failure = None;
    let g = |s: f64| {
        if s == 0.0 {
            return 0.0;
        }
        match weber_ratio(nu, x, s) {
            Ok(r) => r * (-0.5 * t * s * s).exp() * s,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        }
    };
    let r = integrate_points(
        g,
        &pts,
        Tolerance::new(0.0, cfg.quad_tol).with_max_intervals(n * 8 + 2000),
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    let pre = x.powf(-nu) / PI;
    Ok((pre * r.value, pre * r.abs_err))
}

/// `P = x^{-2nu} - (2/pi) x^{-nu} int_0^inf R(s) e^{-t s^2/2} ds/s`, with the
/// piece below `eps` integrated from the small-argument forms of J and Y.
fn cut_distribution(nu: f64, x: f64, t: f64, cfg: &InversionConfig) -> Result<f64> {
    let s0 = (1.0 / t.sqrt()).min(PI / x);
    let eps = 1e-6 * s0;
    let levels = ((s0 / eps).ln() / 4f64.ln()).ceil() as usize + 1;
    let (pts, _) = cut_grid(x, t, eps, levels);
    let n = pts.len();
    let mut failure = None;
    let g = |s: f64| match weber_ratio(nu, x, s) {
        Ok(r) => r * (-0.5 * t * s * s).exp() / s,
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    };
    let r = integrate_points(
        g,
        &pts,
        Tolerance::new(0.0, cfg.quad_tol).with_max_intervals(n * 8 + 2000),
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    let body = (2.0 / PI) * x.powf(-nu) * r.value;
    let tail = small_s_tail(nu, x, eps, cfg)?;
    Ok(x.powf(-2.0 * nu) - body - tail)
}

/// `(2/pi) x^{-nu} int_0^eps R(s) ds/s` with `e^{-t s^2/2} = 1`.
fn small_s_tail(nu: f64, x: f64, eps: f64, cfg: &InversionConfig) -> Result<f64> {
    if nu == 0.0 {
        let l = (eps / 2.0).ln() + EULER_GAMMA;
        return Ok(x.ln() * (2.0 / PI) * ((2.0 * l / PI).atan() + FRAC_PI_2));
    }
    if nu >= 1.0 {
        let c =
            (2.0 / nu) * -(-2.0 * nu * x.ln()).exp_m1() * 0.5f64.powf(2.0 * nu) / gamma(nu).powi(2);
        return Ok(c * eps.powf(2.0 * nu) / (2.0 * nu));
    }
    // Leading small-argument terms (z/2)^{+-nu} of J_nu, J_{-nu}; the
    // numerator then reduces to (x^nu - x^{-nu})/(pi nu) exactly.
    let (sn, cs) = (PI * nu).sin_cos();
    let (g_plus, g_minus) = (gamma(1.0 + nu), gamma(1.0 - nu));
    let num = (x.powf(nu) - x.powf(-nu)) / (PI * nu);
    // y = 2 nu lg(s/eps), ds/s = dy/(2 nu)
    let ln_alpha_eps = nu * (eps / 2.0).ln();
    let h = |y: f64| {
        let alpha = (ln_alpha_eps + 0.5 * y).exp();
        let j = alpha / g_plus;
        let yv = (j * cs - 1.0 / (alpha * g_minus)) / sn;
        num / (j * j + yv * yv)
    };
    let pts: Vec<f64> = (0..=16).map(|k| -80.0 + 5.0 * k as f64).collect();
    let r = integrate_points(h, &pts, Tolerance::new(0.0, cfg.quad_tol))?;
    Ok((2.0 / PI) * x.powf(-nu) * r.value / (2.0 * nu))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_tail_matches_leading_power_for_moderate_order() {
        let cfg = InversionConfig::default();
        let (nu, x, eps) = (0.8, 3.0, 1e-7);
        let full = small_s_tail(nu, x, eps, &cfg).unwrap();
        let c = (2.0 / nu) * (1.0 - x.powf(-2.0 * nu)) * 0.5f64.powf(2.0 * nu) / gamma(nu).powi(2);
        let lead = c * eps.powf(2.0 * nu) / (2.0 * nu);
        assert!(((full - lead) / lead).abs() < 1e-3);
    }

    #[test]
    fn hitting_probability_at_infinite_time() {
        // t -> inf drives the survival integral to zero.
        let cfg = InversionConfig::default();
        let p = cut_distribution(0.3, 2.0, 1e14, &cfg).unwrap();
        assert!((p - 2f64.powf(-0.6)).abs() < 1e-3);
    }

    #[test]
    fn rejects_bad_arguments() {
        let cfg = InversionConfig::default();
        assert!(bromwich_density(-0.1, 2.0, 1.0, &cfg).is_err());
        assert!(bromwich_density(0.1, 1.0, 1.0, &cfg).is_err());
        assert!(bromwich_distribution(0.1, 2.0, 0.0, &cfg).is_err());
    }
}
