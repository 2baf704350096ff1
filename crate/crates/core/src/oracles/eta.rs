//! The correction `eta = q - thm2_leading` as an integral over the jump
//! of its transform across the negative real axis.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{FptError, Result};
use crate::fpt::{reduce_scaling, FptQuery};
use crate::quad::{geometric_breaks, integrate_points, Tolerance};
use crate::specfun::{gamma, recip_gamma};

const DECAY: f64 = 46.0;
const MAX_SERIES_ARG: f64 = 12.0;

/// `1 - Phi(lam)` at `lam = -u + i0`, where
/// `Phi(lam) = Gamma(1-nu) (z/2)^nu [I_{-nu}(z) - I_nu(z)]`, `z = sqrt(2 lam)`,
/// normalized so that `Phi(0) = 1`.
fn one_minus_phi(nu: f64, g1: f64, u: f64) -> Complex64 {
    let h = -0.5 * u;
    let (mut a, mut b) = (0.0, recip_gamma(1.0 + nu));
    let (mut pow, mut fact) = (1.0, 1.0);
    for k in 1..200 {
        pow *= h;
        fact *= k as f64;
        let ta = pow / fact * recip_gamma(k as f64 + 1.0 - nu);
        let tb = pow / fact * recip_gamma(k as f64 + 1.0 + nu);
        a += ta;
        b += tb;
        if ta.abs() < 1e-18 * a.abs().max(1e-300) && tb.abs() < 1e-18 * b.abs() && k as f64 > u {
            break;
        }
    }
    let jump = Complex64::from_polar((0.5 * u).powf(nu), PI * nu);
    -g1 * a + g1 * jump * b
}

/// `eta(x, t)` for non-integer `nu > 0`, `x > a`, `t/a^2 > 2`.
pub fn eta_branch_cut(q: &FptQuery) -> Result<f64> {
    q.require_exterior()?;
    let nu = q.nu();
    if !(nu > 0.0) || (nu - nu.round()).abs() < 1e-3 {
        return Err(FptError::domain(format!(
            "branch-cut correction needs non-integer nu > 0 (|nu - round(nu)| >= 1e-3), got {nu}"
        )));
    }
    let (u, f) = reduce_scaling(q);
    let (x, t) = (u.x, u.t);
    if !(t > 2.0) {
        return Err(FptError::domain(format!(
            "branch-cut correction needs t/a^2 > 2, got {t}"
        )));
    }
    let u_max = DECAY / t;
    if (2.0 * x * x * u_max).sqrt() > MAX_SERIES_ARG {
        return Err(FptError::domain(format!(
            "branch-cut correction needs x/a <= {:.3} sqrt(t/a^2) for the series continuation",
            MAX_SERIES_ARG / (2.0 * DECAY).sqrt()
        )));
    }
    let g1 = gamma(1.0 - nu);
    let xm = x.powf(-2.0 * nu);
    let x2 = x * x;
    // R = x^{-2nu} [1 + d1 (d1 - dx) / Phi(lam)] with d = 1 - Phi; the
    // constant carries no jump.
    let g = |s: f64| {
        let d1 = one_minus_phi(nu, g1, s);
        let dx = one_minus_phi(nu, g1, x2 * s);
        let im = (d1 * (d1 - dx) / (1.0 - d1)).im;
        -xm * im * (-t * s).exp() / PI
    };
    let u0 = 1.0 / t;
    let mut pts = geometric_breaks(u0, 24);
    for k in 2..=DECAY as usize {
        pts.push(k as f64 * u0);
    }
    let r = integrate_points(g, &pts, Tolerance::new(0.0, 1e-12).with_max_intervals(4000))?;
    Ok(r.value * f)
}
