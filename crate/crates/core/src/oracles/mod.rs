//! Ground-truth engines: Laplace inversion of the exact transform, the
//! branch-cut correction integral, Monte Carlo, and global identities.

mod bromwich;
mod checks;
mod eta;
mod mc;
mod stehfest;

pub use bromwich::{bromwich_density, bromwich_distribution};
pub use checks::{
    convolution_check, integrated_density, laplace_roundtrip_check, total_mass_check, MassCheck,
};
pub use eta::eta_branch_cut;
pub use mc::{mc_density, mc_distribution, mc_hitting, McConfig, McResult, McScheme};
pub use stehfest::{stehfest_invert, stehfest_weights};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{FptError, Result};
use crate::fpt::{
    reduce_negative_order, reduce_scaling, DensityEstimate, FptQuery, Method, Regime,
};
use crate::specfun::{bessel_k_complex_scaled, bessel_k_scaled, Order};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InversionMethod {
    GaverStehfest,
    Bromwich,
}

/// Contour used by the Bromwich inversion. `Line` is the vertical line
/// `Re z = sigma`; `BranchCut` folds the contour onto the negative axis,
/// which gives a real, absolutely convergent integral over Bessel J and Y.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BromwichContour {
    Auto,
    Line,
    BranchCut,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InversionConfig {
    pub method: InversionMethod,
    pub gs_terms: usize,
    /// Relative gap between the `gs_terms` and `gs_terms - 2` sums above
    /// which the Gaver-Stehfest result is rejected.
    pub gs_tol: f64,
    /// Abscissa of the vertical contour; `None` picks `max(2/t, saddle)`.
    pub bromwich_sigma: Option<f64>,
    /// Frequency truncation of the vertical contour; `None` picks it from
    /// the decay of the transform.
    pub bromwich_cutoff: Option<f64>,
    /// Relative tolerance of the quadratures.
    pub quad_tol: f64,
    pub contour: BromwichContour,
}

impl Default for InversionConfig {
    fn default() -> Self {
        InversionConfig {
            method: InversionMethod::Bromwich,
            gs_terms: 14,
            gs_tol: 5e-2,
            bromwich_sigma: None,
            bromwich_cutoff: None,
            quad_tol: 1e-12,
            contour: BromwichContour::Auto,
        }
    }
}

impl InversionConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.gs_terms.is_multiple_of(2) || !(4..=18).contains(&self.gs_terms) {
            return Err(FptError::InvalidConfig(format!(
                "gs_terms must be even and in [4, 18], got {}",
                self.gs_terms
            )));
        }
        if let Some(s) = self.bromwich_sigma {
            if !(s > 0.0) {
                return Err(FptError::InvalidConfig(format!(
                    "bromwich_sigma must be > 0, got {s}"
                )));
            }
        }
        if let Some(c) = self.bromwich_cutoff {
            if !(c > 0.0) {
                return Err(FptError::InvalidConfig(format!(
                    "bromwich_cutoff must be > 0, got {c}"
                )));
            }
        }
        if !(self.quad_tol > 0.0) || !(self.gs_tol > 0.0) {
            return Err(FptError::InvalidConfig("tolerances must be > 0".into()));
        }
        Ok(())
    }
}

fn check_transform_args(lam: f64, x: f64, a: f64) -> Result<()> {
    if !(a > 0.0) || !(x > a) || !x.is_finite() {
        return Err(FptError::domain(format!(
            "transform needs x > a > 0, got x = {x}, a = {a}"
        )));
    }
    if !(lam > 0.0) {
        return Err(FptError::domain(format!(
            "transform needs lambda > 0, got {lam}"
        )));
    }
    Ok(())
}

/// `E_x[e^{-lam sigma_a}] = (a/x)^nu K_nu(x sqrt(2 lam)) / K_nu(a sqrt(2 lam))`.
pub fn laplace_transform_ref(order: Order, lam: f64, x: f64, a: f64) -> Result<f64> {
    check_transform_args(lam, x, a)?;
    let nu = order.nu();
    let w = (2.0 * lam).sqrt();
    let m = nu.abs();
    let ln = nu * (a / x).ln() + bessel_k_scaled(m, x * w)?.ln()
        - bessel_k_scaled(m, a * w)?.ln()
        - (x - a) * w;
    Ok(ln.exp())
}

/// The transform continued to `Re z > 0`.
pub fn laplace_transform_complex(order: Order, z: Complex64, x: f64, a: f64) -> Result<Complex64> {
    check_transform_args(1.0, x, a)?;
    let w = (2.0 * z).sqrt();
    let nu = order.nu();
    let m = nu.abs();
    let ratio = bessel_k_complex_scaled(m, w * x)? / bessel_k_complex_scaled(m, w * a)?;
    Ok(ratio * (nu * (a / x).ln() - (x - a) * w).exp())
}

/// Unit-barrier, nonnegative-order form of a query plus the factor that
/// maps a unit density back.
fn normalize(q: &FptQuery) -> Result<(FptQuery, f64)> {
    q.require_exterior()?;
    let (mut q, mut f) = (*q, 1.0);
    if q.nu() < 0.0 {
        let (order, m) = reduce_negative_order(q.nu(), &q)?;
        q = q.with_order(order);
        f *= m;
    }
    let (u, s) = reduce_scaling(&q);
    Ok((u, f * s))
}

/// Density by Gaver-Stehfest inversion of the exact transform.
pub fn invert_gaver_stehfest(q: &FptQuery, cfg: &InversionConfig) -> Result<DensityEstimate> {
    cfg.validate()?;
    let (u, f) = normalize(q)?;
    let order = u.order;
    let (v, err) = stehfest_invert(
        |lam| laplace_transform_ref(order, lam, u.x, 1.0),
        u.t,
        cfg.gs_terms,
        cfg.gs_tol,
    )?;
    let mut e = DensityEstimate::new(v * f, Method::InversionGs, Regime::Inner);
    e.err_bound = Some(err * f);
    Ok(e)
}

/// Density by the Bromwich integral. When Gaver-Stehfest is available and
/// disagrees beyond `gs_tol`, a warning is attached.
pub fn invert_bromwich(q: &FptQuery, cfg: &InversionConfig) -> Result<DensityEstimate> {
    cfg.validate()?;
    let (u, f) = normalize(q)?;
    let (v, err) = bromwich_density(u.nu(), u.x, u.t, cfg)?;
    let mut e = DensityEstimate::new(v * f, Method::InversionBromwich, Regime::Inner);
    e.err_bound = Some(err * f);
    let order = u.order;
    if let Ok((g, _)) = stehfest_invert(
        |lam| laplace_transform_ref(order, lam, u.x, 1.0),
        u.t,
        cfg.gs_terms,
        f64::INFINITY,
    ) {
        if ((g - v) / v).abs() > cfg.gs_tol {
            e.warnings.push(format!(
                "Gaver-Stehfest disagrees with the Bromwich value ({:.6e} vs {:.6e})",
                g * f,
                v * f
            ));
        }
    }
    Ok(e)
}

pub fn invert(q: &FptQuery, cfg: &InversionConfig) -> Result<DensityEstimate> {
    match cfg.method {
        InversionMethod::GaverStehfest => invert_gaver_stehfest(q, cfg),
        InversionMethod::Bromwich => invert_bromwich(q, cfg),
    }
}

/// `P_x[sigma_a <= t]` by inverting `F(lambda)/lambda`.
pub fn distribution_inversion(q: &FptQuery, cfg: &InversionConfig) -> Result<f64> {
    cfg.validate()?;
    q.require_exterior()?;
    let (mut q, mut mult) = (*q, 1.0);
    if q.nu() < 0.0 {
        let (order, m) = reduce_negative_order(q.nu(), &q)?;
        q = q.with_order(order);
        mult = m;
    }
    let (u, _) = reduce_scaling(&q);
    let v = match cfg.method {
        InversionMethod::GaverStehfest => {
            let order = u.order;
            stehfest_invert(
                |lam| Ok(laplace_transform_ref(order, lam, u.x, 1.0)? / lam),
                u.t,
                cfg.gs_terms,
                cfg.gs_tol,
            )?
            .0
        }
        InversionMethod::Bromwich => bromwich_distribution(u.nu(), u.x, u.t, cfg)?,
    };
    Ok((v * mult).clamp(0.0, 1.0))
}
