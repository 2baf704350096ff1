//! Closed-form asymptotic evaluators for the density and the distribution.
//!
//! Every evaluator works on the unit-barrier query `(x/a, t/a^2)` and scales
//! back, so logarithms read `lg(t/a^2)` where a formula is usually quoted
//! with `lg t`.

mod constants;

pub use constants::OConstants;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{FptError, Result};
use crate::fpt::{classify_regime, reduce_scaling, FptQuery, Regime, DEFAULT_PARABOLIC_CAP};
use crate::quad::{integrate_points, Tolerance};
use crate::specfun::{
    self, bessel_k_scaled, exp_int_e1, incomplete_gamma_ratios, ln_gamma, ln_lambda_nu,
    ln_lambda_nu_scaled, recip_gamma, Order, EULER_GAMMA,
};

/// Symbolic error term plus its evaluated magnitude. `bound` is the
/// magnitude times a fitted constant, present only where one is calibrated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorOrder {
    pub expr: String,
    pub scale: Option<f64>,
    pub bound: Option<f64>,
}

impl ErrorOrder {
    fn symbolic(expr: &str) -> Self {
        ErrorOrder {
            expr: expr.to_string(),
            scale: None,
            bound: None,
        }
    }

    fn with_scale(expr: &str, scale: f64) -> Self {
        ErrorOrder {
            expr: expr.to_string(),
            scale: Some(scale),
            bound: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticValue {
    pub value: f64,
    pub error_order: ErrorOrder,
    pub regime: Regime,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl AsymptoticValue {
    fn new(q: &FptQuery, value: f64, error_order: ErrorOrder) -> Self {
        AsymptoticValue {
            value,
            error_order,
            regime: classify_regime(q, DEFAULT_PARABOLIC_CAP),
            warnings: Vec::new(),
        }
    }

    fn scaled(mut self, f: f64) -> Self {
        self.value *= f;
        self.error_order.scale = self.error_order.scale.map(|s| s * f);
        self.error_order.bound = self.error_order.bound.map(|s| s * f);
        self
    }

    fn clamp_nonnegative(mut self, what: &str) -> Self {
        if self.value < 0.0 {
            self.warnings.push(format!(
                "{what} is negative here (outside its regime); clamped to 0"
            ));
            self.value = 0.0;
        }
        self
    }
}

fn unit(q: &FptQuery) -> Result<(f64, f64, f64)> {
    q.require_exterior()?;
    let (u, f) = reduce_scaling(q);
    Ok((u.x, u.t, f))
}

fn require_nu_zero(q: &FptQuery, what: &str) -> Result<()> {
    if q.nu() != 0.0 {
        return Err(FptError::domain(format!(
            "{what} needs nu = 0, got {}",
            q.nu()
        )));
    }
    Ok(())
}

fn require_nu_nonneg(q: &FptQuery, what: &str) -> Result<()> {
    if q.nu() < 0.0 {
        return Err(FptError::domain(format!(
            "{what} needs nu >= 0 (reduce negative orders first), got {}",
            q.nu()
        )));
    }
    Ok(())
}

fn require_nu_pos(q: &FptQuery, what: &str) -> Result<()> {
    if !(q.nu() > 0.0) {
        return Err(FptError::domain(format!(
            "{what} needs nu > 0, got {}",
            q.nu()
        )));
    }
    Ok(())
}

/// Whether the two-dimensional inner-regime formula applies: `nu = 0`,
/// `t/a^2 > e` and `lg(kappa t/a^2) > 0`.
pub fn thm1_applicable(q: &FptQuery) -> bool {
    let (u, _) = reduce_scaling(q);
    q.nu() == 0.0 && u.t > std::f64::consts::E && (specfun::kappa() * u.t).ln() > 0.0
}

/// `nu = 0`: `lg(kappa x^2/2)/(t lg^2(kappa t)) e^{-x^2/2t}` plus the
/// `2 gamma lg(t/x^2)/(t lg^3 t)` correction when `x^2 < t`.
pub fn thm1_nu0(q: &FptQuery) -> Result<AsymptoticValue> {
    require_nu_zero(q, "thm1")?;
    let (x, t, f) = unit(q)?;
    if !thm1_applicable(q) {
        return Err(FptError::domain(format!(
            "thm1 needs t/a^2 > max(1, e) with lg(kappa t/a^2) > 0, got t/a^2 = {t}"
        )));
    }
    let kappa = specfun::kappa();
    let lt = t.ln();
    let lead =
        (0.5 * kappa * x * x).ln() / (t * (kappa * t).ln().powi(2)) * (-x * x / (2.0 * t)).exp();
    let (corr, err) = if x * x < t {
        (
            2.0 * EULER_GAMMA * (t / (x * x)).ln() / (t * lt.powi(3)),
            ErrorOrder::with_scale("O(1/(t lg^3 t))", 1.0 / (t * lt.powi(3))),
        )
    } else {
        let l = (x * x / t).ln();
        (
            0.0,
            ErrorOrder::with_scale(
                "O((1+lg^2(x^2/t))/(x^2 lg^3 t))",
                (1.0 + l * l) / (x * x * lt.powi(3)),
            ),
        )
    };
    Ok(AsymptoticValue::new(q, lead + corr, err)
        .clamp_nonnegative("thm1 value")
        .scaled(f))
}

/// `W(lambda) = int_0^inf e^{-lambda u} / (lg^2 u + pi^2) du`.
pub fn w_function(lam: f64) -> Result<f64> {
    if !(lam > 0.0) || !lam.is_finite() {
        return Err(FptError::domain(format!("W needs lambda > 0, got {lam}")));
    }
    // u = e^s / lambda; the integrand decays like e^s to the left and
    // double-exponentially to the right.
    let l = lam.ln();
    let g = |s: f64| (s - s.exp()).exp() / ((s - l) * (s - l) + PI * PI);
    let pts: Vec<f64> = (0..=38)
        .map(|k| -70.0 + 2.0 * k as f64)
        .chain([4.0, 5.0])
        .collect();
    let r = integrate_points(g, &pts, Tolerance::new(0.0, 1e-13))?;
    Ok(r.value / lam)
}

/// `nu = 0`: `2 lg(x/a) (kappa/a^2) W(kappa t/a^2)`.
pub fn q2_w_formula(q: &FptQuery) -> Result<AsymptoticValue> {
    require_nu_zero(q, "W formula")?;
    let (x, t, f) = unit(q)?;
    let kappa = specfun::kappa();
    let v = 2.0 * x.ln() * kappa * w_function(kappa * t)?;
    let lt = t.ln();
    let scale = x.ln() / (t * lt * lt) * (x * x).min(t) / t;
    Ok(AsymptoticValue::new(
        q,
        v,
        ErrorOrder::with_scale("O(lg(x/a)/(t lg^2 t) (x^2 ^ t)/t)", scale),
    )
    .scaled(f))
}

fn order_class(nu: f64) -> &'static str {
    if nu < 1.0 {
        "nu_lt_1"
    } else if nu == 1.0 {
        "nu_eq_1"
    } else {
        "nu_gt_1"
    }
}

/// Unit-barrier leading term `Lambda_nu(0) [p_t(x) - x^{-2nu} p_t(1)]`.
fn thm2_unit(nu: f64, x: f64, t: f64) -> f64 {
    let ln_pre =
        ln_lambda_nu(nu, 0.0).expect("nu > 0") - (nu + 1.0) * (2.0 * PI * t).ln() - 0.5 / t;
    let bracket = -(-2.0 * nu * x.ln()).exp_m1() + (-(x * x - 1.0) / (2.0 * t)).exp_m1();
    ln_pre.exp() * bracket
}

/// `nu > 0`: `(1/G(a)) [p_t(x) - (a/x)^{2nu} p_t(a)]`, clamped at 0.
pub fn thm2_leading(q: &FptQuery) -> Result<AsymptoticValue> {
    require_nu_pos(q, "thm2")?;
    let (x, t, f) = unit(q)?;
    let nu = q.nu();
    let v = thm2_unit(nu, x, t);
    let err = if nu == 1.0 {
        if x * x < t {
            ErrorOrder::with_scale(
                "O((1+lg(t/x^2))/t^3)",
                (1.0 + (t / (x * x)).ln()) / t.powi(3),
            )
        } else {
            ErrorOrder::with_scale(
                "O((lg t/t^3)(sqrt(t)/x)^{3/2})",
                t.ln() / t.powi(3) * (t.sqrt() / x).powf(1.5),
            )
        }
    } else {
        let p = nu + 0.5f64.min(nu);
        let s = 1f64.min((t.sqrt() / x).powf(p)) / t.powf(nu + 1.0 + nu.min(1.0));
        ErrorOrder::with_scale("O((1 ^ (sqrt(t)/x)^{nu+(1/2 ^ nu)})/t^{nu+1+(nu ^ 1)})", s)
    };
    let mut av = AsymptoticValue::new(q, v, err);
    if let (Some(c), Some(s)) = (
        OConstants::embedded().get(&format!("thm2.{}", order_class(nu))),
        av.error_order.scale,
    ) {
        av.error_order.bound = Some(c * s);
    }
    Ok(av.clamp_nonnegative("thm2 leading term").scaled(f))
}

/// One explicit term `coefficient * t^{t_power} * (lg t)^{log_power}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaTerm {
    pub coefficient: f64,
    pub t_power: f64,
    pub log_power: u32,
    pub description: String,
}

impl EtaTerm {
    pub fn eval(&self, t: f64) -> f64 {
        self.coefficient * t.powf(self.t_power) * t.ln().powi(self.log_power as i32)
    }
}

/// Coefficients of the small-lambda expansion and the explicit terms of
/// the correction `eta(x,t)` on the unit barrier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaExpansion {
    pub nu: f64,
    pub a1: f64,
    pub b0: f64,
    pub leading_terms: Vec<EtaTerm>,
    pub validity: String,
}

impl EtaExpansion {
    pub fn value(&self, t: f64) -> f64 {
        self.leading_terms.iter().map(|term| term.eval(t)).sum()
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// `(A_1, B_0)` for order `nu > 0`.
pub fn eta_coefficients(nu: f64) -> (f64, f64) {
    if nu.fract() != 0.0 {
        let a1 = 1.0 / (2.0 * (1.0 - nu));
        let b0 = (-nu * 2f64.ln() + ln_gamma_signed(1.0 - nu)).exp() * gamma_sign(1.0 - nu)
            / specfun::gamma(nu + 1.0);
        (a1, b0)
    } else {
        let n = nu as u32;
        let b0 = if n.is_multiple_of(2) { 1.0 } else { -1.0 }
            / (2f64.powi(n as i32) * factorial(n) * factorial(n - 1));
        let a1 = if n == 1 {
            -0.5 * (1.0 + specfun::kappa().ln())
        } else {
            -1.0 / (2.0 * (nu - 1.0))
        };
        (a1, b0)
    }
}

fn ln_gamma_signed(x: f64) -> f64 {
    specfun::gamma(x).abs().ln()
}

fn gamma_sign(x: f64) -> f64 {
    specfun::gamma(x).signum()
}

/// Explicit form of the correction `eta = q - thm2` for `a < x < M sqrt(t)`.
/// Returns the expansion (on the unit barrier) and the value in the
/// query's units.
pub fn prop1_eta(q: &FptQuery, m_cap: f64) -> Result<(EtaExpansion, f64)> {
    require_nu_pos(q, "eta expansion")?;
    let (x, t, f) = unit(q)?;
    if !(x < m_cap * t.sqrt()) {
        return Err(FptError::domain(format!(
            "eta expansion needs x < M sqrt(t) (M = {m_cap})"
        )));
    }
    if !(t > 2.0) {
        return Err(FptError::domain(format!(
            "eta expansion needs t/a^2 > 2, got {t}"
        )));
    }
    let nu = q.nu();
    let (a1, b0) = eta_coefficients(nu);
    let xm = x.powf(-2.0 * nu);
    let shape = 1.0 - xm + (x * x - 1.0) * xm;
    let mut terms = Vec::new();
    if nu.fract() != 0.0 {
        let c1 = -(nu + 1.0) / (2f64.powf(nu + 1.0) * (nu - 1.0) * specfun::gamma(nu));
        terms.push(EtaTerm {
            coefficient: c1 * shape,
            t_power: -(nu + 2.0),
            log_power: 0,
            description:
                "-(nu+1)/(2^{nu+1}(nu-1)Gamma(nu)) (1 - x^{-2nu} + (x^2-1)x^{-2nu}) t^{-nu-2}"
                    .into(),
        });
        terms.push(EtaTerm {
            coefficient: -b0 * b0 * (1.0 - xm) * recip_gamma(-2.0 * nu),
            t_power: -(2.0 * nu + 1.0),
            log_power: 0,
            description: "-B0^2 (1 - x^{-2nu}) / (Gamma(-2nu) t^{2nu+1})".into(),
        });
    } else if nu >= 2.0 {
        let n = nu as u32;
        let sign = if (n + 1).is_multiple_of(2) { 1.0 } else { -1.0 };
        terms.push(EtaTerm {
            coefficient: -sign * factorial(n + 1) * a1 * b0 * shape,
            t_power: -(nu + 2.0),
            log_power: 0,
            description: "-(-1)^{nu+1}(nu+1)! A1 B0 (1 - x^{-2nu} + (x^2-1)x^{-2nu}) t^{-nu-2}"
                .into(),
        });
    } else {
        terms.push(EtaTerm {
            coefficient: -4.0 * b0 * b0 * (1.0 - 1.0 / (x * x)),
            t_power: -3.0,
            log_power: 1,
            description: "-4 B0^2 (1 - x^{-2}) lg t / t^3".into(),
        });
        terms.push(EtaTerm {
            coefficient: 4.0 * b0 * b0 * x.ln(),
            t_power: -3.0,
            log_power: 0,
            description: "4 B0^2 lg x / t^3".into(),
        });
    }
    let exp = EtaExpansion {
        nu,
        a1,
        b0,
        leading_terms: terms,
        validity: format!("a < x < {m_cap} sqrt(t), t/a^2 > 2"),
    };
    let v = exp.value(t) * f;
    Ok((exp, v))
}

/// Order bound on `eta` for `x > sqrt(t) > 2`, times a fitted constant.
pub fn prop2_eta_bound(q: &FptQuery) -> Result<f64> {
    require_nu_pos(q, "eta bound")?;
    let (x, t, f) = unit(q)?;
    if !(t.sqrt() > 2.0 && x > t.sqrt()) {
        return Err(FptError::domain(
            "eta bound needs x > sqrt(t) > 2 on the unit barrier",
        ));
    }
    let nu = q.nu();
    let r = t.sqrt() / x;
    let s = if nu > 1.0 {
        t.powf(-nu - 2.0) * r.powf(nu + 0.5)
    } else if nu < 1.0 {
        t.powf(-2.0 * nu - 1.0) * r.powf(nu + 0.5f64.min(nu))
    } else {
        t.ln() * t.powi(-3) * r.powf(1.5)
    };
    let c = OConstants::embedded()
        .get(&format!("prop2.{}", order_class(nu)))
        .unwrap_or(1.0);
    Ok(c * s * f)
}

/// Parabolic-regime density. For `nu > 0`:
/// `a^{2nu} Lambda_nu(ax/t) p_t(x) [1 - (a/x)^{2nu}]`; for `nu = 0` the
/// two-branch form split at `x = sqrt(t)`. `modified` multiplies by
/// `e^{-a^2/2t}`.
pub fn thm3_density(q: &FptQuery, modified: bool) -> Result<AsymptoticValue> {
    require_nu_nonneg(q, "thm3")?;
    let (x, t, f) = unit(q)?;
    let nu = q.nu();
    let v = if nu > 0.0 {
        thm3_unit(nu, x, t, modified)?
    } else {
        let (inner, outer) = thm3_nu0_unit(x, t, modified)?;
        if x <= t.sqrt() {
            inner
        } else {
            outer
        }
    };
    Ok(AsymptoticValue::new(q, v, ErrorOrder::symbolic("o(1) relative")).scaled(f))
}

fn thm3_unit(nu: f64, x: f64, t: f64, modified: bool) -> Result<f64> {
    // Lambda's e^{x/t} and the kernel's e^{-x^2/2t} combine exactly into
    // e^{-(x-1)^2/2t} (times e^{1/2t} when unmodified).
    let dx = x - 1.0;
    let mut expo = -dx * dx / (2.0 * t);
    if !modified {
        expo += 0.5 / t;
    }
    let ln = ln_lambda_nu_scaled(nu, x / t)? - (nu + 1.0) * (2.0 * PI * t).ln() + expo;
    Ok(ln.exp() * -(-2.0 * nu * x.ln()).exp_m1())
}

fn thm3_nu0_unit(x: f64, t: f64, modified: bool) -> Result<(f64, f64)> {
    let m = if modified { (-0.5 / t).exp() } else { 1.0 };
    let p = specfun::gaussian_weight(Order::new(0.0)?, t, x)?;
    let inner = p * 4.0 * PI * x.ln() / t.ln().powi(2) * m;
    let dx = x - 1.0;
    let mut expo = -dx * dx / (2.0 * t);
    if !modified {
        expo += 0.5 / t;
    }
    let outer = (ln_lambda_nu_scaled(0.0, x / t)? - (2.0 * PI * t).ln() + expo).exp();
    Ok((inner, outer))
}

/// Both `nu = 0` branches `(x <= sqrt t form, x > sqrt t form)` in the
/// query's units, for seam diagnostics.
pub fn thm3_nu0_branches(q: &FptQuery, modified: bool) -> Result<(f64, f64)> {
    require_nu_zero(q, "thm3 branches")?;
    let (x, t, f) = unit(q)?;
    let (i, o) = thm3_nu0_unit(x, t, modified)?;
    Ok((i * f, o * f))
}

/// Cutoffs on `x/t` (unit barrier) selecting the `nu = 0` branches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cor5Cutoffs {
    pub small: f64,
    pub large: f64,
}

impl Default for Cor5Cutoffs {
    fn default() -> Self {
        Cor5Cutoffs {
            small: 0.01,
            large: 100.0,
        }
    }
}

/// `nu = 0` three-branch form; between the cutoffs the `1/(2 K_0(ax/t))`
/// form is used.
pub fn cor5_nu0(q: &FptQuery, cut: Cor5Cutoffs) -> Result<AsymptoticValue> {
    require_nu_zero(q, "cor5")?;
    if !(cut.small > 0.0 && cut.small < cut.large) {
        return Err(FptError::InvalidConfig(format!(
            "cor5 cutoffs need 0 < small < large, got {} and {}",
            cut.small, cut.large
        )));
    }
    let (x, t, f) = unit(q)?;
    let r = x / t;
    let gauss = (-x * x / (2.0 * t)).exp() / t;
    let av = if x <= t.sqrt() {
        if !(t > 1.0) {
            return Err(FptError::domain("cor5 first branch needs t/a^2 > 1"));
        }
        let v = 2.0 * x.ln() / t.ln().powi(2) * gauss;
        AsymptoticValue::new(
            q,
            v,
            ErrorOrder::with_scale("O(1/lg t) relative", v / t.ln()),
        )
    } else if r < cut.small {
        let v = gauss / (2.0 * (t / x).ln());
        AsymptoticValue::new(
            q,
            v,
            ErrorOrder::with_scale("O(1/lg(t/x)) relative", v / (t / x).ln()),
        )
    } else if r > cut.large {
        let dx = x - 1.0;
        let v = (x / (2.0 * PI * t)).sqrt() * (-dx * dx / (2.0 * t)).exp() / t;
        AsymptoticValue::new(q, v, ErrorOrder::with_scale("O(t/x) relative", v * t / x))
    } else {
        let dx = x - 1.0;
        let expo = -dx * dx / (2.0 * t) + 0.5 / t;
        let v = (expo - (2.0 * bessel_k_scaled(0.0, r)?).ln()).exp() / t;
        AsymptoticValue::new(q, v, ErrorOrder::symbolic("o(1) relative"))
    };
    Ok(av.scaled(f))
}

/// Ballistic-regime expansion: the leading term and the first correction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma5 {
    pub leading: f64,
    pub full: f64,
    pub beta: f64,
    pub error_order: ErrorOrder,
    pub regime: Regime,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl Lemma5 {
    pub fn as_value(&self) -> AsymptoticValue {
        AsymptoticValue {
            value: self.full,
            error_order: self.error_order.clone(),
            regime: self.regime,
            warnings: self.warnings.clone(),
        }
    }
}

/// `(x-a)/(sqrt(2 pi) t^{3/2}) e^{-(x-a)^2/2t} (a/x)^{nu+1/2} [1 + beta t/(ax)]`
/// with `beta = (1/4 - nu^2)/2`.
pub fn lemma5_ballistic(q: &FptQuery) -> Result<Lemma5> {
    require_nu_nonneg(q, "lemma5")?;
    let (x, t, f) = unit(q)?;
    let nu = q.nu();
    let beta = (0.25 - nu * nu) / 2.0;
    let dx = x - 1.0;
    let lead =
        dx / ((2.0 * PI).sqrt() * t.powf(1.5)) * (-dx * dx / (2.0 * t) - (nu + 0.5) * x.ln()).exp();
    let corr = beta * t / x;
    let mut full = lead * (1.0 + corr);
    let mut warnings = Vec::new();
    if full < 0.0 {
        warnings.push(
            "lemma5 corrected value is negative here (outside its regime); clamped to 0".into(),
        );
        full = 0.0;
    }
    let scale = (lead * corr * t.sqrt().min(t / dx)).abs();
    Ok(Lemma5 {
        leading: lead * f,
        full: full * f,
        beta,
        error_order: ErrorOrder::with_scale("O(beta t/(ax) (sqrt(t) ^ t/(x-a)))", scale * f),
        regime: classify_regime(q, DEFAULT_PARABOLIC_CAP),
        warnings,
    })
}

/// `nu > 0`: `(P[t < sigma < inf]/P[sigma < inf], P[sigma < t]/P[sigma < inf])`
/// each reported as computed, without renormalization.
pub fn thm6_distribution(q: &FptQuery) -> Result<(f64, f64)> {
    require_nu_pos(q, "thm6")?;
    let (x, t, _) = unit(q)?;
    let nu = q.nu();
    let z = x * x / (2.0 * t);
    let (lower, upper) = incomplete_gamma_ratios(nu, z)?;
    let survival = -(-2.0 * nu * x.ln()).exp_m1() * lower;
    let arrival = if upper == 0.0 {
        0.0
    } else {
        (ln_lambda_nu_scaled(nu, x / t)? + x / t - ln_lambda_nu(nu, 0.0)? + upper.ln()).exp()
    };
    Ok((survival, arrival))
}

/// `P_x[sigma_a < t]` for `x > sqrt(t / lg t)`, clamped to `[0, 1]`.
pub fn thm7_distribution(q: &FptQuery) -> Result<f64> {
    require_nu_nonneg(q, "thm7")?;
    let (x, t, _) = unit(q)?;
    if !(t > 1.0) || !(x > (t / t.ln()).sqrt()) {
        return Err(FptError::domain(format!(
            "thm7 needs t/a^2 > 1 and x/a > sqrt(t/lg t) on the unit barrier (x = {x}, t = {t})"
        )));
    }
    let nu = q.nu();
    let z = x * x / (2.0 * t);
    let y = x / t;
    let v = if nu > 0.0 {
        let (_, upper) = incomplete_gamma_ratios(nu, z)?;
        if upper == 0.0 {
            0.0
        } else {
            let ln = ln_lambda_nu_scaled(nu, y)? + y - 2.0 * nu * x.ln() + nu * 2f64.ln()
                - (nu + 1.0) * (2.0 * PI).ln()
                + ln_gamma(nu)
                + upper.ln();
            ln.exp()
        }
    } else {
        let e1 = exp_int_e1(z)?;
        if e1 == 0.0 {
            0.0
        } else {
            (e1.ln() + y - (2.0 * bessel_k_scaled(0.0, y)?).ln()).exp()
        }
    };
    Ok(v.clamp(0.0, 1.0))
}

/// `nu = 0`, `a < x <= sqrt(t)`: `1 - 2 lg(x/a)/lg(t/a^2)` clamped to `[0, 1]`.
pub fn cor6_recurrent(q: &FptQuery) -> Result<f64> {
    require_nu_zero(q, "cor6")?;
    let (u, _) = reduce_scaling(q);
    if !(u.t > 1.0) || u.x > u.t.sqrt() {
        return Err(FptError::domain(format!(
            "cor6 needs a <= x <= sqrt(t) with t/a^2 > 1 (x = {}, t = {})",
            u.x, u.t
        )));
    }
    Ok((1.0 - 2.0 * u.x.ln() / u.t.ln()).clamp(0.0, 1.0))
}

/// `nu = 0`, `x > sqrt(t / lg t)`: `E_1(x^2/2t) / (2 K_0(ax/t))`.
pub fn cor6_y2(q: &FptQuery) -> Result<f64> {
    require_nu_zero(q, "cor6 (second form)")?;
    thm7_distribution(q)
}

/// Limits of `P_x[sigma_1 < t]` for `nu = 0` along `x = mu t^alpha`.
pub fn spitzer_limits(alpha: f64, mu: f64, t: f64) -> Result<f64> {
    if !(alpha >= 0.0) || !(mu > 0.0) || !(t > 1.0) {
        return Err(FptError::domain(format!(
            "needs alpha >= 0, mu > 0, t > 1 (got {alpha}, {mu}, {t})"
        )));
    }
    if alpha < 0.5 {
        return Ok(1.0 - 2.0 * alpha);
    }
    let z = 0.5 * mu * mu * t.powf(2.0 * alpha - 1.0);
    let integral = 0.5 * exp_int_e1(z)?;
    let factor = if alpha < 1.0 {
        1.0 / ((1.0 - alpha) * t.ln())
    } else if alpha == 1.0 {
        1.0 / specfun::bessel_k(0.0, mu)?
    } else {
        let s = mu * t.powf(alpha - 1.0);
        (2.0 * s / PI).sqrt() * s.exp()
    };
    Ok(integral * factor)
}

/// Ratio `q / p_{t+1}(x)` against the crude envelope constant.
pub fn envelope_ratio(order: Order, x: f64, t: f64, q: f64) -> Result<f64> {
    Ok(q / specfun::gaussian_weight(order, t + 1.0, x)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fpt::closed_form_d3;
    use proptest::prelude::*;

    fn q(nu: f64, x: f64, a: f64, t: f64) -> FptQuery {
        FptQuery::new(nu, x, a, t).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn thm1_sign_and_value() {
        let v = thm1_nu0(&q(0.0, 2f64.sqrt(), 1.0, 1e12)).unwrap();
        assert!(v.value > 0.0);
        assert!(thm1_nu0(&q(0.3, 2.0, 1.0, 1e6)).is_err());
        assert!(thm1_nu0(&q(0.0, 2.0, 1.0, 2.0)).is_err());
    }

    #[test]
    fn w_function_asymptotics() {
        let lam: f64 = 1e8;
        let r = w_function(lam).unwrap() * lam * lam.ln().powi(2);
        assert!((r - 1.0).abs() < 0.15, "{r}");
        let l = lam.ln();
        let g = EULER_GAMMA;
        let third = 1.0 - 2.0 * g / l + (3.0 * (g * g + PI * PI / 6.0) - PI * PI) / (l * l);
        assert!((r - third).abs() < 2e-3, "{r} vs {third}");
        for l in [1e-3, 0.5, 1.0, 30.0] {
            assert!(w_function(l).unwrap() > 0.0);
        }
    }

    #[test]
    fn w_formula_against_thm1() {
        let a = q2_w_formula(&q(0.0, 2.0, 1.0, 1e6)).unwrap().value;
        let b = thm1_nu0(&q(0.0, 2.0, 1.0, 1e6)).unwrap().value;
        assert!(rel(a, b) < 0.05, "{a} vs {b}");
    }

    #[test]
    fn thm2_half_order_close_to_exact() {
        let qq = q(0.5, 3.0, 1.0, 100.0);
        let v = thm2_leading(&qq).unwrap().value;
        assert!(rel(v, closed_form_d3(&qq)) < 0.05);
        let far = thm2_leading(&q(0.5, 1e3, 1.0, 1.0)).unwrap();
        assert_eq!(far.value, 0.0);
        assert!(!far.warnings.is_empty());
        assert!(thm2_leading(&q(0.0, 2.0, 1.0, 1.0)).is_err());
    }

    #[test]
    fn thm2_two_forms_agree() {
        // (a^2/2)^nu / (Gamma(nu) t^{nu+1}) [e^{-x^2/2t} - (a/x)^{2nu} e^{-a^2/2t}]
        for &(nu, x, a, t) in &[
            (0.3, 2.0, 1.0, 50.0),
            (2.0, 5.0, 2.0, 1e3),
            (1.0, 1.5, 0.5, 7.0),
        ] {
            let v = thm2_leading(&q(nu, x, a, t)).unwrap().value;
            let w = (0.5 * a * a).powf(nu) / (specfun::gamma(nu) * t.powf(nu + 1.0))
                * ((-x * x / (2.0 * t)).exp()
                    - (a / x).powf(2.0 * nu) * (-a * a / (2.0 * t)).exp());
            assert!(rel(v, w) < 1e-12, "{v} vs {w}");
        }
    }

    #[test]
    fn eta_coefficients_match() {
        let (a1, b0) = eta_coefficients(0.3);
        assert!(rel(a1, 1.0 / 1.4) < 1e-15);
        assert!(
            rel(
                b0,
                2f64.powf(-0.3) * specfun::gamma(0.7) / specfun::gamma(1.3)
            ) < 1e-14
        );
        let (a1, b0) = eta_coefficients(2.0);
        assert_eq!((a1, b0), (-0.5, 0.125));
        let (a1, b0) = eta_coefficients(1.0);
        assert!(rel(a1, -0.5 * (1.0 + (2.0 * (-2.0 * EULER_GAMMA).exp()).ln())) < 1e-15);
        assert_eq!(b0, -0.5);
        // The integer formula continues the non-integer coefficient at nu = 2.
        let (e2, _) = prop1_eta(&q(2.0, 2.0, 1.0, 100.0), 10.0).unwrap();
        let c = -3.0 / (8.0 * specfun::gamma(2.0));
        let shape = 1.0 - 1.0 / 16.0 + 3.0 / 16.0;
        assert!(rel(e2.leading_terms[0].coefficient, c * shape) < 1e-14);
        assert_eq!(e2.leading_terms[0].coefficient, -0.375 * shape);
    }

    #[test]
    fn eta_half_order_second_term_vanishes() {
        let (e, _) = prop1_eta(&q(0.5, 2.0, 1.0, 100.0), 10.0).unwrap();
        assert_eq!(e.leading_terms[1].coefficient, 0.0);
    }

    #[test]
    fn eta_half_order_against_exact_residual() {
        // At nu = 1/2 the f^2 part of the remainder, -B0^3 (x-1)/(x Gamma(-3/2)),
        // has the same order t^{-5/2} as the explicit term, so the two
        // differ by exactly that coefficient.
        for &(x, t) in &[(2.0, 100.0), (1.5, 1e3), (4.0, 1e4)] {
            let qq = q(0.5, x, 1.0, t);
            let (e, eta) = prop1_eta(&qq, 10.0).unwrap();
            let resid = closed_form_d3(&qq) - thm2_leading(&qq).unwrap().value;
            let missing = -e.b0.powi(3) * (x - 1.0) / (x * specfun::gamma(-1.5)) * t.powf(-2.5);
            assert!(
                rel(eta + missing, resid) < 3.0 * x * x / t,
                "{eta} + {missing} vs {resid}"
            );
        }
    }

    #[test]
    fn prop2_bound_structure() {
        let t: f64 = 1e4;
        let b = prop2_eta_bound(&q(0.5, 10.0 * t.sqrt(), 1.0, t)).unwrap();
        let c = OConstants::embedded().get("prop2.nu_lt_1").unwrap();
        assert!(rel(b, c * t.powi(-2) * 0.1) < 1e-12);
        let b2 = prop2_eta_bound(&q(0.5, 20.0 * t.sqrt(), 1.0, t)).unwrap();
        assert!(b2 < b);
        assert!(prop2_eta_bound(&q(0.5, 2.0, 1.0, t)).is_err());
    }

    #[test]
    fn thm3_nu0_both_branches_at_seam() {
        let t: f64 = 1e6;
        let (i, o) = thm3_nu0_branches(&q(0.0, t.sqrt(), 1.0, t), true).unwrap();
        assert!(i > 0.0 && o > 0.0);
        let v = thm3_density(&q(0.0, t.sqrt(), 1.0, t), true).unwrap().value;
        assert_eq!(v, i);
    }

    #[test]
    fn cor5_branches() {
        // Ballistic branch against the lemma5 leading term at nu = 0.
        let qq = q(0.0, 12.0, 1.0, 0.1);
        let c = cor5_nu0(&qq, Cor5Cutoffs::default()).unwrap().value;
        let l = lemma5_ballistic(&qq).unwrap().leading;
        assert!((rel(l, c) - 1.0 / 12.0).abs() < 1e-12);
        // First branch against thm1.
        let qq = q(0.0, 2.0, 1.0, 1e8);
        let c = cor5_nu0(&qq, Cor5Cutoffs::default()).unwrap().value;
        let t = thm1_nu0(&qq).unwrap().value;
        assert!(rel(c, t) < 2.0 / (1e8f64).ln());
        assert!(cor5_nu0(
            &qq,
            Cor5Cutoffs {
                small: 1.0,
                large: 0.5
            }
        )
        .is_err());
    }

    #[test]
    fn lemma5_half_orders_exact() {
        for &(x, t) in &[(2.0, 1.0), (30.0, 20.0), (1.01, 1e-3), (5.0, 200.0)] {
            let qq = q(0.5, x, 1.0, t);
            let l = lemma5_ballistic(&qq).unwrap();
            assert_eq!(l.beta, 0.0);
            assert!(rel(l.full, closed_form_d3(&qq)) < 1e-13);
        }
    }

    #[test]
    fn thm6_limits() {
        let (_, arrival) = thm6_distribution(&q(1.0, 2.0, 1.0, 1e9)).unwrap();
        assert!((arrival - 1.0).abs() < 1e-3);
        let (survival, _) = thm6_distribution(&q(1.0, 2.0, 1.0, 1e12)).unwrap();
        assert!(survival < 1e-10);
    }

    #[test]
    fn thm7_matches_thm6_times_hitting_probability() {
        for &(nu, x, t) in &[(0.5, 3.0, 2.0), (1.0, 40.0, 800.0), (2.0, 100.0, 2e3)] {
            let qq = q(nu, x, 1.0, t);
            let (_, arrival) = thm6_distribution(&qq).unwrap();
            let v = thm7_distribution(&qq).unwrap();
            assert!(rel(v, arrival * x.powf(-2.0 * nu)) < 1e-12);
        }
    }

    #[test]
    fn thm7_nu0_is_y2() {
        let qq = q(0.0, 300.0, 1.0, 1e4);
        let want = exp_int_e1(300.0 * 300.0 / 2e4).unwrap()
            / (2.0 * specfun::bessel_k(0.0, 0.03).unwrap());
        assert!(rel(thm7_distribution(&qq).unwrap(), want) < 1e-13);
        assert!(thm7_distribution(&q(0.0, 2.0, 1.0, 1e4)).is_err());
    }

    #[test]
    fn cor6_endpoints() {
        assert_eq!(cor6_recurrent(&q(0.0, 1.0, 1.0, 100.0)).unwrap(), 1.0);
        assert!(cor6_recurrent(&q(0.0, 10.0, 1.0, 100.0)).unwrap().abs() < 1e-15);
        assert!(cor6_recurrent(&q(0.0, 11.0, 1.0, 100.0)).is_err());
    }

    #[test]
    fn spitzer_values() {
        assert_eq!(spitzer_limits(0.25, 1.0, 1e6).unwrap(), 0.5);
        assert_eq!(spitzer_limits(0.0, 1.0, 1e6).unwrap(), 1.0);
        let t = 50.0;
        let s = spitzer_limits(1.0, 1.0, t).unwrap();
        let y2 = cor6_y2(&q(0.0, t, 1.0, t)).unwrap();
        assert!(rel(s, y2) < 1e-12);
    }

    proptest! {
        #[test]
        fn thm3_modified_half_order_is_exact(lx in 0.001f64..3.0, lt in -2.0f64..4.0) {
            let x = 1.0 + 10f64.powf(lx) - 1.0 + 1e-3;
            let t = 10f64.powf(lt);
            let qq = q(0.5, x, 1.0, t);
            let exact = closed_form_d3(&qq);
            prop_assume!(exact > 1e-290);
            let v = thm3_density(&qq, true).unwrap().value;
            prop_assert!(rel(v, exact) < 1e-13, "{v} vs {exact}");
        }

        #[test]
        fn thm7_monotone_in_t(nu in 0.0f64..2.0, x in 20.0f64..200.0, t1 in 100.0f64..2e3, dt in 1.0f64..1e3) {
            let q1 = q(nu, x, 1.0, t1);
            let q2 = q(nu, x, 1.0, t1 + dt);
            if let (Ok(a), Ok(b)) = (thm7_distribution(&q1), thm7_distribution(&q2)) {
                prop_assert!(b >= a * (1.0 - 1e-12));
                prop_assert!((0.0..=1.0).contains(&a));
            }
        }
    }
}
