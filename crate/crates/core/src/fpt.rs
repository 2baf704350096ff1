//! Queries, order and scale reductions, closed forms, regime classification
//! and the density/distribution dispatcher.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::asymptotics::{self, Cor5Cutoffs};
use crate::error::{FptError, Result};
use crate::oracles::{self, InversionConfig, InversionMethod, McConfig};
use crate::specfun::{self, Order};

/// Default parabolic cap `M` separating the parabolic and ballistic regimes.
pub const DEFAULT_PARABOLIC_CAP: f64 = 10.0;

/// One evaluation point: start `x`, barrier `a`, time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FptQuery {
    pub order: Order,
    pub x: f64,
    pub a: f64,
    pub t: f64,
}

impl FptQuery {
    /// Validates `a > 0`, `x >= a` and `t > 0`. The boundary `x = a` is kept
    /// for continuity checks; evaluators reject it where it is meaningless.
    pub fn new(nu: f64, x: f64, a: f64, t: f64) -> Result<Self> {
        let order = Order::new(nu)?;
        if !(a > 0.0) || !a.is_finite() {
            return Err(FptError::domain(format!(
                "barrier must satisfy a > 0, got {a}"
            )));
        }
        if !(x >= a) || !x.is_finite() {
            return Err(FptError::domain(format!(
                "start point must lie outside the barrier (x > a), got x = {x}, a = {a}"
            )));
        }
        if !(t > 0.0) || !t.is_finite() {
            return Err(FptError::domain(format!(
                "time must satisfy t > 0, got {t}"
            )));
        }
        Ok(FptQuery { order, x, a, t })
    }

    pub fn nu(&self) -> f64 {
        self.order.nu()
    }

    pub(crate) fn with_order(&self, order: Order) -> Self {
        FptQuery { order, ..*self }
    }

    pub fn with_t(&self, t: f64) -> Self {
        FptQuery { t, ..*self }
    }

    pub(crate) fn require_exterior(&self) -> Result<()> {
        if self.x <= self.a {
            return Err(FptError::domain(format!(
                "x = {} must exceed the barrier a = {}",
                self.x, self.a
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Inner,
    Parabolic,
    Ballistic,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Inner => "inner",
            Regime::Parabolic => "parabolic",
            Regime::Ballistic => "ballistic",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Evaluator selection. The distribution-only formulas (`Thm6`, `Thm7`,
/// `Cor6`) are rejected by [`density`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Auto,
    Exact,
    Thm1,
    Thm2,
    Thm3,
    Cor5,
    Lemma5,
    Thm6,
    Thm7,
    Cor6,
    InversionGs,
    InversionBromwich,
    Mc,
}

impl Method {
    pub const ALL: [Method; 13] = [
        Method::Auto,
        Method::Exact,
        Method::Thm1,
        Method::Thm2,
        Method::Thm3,
        Method::Cor5,
        Method::Lemma5,
        Method::Thm6,
        Method::Thm7,
        Method::Cor6,
        Method::InversionGs,
        Method::InversionBromwich,
        Method::Mc,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Auto => "auto",
            Method::Exact => "exact",
            Method::Thm1 => "thm1",
            Method::Thm2 => "thm2",
            Method::Thm3 => "thm3",
            Method::Cor5 => "cor5",
            Method::Lemma5 => "lemma5",
            Method::Thm6 => "thm6",
            Method::Thm7 => "thm7",
            Method::Cor6 => "cor6",
            Method::InversionGs => "inversion-gs",
            Method::InversionBromwich => "inversion-bromwich",
            Method::Mc => "mc",
        }
    }

    pub fn is_oracle(&self) -> bool {
        matches!(
            self,
            Method::InversionGs | Method::InversionBromwich | Method::Mc
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = FptError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .iter()
            .find(|m| m.as_str() == s)
            .copied()
            .ok_or_else(|| FptError::InvalidConfig(format!("unknown method '{s}'")))
    }
}

/// A density or distribution value with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub value: f64,
    pub method: Method,
    pub regime: Regime,
    pub err_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl DensityEstimate {
    pub(crate) fn new(value: f64, method: Method, regime: Regime) -> Self {
        DensityEstimate {
            value,
            method,
            regime,
            err_bound: None,
            warnings: Vec::new(),
        }
    }

    fn scaled(mut self, factor: f64) -> Self {
        self.value *= factor;
        self.err_bound = self.err_bound.map(|e| e * factor);
        self
    }
}

/// Options shared by [`density`] and [`distribution_estimate`].
#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub method: Method,
    pub parabolic_cap: f64,
    /// Use the `e^{-a^2/2t}`-modified form of the parabolic-regime formula.
    pub thm3_modified: bool,
    pub cor5: Cor5Cutoffs,
    pub inversion: InversionConfig,
    pub mc: McConfig,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            method: Method::Auto,
            parabolic_cap: DEFAULT_PARABOLIC_CAP,
            thm3_modified: true,
            cor5: Cor5Cutoffs::default(),
            inversion: InversionConfig::default(),
            mc: McConfig::default(),
        }
    }
}

impl EvalOptions {
    pub fn with_method(method: Method) -> Self {
        EvalOptions {
            method,
            ..Default::default()
        }
    }
}

/// Maps a query to the unit barrier: `q(x,t;a) = a^{-2} q(x/a, t/a^2; 1)`.
pub fn reduce_scaling(q: &FptQuery) -> (FptQuery, f64) {
    if q.a == 1.0 {
        return (*q, 1.0);
    }
    let unit = FptQuery {
        order: q.order,
        x: q.x / q.a,
        a: 1.0,
        t: q.t / (q.a * q.a),
    };
    (unit, 1.0 / (q.a * q.a))
}

/// `q^nu = q^{|nu|} (x/a)^{2|nu|}` for `nu < 0`. Returns the positive order
/// and the multiplier.
pub fn reduce_negative_order(nu: f64, q: &FptQuery) -> Result<(Order, f64)> {
    if !(nu <= 0.0) {
        return Err(FptError::domain(format!(
            "negative-order reduction needs nu < 0, got {nu}"
        )));
    }
    let m = nu.abs();
    let mult = if m == 0.0 {
        1.0
    } else {
        (q.x / q.a).powf(2.0 * m)
    };
    Ok((Order::new(m)?, mult))
}

/// Density of the hitting time of the origin for `nu < 0`:
/// `Lambda_|nu|(0) x^{2|nu|} p_t^{|nu|}(x)`.
pub fn density_at_origin_barrier(nu: f64, x: f64, t: f64) -> Result<f64> {
    if !(nu < 0.0) {
        return Err(FptError::domain(format!(
            "the origin is attained only for negative orders, got nu = {nu}"
        )));
    }
    if !(x > 0.0) {
        return Err(FptError::domain(format!("x must be positive, got {x}")));
    }
    let m = -nu;
    let ln = specfun::ln_lambda_nu(m, 0.0)?
        + 2.0 * m * x.ln()
        + specfun::ln_gaussian_weight(Order::new(m)?, t, x)?;
    Ok(ln.exp())
}

/// Exact density for `d = 3`: `a (1 - a/x) e^{-(x-a)^2/2t} / (t sqrt(2 pi t))`.
pub fn closed_form_d3(q: &FptQuery) -> f64 {
    let (x, a, t) = (q.x, q.a, q.t);
    let dx = x - a;
    a * (dx / x) * (-dx * dx / (2.0 * t)).exp() / (t * (2.0 * std::f64::consts::PI * t).sqrt())
}

/// Exact density for `d = 1`: `(x - a) e^{-(x-a)^2/2t} / sqrt(2 pi t^3)`.
pub fn closed_form_d1(q: &FptQuery) -> f64 {
    let (x, a, t) = (q.x, q.a, q.t);
    let dx = x - a;
    dx * (-dx * dx / (2.0 * t)).exp() / (t * (2.0 * std::f64::consts::PI * t).sqrt())
}

/// `erfc((x-a)/sqrt(2t)) = Q(1/2, (x-a)^2/2t)`. The incomplete gamma is used
/// because the `statrs` erfc is only good to about 1e-10 relative.
fn erfc_gap(q: &FptQuery) -> f64 {
    let z = (q.x - q.a).powi(2) / (2.0 * q.t);
    crate::specfun::incomplete_gamma_ratios(0.5, z).map_or(f64::NAN, |(_, upper)| upper)
}

/// `P[sigma_a <= t]` for `d = 3`: `(a/x) erfc((x-a)/sqrt(2t))`.
pub fn closed_form_cdf_d3(q: &FptQuery) -> f64 {
    q.a / q.x * erfc_gap(q)
}

/// `P[sigma_a <= t]` for `d = 1`: `erfc((x-a)/sqrt(2t))`.
pub fn closed_form_cdf_d1(q: &FptQuery) -> f64 {
    erfc_gap(q)
}

/// Inner for `x <= sqrt(t)`, parabolic for `sqrt(t) < x <= M t`, ballistic
/// beyond. Classified on the unit-barrier query.
pub fn classify_regime(q: &FptQuery, m: f64) -> Regime {
    let (u, _) = reduce_scaling(q);
    if u.x <= u.t.sqrt() {
        Regime::Inner
    } else if u.x <= m * u.t {
        Regime::Parabolic
    } else {
        Regime::Ballistic
    }
}

fn is_half(nu: f64) -> bool {
    nu.abs() == 0.5
}

/// First-passage density `q(x,t;a)` by the selected method.
pub fn density(q: &FptQuery, opts: &EvalOptions) -> Result<DensityEstimate> {
    q.require_exterior()?;
    if opts.parabolic_cap <= 1.0 {
        return Err(FptError::InvalidConfig(format!(
            "parabolic cap M must exceed 1, got {}",
            opts.parabolic_cap
        )));
    }
    let regime = classify_regime(q, opts.parabolic_cap);
    let nu = q.nu();
    if opts.method == Method::Auto && is_half(nu) {
        let v = if nu > 0.0 {
            closed_form_d3(q)
        } else {
            closed_form_d1(q)
        };
        return Ok(DensityEstimate::new(v, Method::Exact, regime));
    }
    if opts.method == Method::Exact {
        return if nu == 0.5 {
            Ok(DensityEstimate::new(
                closed_form_d3(q),
                Method::Exact,
                regime,
            ))
        } else if nu == -0.5 {
            Ok(DensityEstimate::new(
                closed_form_d1(q),
                Method::Exact,
                regime,
            ))
        } else {
            Err(FptError::Unsupported(format!(
                "closed forms exist only for nu = +-1/2, got nu = {nu}"
            )))
        };
    }
    if nu < 0.0 {
        let (order, mult) = reduce_negative_order(nu, q)?;
        let est = density(&q.with_order(order), opts)?;
        return Ok(est.scaled(mult));
    }
    let (unit, factor) = reduce_scaling(q);
    let est = density_unit(&unit, regime, opts)?;
    Ok(est.scaled(factor))
}

fn density_unit(q: &FptQuery, regime: Regime, opts: &EvalOptions) -> Result<DensityEstimate> {
    let nu = q.nu();
    let method = match opts.method {
        Method::Auto => match regime {
            Regime::Inner if nu > 0.0 => Method::Thm2,
            Regime::Inner => {
                if asymptotics::thm1_applicable(q) {
                    Method::Thm1
                } else {
                    Method::Cor5
                }
            }
            Regime::Parabolic => Method::Thm3,
            Regime::Ballistic => Method::Lemma5,
        },
        m => m,
    };
    let from_asym = |v: asymptotics::AsymptoticValue, m: Method| {
        let mut e = DensityEstimate::new(v.value, m, regime);
        e.err_bound = v.error_order.bound;
        e.warnings = v.warnings;
        e
    };
    match method {
        Method::Thm1 => Ok(from_asym(asymptotics::thm1_nu0(q)?, method)),
        Method::Thm2 => {
            if nu <= 0.0 {
                return Err(FptError::Unsupported("thm2 requires nu > 0".into()));
            }
            Ok(from_asym(asymptotics::thm2_leading(q)?, method))
        }
        Method::Thm3 => Ok(from_asym(
            asymptotics::thm3_density(q, opts.thm3_modified)?,
            method,
        )),
        Method::Cor5 => {
            if nu != 0.0 {
                return Err(FptError::Unsupported("cor5 requires nu = 0".into()));
            }
            Ok(from_asym(asymptotics::cor5_nu0(q, opts.cor5)?, method))
        }
        Method::Lemma5 => {
            let l = asymptotics::lemma5_ballistic(q)?;
            Ok(from_asym(l.as_value(), method))
        }
        Method::InversionGs | Method::InversionBromwich => {
            let cfg = InversionConfig {
                method: if method == Method::InversionGs {
                    InversionMethod::GaverStehfest
                } else {
                    InversionMethod::Bromwich
                },
                ..opts.inversion.clone()
            };
            let mut e = oracles::invert(q, &cfg)?;
            e.regime = regime;
            Ok(e)
        }
        Method::Mc => {
            let mut e = oracles::mc_density(q, &opts.mc)?;
            e.regime = regime;
            Ok(e)
        }
        Method::Thm6 | Method::Thm7 | Method::Cor6 => Err(FptError::Unsupported(format!(
            "{method} is a distribution formula; use the distribution mode"
        ))),
        Method::Exact | Method::Auto => unreachable!("resolved above"),
    }
}

/// `P_x[sigma_a <= t]` by the selected method.
pub fn distribution_estimate(q: &FptQuery, opts: &EvalOptions) -> Result<DensityEstimate> {
    q.require_exterior()?;
    let regime = classify_regime(q, opts.parabolic_cap);
    let nu = q.nu();
    let exact = |m: Method| -> Option<DensityEstimate> {
        if nu == 0.5 {
            Some(DensityEstimate::new(closed_form_cdf_d3(q), m, regime))
        } else if nu == -0.5 {
            Some(DensityEstimate::new(closed_form_cdf_d1(q), m, regime))
        } else {
            None
        }
    };
    let clamp = |mut e: DensityEstimate| {
        e.value = e.value.clamp(0.0, 1.0);
        e
    };
    match opts.method {
        Method::Auto => {
            if let Some(e) = exact(Method::Exact) {
                return Ok(e);
            }
        }
        Method::Exact => {
            return exact(Method::Exact).ok_or_else(|| {
                FptError::Unsupported(format!(
                    "closed forms exist only for nu = +-1/2, got nu = {nu}"
                ))
            })
        }
        _ => {}
    }
    if nu < 0.0 {
        // The density multiplier is constant in t, so it carries over.
        let (order, mult) = reduce_negative_order(nu, q)?;
        let e = distribution_estimate(&q.with_order(order), opts)?;
        return Ok(clamp(e.scaled(mult)));
    }
    let (unit, _) = reduce_scaling(q);
    let method = match opts.method {
        Method::Auto => Method::InversionBromwich,
        m => m,
    };
    let value = match method {
        Method::Thm6 => {
            let (_, arrival) = asymptotics::thm6_distribution(&unit)?;
            arrival * (1.0 / unit.x).powf(2.0 * nu)
        }
        Method::Thm7 => asymptotics::thm7_distribution(&unit)?,
        Method::Cor6 => asymptotics::cor6_recurrent(&unit)?,
        Method::InversionGs | Method::InversionBromwich => {
            let cfg = InversionConfig {
                method: if method == Method::InversionGs {
                    InversionMethod::GaverStehfest
                } else {
                    InversionMethod::Bromwich
                },
                ..opts.inversion.clone()
            };
            oracles::distribution_inversion(&unit, &cfg)?
        }
        Method::Mc => {
            let r = oracles::mc_distribution(&unit, &opts.mc)?;
            let mut e = DensityEstimate::new(r.0, Method::Mc, regime);
            e.err_bound = Some(r.1);
            return Ok(clamp(e));
        }
        m => {
            return Err(FptError::Unsupported(format!(
                "{m} is a density formula; drop the distribution mode"
            )))
        }
    };
    Ok(clamp(DensityEstimate::new(value, method, regime)))
}

/// `P_x[sigma_a <= t]` in `[0, 1]` with the automatic method choice.
pub fn distribution(q: &FptQuery) -> Result<f64> {
    Ok(distribution_estimate(q, &EvalOptions::default())?.value)
}
