//! The acceptance checks, grouped into suites.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Check, TolKind, ValidationReport};
use crate::asymptotics::{
    cor5_nu0, cor6_recurrent, eta_coefficients, lemma5_ballistic, thm1_nu0, thm2_leading,
    thm3_density, thm6_distribution, thm7_distribution, Cor5Cutoffs,
};
use crate::error::{FptError, Result};
use crate::fpt::{
    closed_form_cdf_d1, closed_form_d1, closed_form_d3, reduce_negative_order, FptQuery,
};
use crate::oracles::{
    convolution_check, eta_branch_cut, integrated_density, invert, laplace_roundtrip_check,
    mc_density, mc_distribution, total_mass_check, InversionConfig, InversionMethod, McConfig,
};
use crate::specfun::{lambda_nu, lambda_nu_integral, ln_lambda_nu, Order};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Anchors,
    Asymptotics,
    Oracles,
    Distributions,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 5] =
        ["anchors", "asymptotics", "oracles", "distributions", "all"];

    pub fn as_str(&self) -> &'static str {
        match self {
            Suite::Anchors => "anchors",
            Suite::Asymptotics => "asymptotics",
            Suite::Oracles => "oracles",
            Suite::Distributions => "distributions",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Suite {
    type Err = FptError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "anchors" => Ok(Suite::Anchors),
            "asymptotics" => Ok(Suite::Asymptotics),
            "oracles" => Ok(Suite::Oracles),
            "distributions" => Ok(Suite::Distributions),
            "all" => Ok(Suite::All),
            _ => Err(FptError::InvalidConfig(format!(
                "unknown suite '{s}' (expected one of {})",
                Suite::NAMES.join(", ")
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidateOptions {
    /// Root seed; every Monte Carlo check derives its own seed from it.
    pub seed: u64,
    /// Replacement tolerances keyed by check group.
    pub tolerances: BTreeMap<String, f64>,
    pub timing: bool,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        ValidateOptions {
            seed: McConfig::default().seed,
            tolerances: BTreeMap::new(),
            timing: false,
        }
    }
}

/// SplitMix64 step over `root + index`.
pub(crate) fn derive_seed(root: u64, index: u64) -> u64 {
    let mut z = root.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub const GROUPS: [&str; 13] = [
    "anchor.d3",
    "anchor.d1",
    "parabolic.identity",
    "parabolic.convergence",
    "inner.residual_order",
    "eta.anchor",
    "ballistic",
    "mass",
    "laplace",
    "convolution",
    "recurrent.nu0",
    "distribution",
    "lambda",
];

fn groups_of(suite: Suite) -> &'static [&'static str] {
    match suite {
        Suite::Anchors => &[
            "anchor.d3",
            "anchor.d1",
            "parabolic.identity",
            "eta.anchor",
            "lambda",
        ],
        Suite::Asymptotics => &[
            "parabolic.convergence",
            "inner.residual_order",
            "ballistic",
            "recurrent.nu0",
        ],
        Suite::Oracles => &["mass", "laplace", "convolution"],
        Suite::Distributions => &["distribution"],
        Suite::All => &GROUPS,
    }
}

pub fn run_suite(suite: Suite, opts: &ValidateOptions) -> ValidationReport {
    let start = Instant::now();
    let mut checks = Vec::new();
    for (k, g) in groups_of(suite).iter().enumerate() {
        let seed = derive_seed(
            opts.seed,
            GROUPS.iter().position(|h| h == g).unwrap_or(k) as u64,
        );
        checks.extend(run_group(g, seed));
    }
    for c in &mut checks {
        if let Some(&tol) = opts.tolerances.get(&c.group) {
            c.tolerance = tol;
            c.grade();
        }
    }
    let mut r = ValidationReport::new(suite.as_str(), checks);
    if opts.timing {
        r.wall_time_s = Some(start.elapsed().as_secs_f64());
    }
    r
}

fn run_group(g: &str, seed: u64) -> Vec<Check> {
    match g {
        "anchor.d3" => anchor_d3(),
        "anchor.d1" => anchor_d1(seed),
        "parabolic.identity" => parabolic_identity(seed),
        "parabolic.convergence" => parabolic_convergence(),
        "inner.residual_order" => inner_residual_order(),
        "eta.anchor" => eta_anchor(),
        "ballistic" => ballistic(seed),
        "mass" => mass(),
        "laplace" => laplace(),
        "convolution" => convolution(),
        "recurrent.nu0" => recurrent_nu0(),
        "distribution" => distribution(seed),
        "lambda" => lambda(),
        _ => unreachable!("unknown group {g}"),
    }
}

fn q(nu: f64, x: f64, a: f64, t: f64) -> Result<FptQuery> {
    FptQuery::new(nu, x, a, t)
}

fn bromwich() -> InversionConfig {
    InversionConfig::default()
}

fn q_inv(nu: f64, x: f64, t: f64) -> Result<f64> {
    Ok(invert(&q(nu, x, 1.0, t)?, &bromwich())?.value)
}

/// Wall-clock limit recorded as a pass/fail flag so the report itself
/// stays reproducible.
fn runtime_check(group: &str, start: Instant, limit_s: f64) -> Check {
    let ok = start.elapsed().as_secs_f64() < limit_s;
    Check::new(group, &[("limit_s", limit_s)], TolKind::Holds, 0.0)
        .note("wall-clock limit")
        .observe(Ok(if ok { 1.0 } else { 0.0 }))
}

fn flag(group: &str, inputs: &[(&str, f64)], holds: Result<bool>) -> Check {
    Check::new(group, inputs, TolKind::Holds, 0.0).observe(holds.map(|h| if h { 1.0 } else { 0.0 }))
}

fn anchor_d3() -> Vec<Check> {
    let g = "anchor.d3";
    let start = Instant::now();
    let mut out = Vec::new();
    for method in [InversionMethod::GaverStehfest, InversionMethod::Bromwich] {
        // The instability guard is lifted so the value is always reported.
        let cfg = InversionConfig {
            method,
            gs_tol: f64::INFINITY,
            ..Default::default()
        };
        for x in [1.5, 2.0, 4.0] {
            for t in [0.5, 1.0, 5.0, 20.0] {
                let c = match method {
                    InversionMethod::GaverStehfest => Check::new(
                        g,
                        &[("gs_terms", cfg.gs_terms as f64), ("x", x), ("t", t)],
                        TolKind::Relative,
                        1e-6,
                    )
                    .note("gaver-stehfest"),
                    InversionMethod::Bromwich => {
                        Check::new(g, &[("x", x), ("t", t)], TolKind::Relative, 1e-6)
                            .note("bromwich")
                    }
                };
                let out_c = match q(0.5, x, 1.0, t) {
                    Ok(qq) => c
                        .expect(closed_form_d3(&qq))
                        .observe(invert(&qq, &cfg).map(|e| e.value)),
                    Err(e) => c.observe(Err(e)),
                };
                out.push(out_c);
            }
        }
    }
    out.push(runtime_check(g, start, 10.0));
    out
}

fn anchor_d1(seed: u64) -> Vec<Check> {
    let g = "anchor.d1";
    let mut out = Vec::new();
    for (x, a, t) in [
        (1.5, 1.0, 0.5),
        (2.0, 1.0, 1.0),
        (4.0, 1.0, 5.0),
        (3.0, 2.0, 2.0),
        (10.0, 1.0, 20.0),
    ] {
        let c = Check::new(g, &[("x", x), ("a", a), ("t", t)], TolKind::Relative, 1e-12);
        let r = q(-0.5, x, a, t).and_then(|qq| {
            let (order, m) = reduce_negative_order(-0.5, &qq)?;
            Ok((
                closed_form_d1(&qq),
                closed_form_d3(&qq.with_order(order)) * m,
            ))
        });
        out.push(match r {
            Ok((want, got)) => c.expect(want).observe(Ok(got)),
            Err(e) => c.observe(Err(e)),
        });
    }
    let paths = 100_000;
    let cfg = McConfig {
        paths,
        seed,
        ..Default::default()
    };
    let (x, t) = (2.0, 1.0);
    let inputs = [("x", x), ("t", t), ("paths", paths as f64)];
    if let Ok(qq) = q(-0.5, x, 1.0, t) {
        let c = Check::new(g, &inputs, TolKind::StdErrors, 3.0)
            .expect(closed_form_d1(&qq))
            .note("density");
        out.push(match mc_density(&qq, &cfg) {
            Ok(e) => c
                .with_std_error(e.err_bound.unwrap_or(f64::NAN))
                .observe(Ok(e.value)),
            Err(e) => c.observe(Err(e)),
        });
        let c = Check::new(g, &inputs, TolKind::StdErrors, 3.0)
            .expect(closed_form_cdf_d1(&qq))
            .note("distribution");
        out.push(
            match mc_distribution(
                &qq,
                &McConfig {
                    seed: derive_seed(seed, 1),
                    ..cfg
                },
            ) {
                Ok((p, se)) => c.with_std_error(se).observe(Ok(p)),
                Err(e) => c.observe(Err(e)),
            },
        );
    }
    out
}

fn parabolic_identity(seed: u64) -> Vec<Check> {
    let g = "parabolic.identity";
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..100)
        .map(|_| {
            let x = 1.0 + 10f64.powf(rng.random_range(-2.0..1.5));
            let t = 10f64.powf(rng.random_range(-2.0..4.0));
            let c = Check::new(g, &[("x", x), ("t", t)], TolKind::Relative, 1e-13);
            match q(0.5, x, 1.0, t) {
                Ok(qq) => c
                    .expect(closed_form_d3(&qq))
                    .observe(thm3_density(&qq, true).map(|v| v.value)),
                Err(e) => c.observe(Err(e)),
            }
        })
        .collect()
}

fn parabolic_convergence() -> Vec<Check> {
    let g = "parabolic.convergence";
    let start = Instant::now();
    let mut out = Vec::new();
    for nu in [0.0, 0.3, 1.0, 2.0] {
        let ratios: Result<Vec<f64>> = [1e2, 1e3, 1e4]
            .iter()
            .map(|&t| {
                let x = 2.0 * f64::sqrt(t);
                Ok(q_inv(nu, x, t)? / thm3_density(&q(nu, x, 1.0, t)?, true)?.value)
            })
            .collect();
        let c = Check::new(g, &[("nu", nu), ("t", 1e4)], TolKind::Band, 0.05).expect(1.0);
        match ratios {
            Ok(r) => {
                let table = format!(
                    "ratio at t=1e2,1e3,1e4: {:.6}, {:.6}, {:.6}",
                    r[0], r[1], r[2]
                );
                out.push(c.note(table.clone()).observe(Ok(r[2])));
                let dec = r
                    .windows(2)
                    .all(|w| (w[1] - 1.0).abs() < (w[0] - 1.0).abs());
                out.push(
                    flag(g, &[("nu", nu)], Ok(dec)).note(format!("|ratio-1| decreasing; {table}")),
                );
            }
            Err(e) => out.push(c.observe(Err(e))),
        }
    }
    out.push(runtime_check(g, start, 60.0));
    out
}

fn inner_residual_order() -> Vec<Check> {
    let g = "inner.residual_order";
    [0.3, 0.7, 2.0]
        .iter()
        .map(|&nu| {
            let scaled: Result<Vec<f64>> = (0..9)
                .map(|k| {
                    let t = 10f64.powf(2.0 + 0.5 * k as f64);
                    let x = t.powf(0.4);
                    let lead = thm2_leading(&q(nu, x, 1.0, t)?)?.value;
                    Ok((q_inv(nu, x, t)? - lead).abs() * t.powf(nu + 1.0 + nu.min(1.0)))
                })
                .collect();
            let c = Check::new(g, &[("nu", nu)], TolKind::AtMost, 50.0);
            match scaled {
                Ok(s) => {
                    let hi = s.iter().cloned().fold(f64::MIN, f64::max);
                    let lo = s.iter().cloned().fold(f64::MAX, f64::min);
                    let table = s
                        .iter()
                        .map(|v| format!("{v:.4e}"))
                        .collect::<Vec<_>>()
                        .join(", ");
                    c.note(format!(
                        "max/min of scaled residual over t=1e2..1e6: {table}"
                    ))
                    .observe(Ok(hi / lo))
                }
                Err(e) => c.observe(Err(e)),
            }
        })
        .collect()
}

fn eta_anchor() -> Vec<Check> {
    let g = "eta.anchor";
    let mut out = Vec::new();
    for x in [1.5, 2.0, 4.0] {
        for t in [50.0, 100.0, 1000.0] {
            let c = Check::new(g, &[("x", x), ("t", t)], TolKind::Relative, 1e-8);
            let r = q(0.5, x, 1.0, t).and_then(|qq| {
                Ok((
                    closed_form_d3(&qq),
                    thm2_leading(&qq)?.value + eta_branch_cut(&qq)?,
                ))
            });
            out.push(match r {
                Ok((want, got)) => c.expect(want).observe(Ok(got)),
                Err(e) => c.observe(Err(e)),
            });
        }
    }
    // Keeps the coefficient table in the report for reference.
    let (a1, b0) = eta_coefficients(0.5);
    out.push(
        Check::new(g, &[("nu", 0.5)], TolKind::Holds, 0.0)
            .note(format!(
                "expansion coefficients a1 = {a1:.12e}, b0 = {b0:.12e}"
            ))
            .observe(Ok(if a1.is_finite() && b0.is_finite() {
                1.0
            } else {
                0.0
            })),
    );
    out
}

fn ballistic(seed: u64) -> Vec<Check> {
    let g = "ballistic";
    let mut out = Vec::new();
    let paths = 1_000_000;
    let mut k = 0;
    for nu in [0.0, 1.0] {
        for t in [0.2, 1.0, 5.0] {
            let x = 10.0 * t;
            let qq = match q(nu, x, 1.0, t) {
                Ok(qq) => qq,
                Err(e) => {
                    out.push(
                        Check::new(g, &[("nu", nu), ("t", t)], TolKind::Relative, 0.02)
                            .observe(Err(e)),
                    );
                    continue;
                }
            };
            let full = lemma5_ballistic(&qq).map(|l| l.full);
            let c = Check::new(
                g,
                &[("nu", nu), ("x", x), ("t", t)],
                TolKind::Relative,
                0.02,
            )
            .note("against inversion");
            out.push(match q_inv(nu, x, t) {
                Ok(v) => c.expect(v).observe(full.clone()),
                Err(e) => c.observe(Err(e)),
            });
            let cfg = McConfig {
                paths,
                seed: derive_seed(seed, k),
                ..Default::default()
            };
            k += 1;
            let c = Check::new(
                g,
                &[("nu", nu), ("x", x), ("t", t), ("paths", paths as f64)],
                TolKind::StdErrors,
                3.0,
            )
            .note("against simulation");
            out.push(match (mc_density(&qq, &cfg), full) {
                (Ok(m), Ok(f)) => c
                    .expect(f)
                    .with_std_error(m.err_bound.unwrap_or(f64::NAN))
                    .observe(Ok(m.value)),
                (Err(e), _) | (_, Err(e)) => c.observe(Err(e)),
            });
        }
    }
    out
}

fn mass() -> Vec<Check> {
    let g = "mass";
    let mut out = Vec::new();
    for nu in [0.5, 1.0, 2.0] {
        for x in [2.0, 4.0] {
            let c = Check::new(g, &[("nu", nu), ("x", x)], TolKind::Relative, 1e-4)
                .expect(x.powf(-2.0 * nu));
            out.push(
                c.observe(
                    Order::new(nu)
                        .and_then(|o| total_mass_check(o, x, 1.0))
                        .map(|m| m.mass),
                ),
            );
        }
    }
    out
}

fn laplace() -> Vec<Check> {
    let g = "laplace";
    let mut out = Vec::new();
    for nu in [0.0, 0.5, 2.0] {
        for lam in [0.1, 1.0, 10.0] {
            let c = Check::new(g, &[("nu", nu), ("lambda", lam)], TolKind::AtMost, 1e-4);
            out.push(
                c.observe(Order::new(nu).and_then(|o| laplace_roundtrip_check(o, 2.0, 1.0, lam))),
            );
        }
    }
    out
}

fn convolution() -> Vec<Check> {
    let g = "convolution";
    let mut out = Vec::new();
    for nu in [0.0, 0.5] {
        for (x, t) in [(2.0, 4.0), (3.0, 9.0)] {
            let c = Check::new(g, &[("nu", nu), ("x", x), ("t", t)], TolKind::AtMost, 5e-3);
            out.push(c.observe(Order::new(nu).and_then(|o| convolution_check(o, x, t, 512))));
        }
    }
    out
}

fn recurrent_nu0() -> Vec<Check> {
    let g = "recurrent.nu0";
    let mut out = Vec::new();
    for x in [2.0, 10.0] {
        let mut errs: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
        for t in [1e6, 1e8] {
            let r = q(0.0, x, 1.0, t).and_then(|qq| {
                Ok((
                    q_inv(0.0, x, t)?,
                    thm1_nu0(&qq)?.value,
                    cor5_nu0(&qq, Cor5Cutoffs::default())?.value,
                ))
            });
            for (m, code) in [(0usize, 1.0), (1, 5.0)] {
                let c = Check::new(
                    g,
                    &[("formula", code), ("x", x), ("t", t)],
                    TolKind::Relative,
                    0.1,
                );
                out.push(match &r {
                    Ok((inv, a, b)) => {
                        let v = if m == 0 { *a } else { *b };
                        errs[m].push(((v - inv) / inv).abs());
                        c.expect(*inv).observe(Ok(v))
                    }
                    Err(e) => c.observe(Err(e.clone())),
                });
            }
        }
        for (m, code) in [(0usize, 1.0), (1, 5.0)] {
            let e = &errs[m];
            let holds = if e.len() == 2 {
                Ok(e[1] < e[0])
            } else {
                Err(FptError::domain("missing values"))
            };
            out.push(
                flag(g, &[("formula", code), ("x", x)], holds)
                    .note("relative error shrinks from t=1e6 to t=1e8"),
            );
        }
    }
    out
}

fn distribution(seed: u64) -> Vec<Check> {
    let g = "distribution";
    let mut out = Vec::new();
    let t: f64 = 1e4;
    for nu in [0.5, 1.0] {
        for z in [0.5, 1.0, 2.0] {
            let x = (2.0 * t * z).sqrt();
            let reference = Order::new(nu).and_then(|o| integrated_density(o, x, 1.0, t));
            let qq = q(nu, x, 1.0, t);
            let formulas: [(f64, Result<f64>); 2] = [
                (
                    6.0,
                    qq.clone()
                        .and_then(|qq| Ok(thm6_distribution(&qq)?.1 * x.powf(-2.0 * nu))),
                ),
                (7.0, qq.clone().and_then(|qq| thm7_distribution(&qq))),
            ];
            for (code, v) in formulas {
                let c = Check::new(
                    g,
                    &[("formula", code), ("nu", nu), ("z", z), ("t", t)],
                    TolKind::Relative,
                    0.15,
                );
                out.push(match &reference {
                    Ok(r) => c.expect(*r).observe(v),
                    Err(e) => c.observe(Err(e.clone())),
                });
            }
        }
    }
    let paths = 20_000;
    let (x, t) = (10.0, 1e8);
    let c = Check::new(
        g,
        &[("nu", 0.0), ("x", x), ("t", t), ("paths", paths as f64)],
        TolKind::Absolute,
        0.05,
    )
    .note("recurrent limit against simulation");
    let cfg = McConfig {
        paths,
        seed,
        ..Default::default()
    };
    out.push(
        match q(0.0, x, 1.0, t)
            .and_then(|qq| Ok((cor6_recurrent(&qq)?, mc_distribution(&qq, &cfg)?)))
        {
            Ok((y1, (p, se))) => c.expect(p).with_std_error(se).observe(Ok(y1)),
            Err(e) => c.observe(Err(e)),
        },
    );
    out
}

fn lambda() -> Vec<Check> {
    let g = "lambda";
    let mut out = Vec::new();
    for nu in [0.0, 0.5, 1.0, 2.0] {
        let grid: Vec<f64> = (0..100)
            .map(|k| 10f64.powf(-3.0 + 5.0 * k as f64 / 99.0))
            .collect();
        let vals: Result<Vec<f64>> = grid.iter().map(|&y| ln_lambda_nu(nu, y)).collect();
        out.push(
            flag(
                g,
                &[("nu", nu)],
                vals.map(|v| v.windows(2).all(|w| w[1] > w[0])),
            )
            .note("increasing in y on 1e-3..1e2"),
        );
    }
    for nu in [0.3, 0.5, 1.0, 2.0] {
        for y in [0.1, 1.0, 10.0] {
            let c = Check::new(g, &[("nu", nu), ("y", y)], TolKind::Relative, 1e-10)
                .note("order symmetry of the integral form");
            out.push(match lambda_nu_integral(nu, y) {
                Ok(want) => c.expect(want).observe(lambda_nu_integral(-nu, y)),
                Err(e) => c.observe(Err(e)),
            });
        }
    }
    for y in [0.01, 0.1, 1.0, 10.0, 50.0] {
        let c = Check::new(g, &[("nu", 0.5), ("y", y)], TolKind::Relative, 1e-12)
            .expect(2.0 * std::f64::consts::PI * y.exp());
        out.push(c.observe(lambda_nu(0.5, y)));
    }
    out
}
