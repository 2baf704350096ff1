//! Monte Carlo hitting times with a Brownian-bridge crossing correction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FptError, Result};
use crate::fpt::{reduce_negative_order, DensityEstimate, FptQuery, Method, Regime};

/// Time stepping. `Exact` samples the transition law of the free process
/// (a noncentral chi-square in `X^2`) with steps adapted to the distance
/// from the barrier; `Euler` is Euler-Maruyama with the fixed step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum McScheme {
    Exact,
    Euler,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub paths: u64,
    /// Time step: the fixed step for `Euler`, the largest step for `Exact`.
    /// `None` derives it from the grid.
    pub step: Option<f64>,
    pub seed: u64,
    pub bridge_correction: bool,
    pub t_grid: Vec<f64>,
    pub scheme: McScheme,
    /// Ratio `r` of the grid `t/r, t, t r` used for density estimates.
    pub diff_ratio: f64,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            paths: 100_000,
            step: None,
            seed: 0x5EED_0FB3_55E1,
            bridge_correction: true,
            t_grid: Vec::new(),
            scheme: McScheme::Exact,
            diff_ratio: 1.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    /// `(t, estimate, std_error)` of `P[sigma <= t]`.
    pub cdf: Vec<(f64, f64, f64)>,
    /// Centered differences of the CDF at interior grid points.
    pub density: Vec<(f64, f64, f64)>,
    pub paths: u64,
}

/// Fraction of `a` used as the smallest step length `sqrt(h)` near the barrier.
const MIN_STEP_FRAC: f64 = 1e-3;
/// Steps are `((X - a)/STEP_DIV)^2` away from the barrier.
const STEP_DIV: f64 = 4.0;
/// A path this many remaining standard deviations above the barrier is
/// dropped as a non-hit.
const KILL_SIGMAS: f64 = 8.5;
const CHUNK: u64 = 4096;

impl McConfig {
    fn resolved_step(&self, x: f64, a: f64) -> f64 {
        let t_min = self.t_grid[0];
        let t_max = *self.t_grid.last().unwrap();
        match (self.step, self.scheme) {
            (Some(h), _) => h,
            (None, McScheme::Exact) => t_min / 10.0,
            (None, McScheme::Euler) => (1e-4 * t_max)
                .min((x - a).powi(2) / 400.0)
                .min(t_min / 10.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.paths == 0 {
            return Err(FptError::InvalidConfig("paths must be >= 1".into()));
        }
        if self.t_grid.is_empty() {
            return Err(FptError::InvalidConfig("t_grid must be nonempty".into()));
        }
        if !(self.t_grid[0] > 0.0) || self.t_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(FptError::InvalidConfig(
                "t_grid must be positive and strictly increasing".into(),
            ));
        }
        if let Some(h) = self.step {
            if !(h > 0.0) || h > self.t_grid[0] / 10.0 {
                return Err(FptError::InvalidConfig(format!(
                    "step must be in (0, min(t_grid)/10], got {h}"
                )));
            }
        }
        if !(self.diff_ratio > 1.0) {
            return Err(FptError::InvalidConfig("diff_ratio must exceed 1".into()));
        }
        Ok(())
    }
}

fn std_error(k: u64, n: u64) -> f64 {
    let p = (k as f64 + 1.0) / (n as f64 + 2.0);
    (p * (1.0 - p) / n as f64).sqrt()
}

struct PathSim<'a> {
    nu: f64,
    x: f64,
    a: f64,
    grid: &'a [f64],
    h_max: f64,
    h_min: f64,
    bridge: bool,
    scheme: McScheme,
    chi: Option<ChiSquared<f64>>,
}

impl PathSim<'_> {
    /// Index of the first grid time at or after the hit, or `None`.
    fn run(&self, rng: &mut ChaCha8Rng) -> Option<usize> {
        let (a, t_max) = (self.a, *self.grid.last().unwrap());
        let (mut t, mut x, mut idx) = (0.0, self.x, 0usize);
        let drift = self.nu + 0.5;
        loop {
            let d = x - a;
            if d > KILL_SIGMAS * (t_max - t).sqrt() {
                return None;
            }
            let h = match self.scheme {
                McScheme::Exact => (d / STEP_DIV).powi(2).clamp(self.h_min, self.h_max),
                McScheme::Euler => self.h_max,
            }
            .min(self.grid[idx] - t);
            let z: f64 = rng.sample(StandardNormal);
            let xn = match self.scheme {
                McScheme::Exact => {
                    let c = x + h.sqrt() * z;
                    let chi = self.chi.as_ref().map_or(0.0, |c| c.sample(rng));
                    (c * c + h * chi).sqrt()
                }
                McScheme::Euler => x + h.sqrt() * z + drift / x * h,
            };
            t += h;
            let hit = if xn <= a {
                true
            } else if self.bridge {
                let p = (-2.0 * d * (xn - a) / h).exp();
                p > 1e-15 && rng.random::<f64>() < p
            } else {
                false
            };
            if hit {
                return Some(idx);
            }
            x = xn;
            if t >= self.grid[idx] {
                idx += 1;
                if idx == self.grid.len() {
                    return None;
                }
            }
        }
    }
}

/// Simulates `paths` hitting times of `a` from `x` for order `nu >= 0` and
/// reports the CDF on `t_grid`. Paths are keyed by `(seed, index)`, so the
/// result does not depend on the thread count.
pub fn mc_hitting(nu: f64, x: f64, a: f64, cfg: &McConfig) -> Result<McResult> {
    cfg.validate()?;
    if !(nu >= 0.0) {
        return Err(FptError::domain(format!(
            "simulation needs nu >= 0, got {nu}"
        )));
    }
    if !(a > 0.0) || !(x > a) {
        return Err(FptError::domain(format!(
            "simulation needs x > a > 0, got x = {x}, a = {a}"
        )));
    }
    let h_max = cfg.resolved_step(x, a);
    let sim = PathSim {
        nu,
        x,
        a,
        grid: &cfg.t_grid,
        h_max,
        h_min: (MIN_STEP_FRAC * a).powi(2).min(h_max),
        bridge: cfg.bridge_correction,
        scheme: cfg.scheme,
        chi: if 2.0 * nu + 1.0 > 0.0 {
            Some(
                ChiSquared::new(2.0 * nu + 1.0)
                    .map_err(|e| FptError::InvalidConfig(e.to_string()))?,
            )
        } else {
            None
        },
    };
    let n_grid = cfg.t_grid.len();
    let chunks = cfg.paths.div_ceil(CHUNK);
    let counts = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut hist = vec![0u64; n_grid];
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            for i in c * CHUNK..((c + 1) * CHUNK).min(cfg.paths) {
                rng.set_stream(i);
                rng.set_word_pos(0);
                if let Some(k) = sim.run(&mut rng) {
                    hist[k] += 1;
                }
            }
            hist
        })
        .reduce(
            || vec![0u64; n_grid],
            |mut l, r| {
                l.iter_mut().zip(r).for_each(|(a, b)| *a += b);
                l
            },
        );
    let n = cfg.paths;
    let mut cum = 0u64;
    let cum_counts: Vec<u64> = counts
        .iter()
        .map(|c| {
            cum += c;
            cum
        })
        .collect();
    let cdf = cfg
        .t_grid
        .iter()
        .zip(&cum_counts)
        .map(|(&t, &k)| (t, k as f64 / n as f64, std_error(k, n)))
        .collect();
    let density = (1..n_grid.saturating_sub(1))
        .map(|i| {
            let k = cum_counts[i + 1] - cum_counts[i - 1];
            let dt = cfg.t_grid[i + 1] - cfg.t_grid[i - 1];
            (
                cfg.t_grid[i],
                k as f64 / n as f64 / dt,
                std_error(k, n) / dt,
            )
        })
        .collect();
    Ok(McResult {
        cdf,
        density,
        paths: n,
    })
}

fn reduced(q: &FptQuery) -> Result<(f64, f64)> {
    q.require_exterior()?;
    if q.nu() < 0.0 {
        let (o, m) = reduce_negative_order(q.nu(), q)?;
        Ok((o.nu(), m))
    } else {
        Ok((q.nu(), 1.0))
    }
}

/// Density at `q.t` from the CDF on `t/r, t, t r`; `err_bound` holds the
/// standard error.
pub fn mc_density(q: &FptQuery, cfg: &McConfig) -> Result<DensityEstimate> {
    let (nu, m) = reduced(q)?;
    let r = cfg.diff_ratio;
    let c = McConfig {
        t_grid: vec![q.t / r, q.t, q.t * r],
        ..cfg.clone()
    };
    let res = mc_hitting(nu, q.x, q.a, &c)?;
    let (_, v, se) = res.density[0];
    let mut e = DensityEstimate::new(v * m, Method::Mc, Regime::Inner);
    e.err_bound = Some(se * m);
    Ok(e)
}

/// `(P[sigma <= t], std_error)`.
pub fn mc_distribution(q: &FptQuery, cfg: &McConfig) -> Result<(f64, f64)> {
    let (nu, m) = reduced(q)?;
    let c = McConfig {
        t_grid: vec![q.t],
        ..cfg.clone()
    };
    let res = mc_hitting(nu, q.x, q.a, &c)?;
    let (_, v, se) = res.cdf[0];
    Ok(((v * m).min(1.0), se * m))
}
