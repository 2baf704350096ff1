//! Grid sweeps over evaluators, emitted as CSV or JSON tables.

use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::suites::derive_seed;
use super::SCHEMA_VERSION;
use crate::error::{FptError, Result};
use crate::fpt::{density, distribution_estimate, DensityEstimate, EvalOptions, FptQuery, Method};
use crate::oracles::{InversionConfig, McConfig};

pub const CSV_HEADER: &str =
    "schema_version,nu,a,x,t,method,regime,value,err_bound,oracle_value,ratio,error";

/// A grid given by its points or as `log:lo:hi:n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Grid {
    Explicit(Vec<f64>),
    Log { lo: f64, hi: f64, n: usize },
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match *self {
            Grid::Explicit(ref v) => v.clone(),
            Grid::Log { lo, hi, n } => {
                if n == 1 {
                    return vec![lo];
                }
                let (l0, l1) = (lo.log10(), hi.log10());
                (0..n)
                    .map(|k| match k {
                        0 => lo,
                        k if k == n - 1 => hi,
                        k => 10f64.powf(l0 + (l1 - l0) * k as f64 / (n - 1) as f64),
                    })
                    .collect()
            }
        }
    }

    fn validate(&self, what: &str) -> Result<Vec<f64>> {
        if let Grid::Log { lo, hi, n } = *self {
            if !(lo > 0.0) || (n > 1 && !(hi > lo)) {
                return Err(FptError::InvalidConfig(format!(
                    "{what}: log grid needs 0 < lo < hi"
                )));
            }
        }
        let v = self.values();
        if v.is_empty() {
            return Err(FptError::InvalidConfig(format!("{what} is empty")));
        }
        if v.iter().any(|x| !x.is_finite()) || v.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(FptError::InvalidConfig(format!(
                "{what} must be finite and strictly increasing"
            )));
        }
        Ok(v)
    }
}

/// Parses `1,2,4` or `log:1e2:1e6:9`; an empty string is an empty grid.
pub fn parse_grid(s: &str) -> Result<Grid> {
    let bad = |e: &dyn std::fmt::Display| FptError::InvalidConfig(format!("bad grid '{s}': {e}"));
    let s = s.trim();
    if let Some(rest) = s.strip_prefix("log:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err(bad(&"expected log:lo:hi:n"));
        }
        return Ok(Grid::Log {
            lo: parts[0].parse().map_err(|e| bad(&e))?,
            hi: parts[1].parse().map_err(|e| bad(&e))?,
            n: parts[2].parse().map_err(|e| bad(&e))?,
        });
    }
    if s.is_empty() {
        return Ok(Grid::Explicit(Vec::new()));
    }
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| bad(&e)))
        .collect::<Result<Vec<_>>>()
        .map(Grid::Explicit)
}

/// How grid `x` values are turned into starting points at each `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum XScaling {
    None,
    /// `x * sqrt(t)`
    SqrtT,
    /// `x * t`
    T,
}

impl XScaling {
    fn apply(self, x: f64, t: f64) -> f64 {
        match self {
            XScaling::None => x,
            XScaling::SqrtT => x * t.sqrt(),
            XScaling::T => x * t,
        }
    }
}

impl FromStr for XScaling {
    type Err = FptError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(XScaling::None),
            "sqrt-t" => Ok(XScaling::SqrtT),
            "t" => Ok(XScaling::T),
            _ => Err(FptError::InvalidConfig(format!(
                "unknown x scaling '{s}' (none, sqrt-t, t)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepFormat {
    Csv,
    Json,
}

impl FromStr for SweepFormat {
    type Err = FptError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(SweepFormat::Csv),
            "json" => Ok(SweepFormat::Json),
            _ => Err(FptError::InvalidConfig(format!(
                "unknown format '{s}' (csv, json)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub orders: Vec<f64>,
    pub a: f64,
    pub x_grid: Grid,
    pub x_scaling: XScaling,
    pub t_grid: Grid,
    pub methods: Vec<Method>,
    /// Tabulate `P[sigma <= t]` instead of the density.
    pub distribution: bool,
    pub seed: u64,
    pub paths: u64,
    pub gs_terms: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            orders: vec![0.5],
            a: 1.0,
            x_grid: Grid::Explicit(vec![2.0]),
            x_scaling: XScaling::None,
            t_grid: Grid::Explicit(vec![1.0]),
            methods: vec![Method::Auto],
            distribution: false,
            seed: McConfig::default().seed,
            paths: McConfig::default().paths,
            gs_terms: InversionConfig::default().gs_terms,
        }
    }
}

impl SweepSpec {
    /// Checks the grids and returns the `(nu, x, t)` points in output order.
    pub fn points(&self) -> Result<Vec<(f64, f64, f64)>> {
        if self.orders.is_empty() {
            return Err(FptError::InvalidConfig("order list is empty".into()));
        }
        if self.methods.is_empty() {
            return Err(FptError::InvalidConfig("method list is empty".into()));
        }
        if !(self.a > 0.0) {
            return Err(FptError::InvalidConfig(format!(
                "a must be positive, got {}",
                self.a
            )));
        }
        let xs = self.x_grid.validate("x grid")?;
        let ts = self.t_grid.validate("t grid")?;
        if ts[0] <= 0.0 {
            return Err(FptError::InvalidConfig("t grid must be positive".into()));
        }
        let mut out = Vec::with_capacity(self.orders.len() * xs.len() * ts.len());
        for &nu in &self.orders {
            for &x in &xs {
                for &t in &ts {
                    let xv = self.x_scaling.apply(x, t);
                    if !(xv > self.a) {
                        return Err(FptError::InvalidConfig(format!(
                            "x = {xv} at t = {t} does not exceed a = {}",
                            self.a
                        )));
                    }
                    out.push((nu, xv, t));
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub nu: f64,
    pub a: f64,
    pub x: f64,
    pub t: f64,
    pub method: String,
    pub regime: Option<String>,
    pub value: Option<f64>,
    pub err_bound: Option<f64>,
    pub oracle_value: Option<f64>,
    pub ratio: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub schema_version: u32,
    pub distribution: bool,
    pub rows: Vec<SweepRow>,
}

fn num(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.16e}")).unwrap_or_default()
}

impl SweepTable {
    pub fn all_failed(&self) -> bool {
        self.rows.iter().all(|r| r.error.is_some())
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER.split(','))
            .expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                SCHEMA_VERSION.to_string(),
                format!("{:.16e}", r.nu),
                format!("{:.16e}", r.a),
                format!("{:.16e}", r.x),
                format!("{:.16e}", r.t),
                r.method.clone(),
                r.regime.clone().unwrap_or_default(),
                num(r.value),
                num(r.err_bound),
                num(r.oracle_value),
                num(r.ratio),
                r.error.clone().unwrap_or_default(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let t: SweepTable = serde_json::from_str(s)
            .map_err(|e| FptError::InvalidConfig(format!("bad sweep table: {e}")))?;
        if t.schema_version != SCHEMA_VERSION {
            return Err(FptError::InvalidConfig(format!(
                "schema version {} is not {SCHEMA_VERSION}",
                t.schema_version
            )));
        }
        Ok(t)
    }

    pub fn render(&self, format: SweepFormat) -> String {
        match format {
            SweepFormat::Csv => self.to_csv(),
            SweepFormat::Json => self.to_json(),
        }
    }
}

fn evaluate(q: &FptQuery, method: Method, spec: &SweepSpec, seed: u64) -> Result<DensityEstimate> {
    let opts = EvalOptions {
        method,
        inversion: InversionConfig {
            gs_terms: spec.gs_terms,
            ..Default::default()
        },
        mc: McConfig {
            paths: spec.paths,
            seed,
            ..Default::default()
        },
        ..Default::default()
    };
    if spec.distribution {
        distribution_estimate(q, &opts)
    } else {
        density(q, &opts)
    }
}

/// One row per `(nu, x, t, method)` in input order. When an oracle method
/// is listed, the first one supplies `oracle_value` for every row of its
/// point.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepTable> {
    let points = spec.points()?;
    let oracle_pos = spec.methods.iter().position(|m| m.is_oracle());
    let rows: Vec<Vec<SweepRow>> = points
        .par_iter()
        .enumerate()
        .map(|(i, &(nu, x, t))| {
            let seed = derive_seed(spec.seed, i as u64);
            let results: Vec<Result<DensityEstimate>> = match FptQuery::new(nu, x, spec.a, t) {
                Ok(q) => spec
                    .methods
                    .iter()
                    .map(|&m| evaluate(&q, m, spec, seed))
                    .collect(),
                Err(e) => spec.methods.iter().map(|_| Err(e.clone())).collect(),
            };
            let oracle = oracle_pos.and_then(|k| results[k].as_ref().ok().map(|e| e.value));
            spec.methods
                .iter()
                .zip(results)
                .map(|(m, r)| {
                    let mut row = SweepRow {
                        nu,
                        a: spec.a,
                        x,
                        t,
                        method: m.as_str().to_string(),
                        regime: None,
                        value: None,
                        err_bound: None,
                        oracle_value: oracle,
                        ratio: None,
                        error: None,
                    };
                    match r {
                        Ok(e) => {
                            row.method = e.method.as_str().to_string();
                            row.regime = Some(e.regime.as_str().to_string());
                            row.value = Some(e.value);
                            row.err_bound = e.err_bound;
                            row.ratio = oracle.map(|o| e.value / o);
                        }
                        Err(e) => row.error = Some(e.to_string()),
                    }
                    row
                })
                .collect()
        })
        .collect();
    Ok(SweepTable {
        schema_version: SCHEMA_VERSION,
        distribution: spec.distribution,
        rows: rows.into_iter().flatten().collect(),
    })
}
