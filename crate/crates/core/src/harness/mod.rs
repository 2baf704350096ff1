//! Validation suites, grid sweeps and their table formats.

mod suites;
mod sweep;

pub use suites::{run_suite, Suite, ValidateOptions};
pub use sweep::{
    parse_grid, run_sweep, Grid, SweepFormat, SweepRow, SweepSpec, SweepTable, XScaling, CSV_HEADER,
};

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// Version of the CSV and JSON layouts written by this module.
pub const SCHEMA_VERSION: u32 = 1;

/// How `observed` is compared with `expected` and `tolerance`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TolKind {
    /// `|observed - expected| <= tolerance * |expected|`
    Relative,
    /// `|observed - expected| <= tolerance`
    Absolute,
    /// `|observed - expected| <= tolerance * std_error`
    StdErrors,
    /// `observed <= tolerance`
    AtMost,
    /// `observed` in `[expected - tolerance, expected + tolerance]` with a
    /// symmetric band; used for ratio bands around 1.
    Band,
    /// `observed == 1` (a property that holds or not)
    Holds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    /// Criterion the check belongs to.
    pub group: String,
    pub id: String,
    pub inputs: BTreeMap<String, f64>,
    pub expected: Option<f64>,
    pub observed: Option<f64>,
    pub tolerance: f64,
    pub tol_kind: TolKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    pub fn new(group: &str, inputs: &[(&str, f64)], tol_kind: TolKind, tolerance: f64) -> Self {
        let inputs: BTreeMap<String, f64> =
            inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        let tag = inputs
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(",");
        Check {
            group: group.to_string(),
            id: if tag.is_empty() {
                group.to_string()
            } else {
                format!("{group}[{tag}]")
            },
            inputs,
            expected: None,
            observed: None,
            tolerance,
            tol_kind,
            std_error: None,
            pass: false,
            note: None,
        }
    }

    pub fn expect(mut self, v: f64) -> Self {
        self.expected = Some(v);
        self
    }

    pub fn with_std_error(mut self, se: f64) -> Self {
        self.std_error = Some(se);
        self
    }

    pub fn note(mut self, s: impl Into<String>) -> Self {
        self.note = Some(s.into());
        self
    }

    /// Records the outcome of a computation and grades it.
    pub fn observe(mut self, v: crate::Result<f64>) -> Self {
        match v {
            Ok(v) => self.observed = Some(v),
            Err(e) => {
                self.observed = None;
                self.note = Some(e.to_string());
            }
        }
        self.grade();
        self
    }

    pub fn grade(&mut self) {
        let Some(o) = self.observed.filter(|o| !o.is_nan()) else {
            self.pass = false;
            return;
        };
        let tol = self.tolerance;
        self.pass = match (self.tol_kind, self.expected) {
            (TolKind::Relative, Some(e)) => (o - e).abs() <= tol * e.abs(),
            (TolKind::Absolute, Some(e)) | (TolKind::Band, Some(e)) => (o - e).abs() <= tol,
            (TolKind::StdErrors, Some(e)) => {
                self.std_error.is_some_and(|se| (o - e).abs() <= tol * se)
            }
            (TolKind::AtMost, _) => o <= tol,
            (TolKind::Holds, _) => o == 1.0,
            _ => false,
        };
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub suite: String,
    pub schema_version: u32,
    pub checks: Vec<Check>,
    pub summary: Summary,
    /// Present only when timing was requested, so reports stay
    /// byte-reproducible by default.
    pub wall_time_s: Option<f64>,
}

impl ValidationReport {
    pub fn new(suite: &str, checks: Vec<Check>) -> Self {
        let pass = checks.iter().filter(|c| c.pass).count();
        ValidationReport {
            suite: suite.to_string(),
            schema_version: SCHEMA_VERSION,
            summary: Summary {
                pass,
                fail: checks.len() - pass,
            },
            checks,
            wall_time_s: None,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.summary.fail == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Criteria in first-seen order with their pass state.
    pub fn groups(&self) -> Vec<(String, bool, usize)> {
        let mut out: Vec<(String, bool, usize)> = Vec::new();
        for c in &self.checks {
            match out.iter_mut().find(|g| g.0 == c.group) {
                Some(g) => {
                    g.1 &= c.pass;
                    g.2 += 1;
                }
                None => out.push((c.group.clone(), c.pass, 1)),
            }
        }
        out
    }

    /// Every check as a table, one block per group.
    pub fn tables(&self) -> String {
        let mut s = String::new();
        for (g, _, _) in self.groups() {
            let _ = writeln!(s, "== {g}");
            let _ = writeln!(
                s,
                "{:<6} {:<52} {:>24} {:>24} {:>10}",
                "status", "check", "observed", "expected", "tol"
            );
            for c in self.checks.iter().filter(|c| c.group == g) {
                let _ = writeln!(
                    s,
                    "{:<6} {:<52} {:>24} {:>24} {:>10.3e}{}",
                    if c.pass { "pass" } else { "FAIL" },
                    c.id,
                    fmt_opt(c.observed),
                    fmt_opt(c.expected),
                    c.tolerance,
                    c.note
                        .as_deref()
                        .map(|n| format!("  {n}"))
                        .unwrap_or_default()
                );
            }
        }
        s
    }

    /// One line per criterion, then the failing checks.
    pub fn human_summary(&self) -> String {
        let mut s = String::new();
        for (g, ok, n) in self.groups() {
            let _ = writeln!(s, "{} {g} ({n} checks)", if ok { "PASS" } else { "FAIL" });
        }
        for c in self.checks.iter().filter(|c| !c.pass) {
            let _ = writeln!(
                s,
                "  failed {}: observed {} expected {} tol {} ({:?}){}",
                c.id,
                fmt_opt(c.observed),
                fmt_opt(c.expected),
                c.tolerance,
                c.tol_kind,
                c.note
                    .as_deref()
                    .map(|n| format!(" - {n}"))
                    .unwrap_or_default()
            );
        }
        let _ = writeln!(
            s,
            "{}: {} passed, {} failed",
            self.suite, self.summary.pass, self.summary.fail
        );
        s
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.6e}"))
}
