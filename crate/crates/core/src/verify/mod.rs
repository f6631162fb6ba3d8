//! Experiment suites that measure the quantitative estimates behind the
//! "large-mass minimizers are balls" argument and fit their constants.
//!
//! Every suite returns a [`VerifyRecord`]: a table of measurements, fitted
//! constants/exponents, and a list of checks with a pass / fail /
//! inconclusive verdict each.

mod dyadic;
mod el;
mod family;
mod gaps;
mod scaling;

use std::collections::BTreeMap;

use serde::Serialize;

pub use dyadic::{dyadic_accounting, DyadicLevel, DyadicOutcome};
pub use el::{check_el_ball, el_profile, ElProfile};
pub use family::{profile_family, random_profiles, FamilyMember, FamilySpec, MemberKind};
pub use gaps::{
    check_attractive_gap, check_repulsive_gap, check_shell_deficit, check_shell_potential_bound, competitor_suite,
    gap_suites, shell_deficit_suite, shell_potential_sup, GapOutcome, ShellDeficit,
};
pub use scaling::{scaling_study, shell_width, ScalingPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Inconclusive,
    Fail,
}

impl Verdict {
    /// `margin` is how far the measurement clears its bound (negative when
    /// violated). Violations up to `budget` pass; up to three budgets are
    /// inconclusive.
    pub fn classify(margin: f64, budget: f64) -> Self {
        if margin.is_nan() {
            Verdict::Fail
        } else if margin >= -budget {
            Verdict::Pass
        } else if margin >= -3.0 * budget {
            Verdict::Inconclusive
        } else {
            Verdict::Fail
        }
    }

    /// Worst of a set of verdicts (`Fail > Inconclusive > Pass`).
    pub fn combine<I: IntoIterator<Item = Verdict>>(items: I) -> Self {
        items.into_iter().max().unwrap_or(Verdict::Pass)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Inconclusive => "inconclusive",
            Verdict::Fail => "fail",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One inequality test: `measured` against `bound`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    pub budget: f64,
    pub verdict: Verdict,
}

impl Check {
    /// `measured ≤ bound`.
    pub fn at_most(name: &str, measured: f64, bound: f64, budget: f64) -> Self {
        Self::new(name, measured, bound, budget, bound - measured)
    }

    /// `measured ≥ bound`.
    pub fn at_least(name: &str, measured: f64, bound: f64, budget: f64) -> Self {
        Self::new(name, measured, bound, budget, measured - bound)
    }

    /// `|measured - target| ≤ tol`.
    pub fn within(name: &str, measured: f64, target: f64, tol: f64) -> Self {
        Self::new(name, measured, target, tol, tol - (measured - target).abs())
    }

    /// A yes/no property with no tolerance.
    pub fn holds(name: &str, ok: bool) -> Self {
        let v = if ok { 1.0 } else { 0.0 };
        Self::new(name, v, 1.0, 0.0, v - 1.0)
    }

    fn new(name: &str, measured: f64, bound: f64, budget: f64, margin: f64) -> Self {
        Self {
            name: name.to_string(),
            measured,
            bound,
            budget,
            verdict: Verdict::classify(margin, budget),
        }
    }
}

/// Result of one suite.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyRecord {
    pub statement: String,
    pub inputs: BTreeMap<String, serde_json::Value>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub fits: BTreeMap<String, f64>,
    /// Discretization budget, proportional to max cell width / R.
    pub budget: f64,
    pub checks: Vec<Check>,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

impl VerifyRecord {
    pub fn new(statement: &str, columns: &[&str]) -> Self {
        Self {
            statement: statement.to_string(),
            inputs: BTreeMap::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            fits: BTreeMap::new(),
            budget: 0.0,
            checks: Vec::new(),
            verdict: Verdict::Pass,
            notes: Vec::new(),
        }
    }

    pub fn input<T: Serialize>(&mut self, key: &str, value: T) -> &mut Self {
        self.inputs
            .insert(key.to_string(), serde_json::to_value(value).unwrap_or(serde_json::Value::Null));
        self
    }

    pub fn fit(&mut self, key: &str, value: f64) -> &mut Self {
        self.fits.insert(key.to_string(), value);
        self
    }

    pub fn check(&mut self, c: Check) -> &mut Self {
        self.checks.push(c);
        self.verdict = Verdict::combine(self.checks.iter().map(|c| c.verdict));
        self
    }

    pub fn note(&mut self, text: impl Into<String>) -> &mut Self {
        self.notes.push(text.into());
        self
    }

    pub fn find_check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

#[cfg(test)]
mod tests;
