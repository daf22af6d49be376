//! Named experiments: each produces data tables, an optional plot
//! description, and pass/fail checks against the theory.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::error::{input, Result};

mod bounds_table;
mod figures;
mod studies;

/// A single table entry.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Bool(bool),
    Text(String),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Float(v) => write!(f, "{v}"),
            Cell::Bool(v) => write!(f, "{v}"),
            Cell::Text(v) => write!(f, "{v}"),
        }
    }
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(v) => Some(*v as f64),
            Cell::Float(v) => Some(*v),
            _ => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width for table {}", self.name);
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric values of a column (non-numeric cells become NaN).
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[j].as_f64().unwrap_or(f64::NAN)).collect())
    }
}

/// A named pass/fail verdict with a human-readable reason.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// How to draw the primary table as a line chart.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotSpec {
    pub title: String,
    pub x: String,
    pub y: Vec<String>,
    /// Column splitting rows into separate series.
    pub group: Option<String>,
    pub x_label: String,
    pub y_label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentOutput {
    pub experiment: String,
    /// The first table is the primary data table.
    pub tables: Vec<Table>,
    pub checks: Vec<Check>,
    pub plot: Option<PlotSpec>,
}

impl ExperimentOutput {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

/// A tunable numeric parameter and its default.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamSpec {
    pub key: &'static str,
    pub default: f64,
    pub help: &'static str,
}

/// Seed, replication override, and experiment-specific numeric parameters.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Params {
    pub seed: u64,
    pub replications: Option<usize>,
    pub values: BTreeMap<String, f64>,
}

impl Params {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn set(mut self, key: &str, value: f64) -> Self {
        self.values.insert(key.to_string(), value);
        self
    }

    fn get(&self, specs: &[ParamSpec], key: &str) -> f64 {
        self.values.get(key).copied().unwrap_or_else(|| {
            specs
                .iter()
                .find(|s| s.key == key)
                .map(|s| s.default)
                .unwrap_or_else(|| panic!("undeclared parameter {key}"))
        })
    }

    fn count(&self, specs: &[ParamSpec], key: &str) -> Result<usize> {
        let v = self.get(specs, key);
        if !(v >= 0.0) || v.fract() != 0.0 || v > 1e12 {
            return input(format!("parameter {key} must be a non-negative integer, got {v}"));
        }
        Ok(v as usize)
    }

    fn reps(&self, default: usize) -> Result<usize> {
        match self.replications {
            Some(0) => input("replications must be >= 1"),
            Some(r) => Ok(r),
            None => Ok(default),
        }
    }
}

/// The experiment catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    Figure1,
    Figure2,
    Figure3,
    BoundsTable,
    Multistep,
    Pvalue,
    Classify,
    Maxinfo,
    Prop3Sandwich,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 9] = [
        ExperimentKind::Figure1,
        ExperimentKind::Figure2,
        ExperimentKind::Figure3,
        ExperimentKind::BoundsTable,
        ExperimentKind::Multistep,
        ExperimentKind::Pvalue,
        ExperimentKind::Classify,
        ExperimentKind::Maxinfo,
        ExperimentKind::Prop3Sandwich,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Figure1 => "figure1",
            ExperimentKind::Figure2 => "figure2",
            ExperimentKind::Figure3 => "figure3",
            ExperimentKind::BoundsTable => "bounds-table",
            ExperimentKind::Multistep => "multistep",
            ExperimentKind::Pvalue => "pvalue",
            ExperimentKind::Classify => "classify",
            ExperimentKind::Maxinfo => "maxinfo",
            ExperimentKind::Prop3Sandwich => "prop3-sandwich",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn description(self) -> &'static str {
        match self {
            ExperimentKind::Figure1 => "argmax bias, entropy and bound as one signal strengthens",
            ExperimentKind::Figure2 => "LARS bias and information bound for three signal strengths",
            ExperimentKind::Figure3 => "Gibbs versus top-K selection: accuracy and bias",
            ExperimentKind::BoundsTable => "every closed-form bound against its empirical quantity",
            ExperimentKind::Multistep => "noisy adaptive queries: error versus history length",
            ExperimentKind::Pvalue => "selection of small p-values",
            ExperimentKind::Classify => "ERM overfitting versus information and VC bounds",
            ExperimentKind::Maxinfo => "mutual information versus max-information under signal",
            ExperimentKind::Prop3Sandwich => "entropy sandwich on the squared error of argmax",
        }
    }

    /// Replication count used when none is given.
    pub fn default_replications(self) -> usize {
        match self {
            ExperimentKind::Figure1 => 1_000,
            ExperimentKind::Figure2 => 200,
            ExperimentKind::Figure3 => 200,
            ExperimentKind::BoundsTable => 20_000,
            ExperimentKind::Multistep => 2_000,
            ExperimentKind::Pvalue => 100_000,
            ExperimentKind::Classify => 10_000,
            ExperimentKind::Maxinfo => 50_000,
            ExperimentKind::Prop3Sandwich => 50_000,
        }
    }

    pub fn params(self) -> &'static [ParamSpec] {
        match self {
            ExperimentKind::Figure1 => figures::FIGURE1_PARAMS,
            ExperimentKind::Figure2 => figures::FIGURE2_PARAMS,
            ExperimentKind::Figure3 => figures::FIGURE3_PARAMS,
            ExperimentKind::BoundsTable => bounds_table::PARAMS,
            ExperimentKind::Multistep => studies::MULTISTEP_PARAMS,
            ExperimentKind::Pvalue => studies::PVALUE_PARAMS,
            ExperimentKind::Classify => studies::CLASSIFY_PARAMS,
            ExperimentKind::Maxinfo => studies::MAXINFO_PARAMS,
            ExperimentKind::Prop3Sandwich => studies::PROP3_PARAMS,
        }
    }
}

/// Rejects parameters the experiment does not declare.
pub fn validate_params(kind: ExperimentKind, params: &Params) -> Result<()> {
    let specs = kind.params();
    for key in params.values.keys() {
        if !specs.iter().any(|s| s.key == key) {
            let known: Vec<&str> = specs.iter().map(|s| s.key).collect();
            return input(format!(
                "unknown parameter `{key}` for {} (known: {})",
                kind.name(),
                if known.is_empty() { "none".to_string() } else { known.join(", ") }
            ));
        }
    }
    Ok(())
}

pub fn run(kind: ExperimentKind, params: &Params) -> Result<ExperimentOutput> {
    validate_params(kind, params)?;
    let reps = params.reps(kind.default_replications())?;
    match kind {
        ExperimentKind::Figure1 => figures::figure1(params, reps),
        ExperimentKind::Figure2 => figures::figure2(params, reps),
        ExperimentKind::Figure3 => figures::figure3(params, reps),
        ExperimentKind::BoundsTable => bounds_table::run(params, reps),
        ExperimentKind::Multistep => studies::multistep(params, reps),
        ExperimentKind::Pvalue => studies::pvalue(params, reps),
        ExperimentKind::Classify => studies::classify(params, reps),
        ExperimentKind::Maxinfo => studies::maxinfo(params, reps),
        ExperimentKind::Prop3Sandwich => studies::prop3_sandwich(params, reps),
    }
}

/// `points` evenly spaced values from `lo` to `hi` inclusive.
fn grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if points == 0 || !(lo <= hi) {
        return input(format!("grid needs points >= 1 and lo <= hi (got {points}, {lo}, {hi})"));
    }
    if points == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..points)
        .map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64)
        .collect())
}

/// Non-increasing within `slack[k]` at every step `k -> k+1`.
fn non_increasing(values: &[f64], slack: impl Fn(usize) -> f64) -> Option<usize> {
    (0..values.len().saturating_sub(1)).find(|&k| values[k + 1] > values[k] + slack(k))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_round_trips() {
        for k in ExperimentKind::ALL {
            assert_eq!(ExperimentKind::from_name(k.name()), Some(k));
        }
        assert_eq!(ExperimentKind::from_name("figure9"), None);
    }

    #[test]
    fn grid_endpoints() {
        let g = grid(1.0, 4.0, 9).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g[0], 1.0);
        assert_eq!(g[1], 1.375);
        assert_eq!(g[8], 4.0);
    }

    #[test]
    fn unknown_parameters_are_named() {
        let p = Params::with_seed(1).set("bogus", 1.0);
        let err = validate_params(ExperimentKind::Figure1, &p).unwrap_err();
        assert!(err.to_string().contains("bogus"));
    }

    #[test]
    fn monotonicity_helper() {
        assert_eq!(non_increasing(&[3.0, 2.0, 2.04, 1.0], |_| 0.05), None);
        assert_eq!(non_increasing(&[3.0, 2.0, 2.1], |_| 0.05), Some(1));
    }
}
