use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

/// Bumped whenever the report layout changes.
pub const SCHEMA_VERSION: u32 = 1;
pub const CODE_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), "/", env!("CARGO_PKG_VERSION"));
pub const HISTOGRAM_BINS: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HostSummary {
    pub n: usize,
    pub edges: usize,
    pub rho: f64,
    pub start: usize,
    pub start_balanced: bool,
    pub connected: bool,
    pub bipartite: bool,
}

/// Measurements of one trial, keyed by name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: u64,
    pub seed: u64,
    pub values: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation; zero for a single trial.
    pub sd: f64,
    pub min: f64,
    pub max: f64,
    pub histogram: Histogram,
}

impl Aggregate {
    pub fn from_values(xs: &[f64]) -> Option<Self> {
        if xs.is_empty() {
            return None;
        }
        let count = xs.len();
        let mean = xs.iter().sum::<f64>() / count as f64;
        let sd = if count > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
        } else {
            0.0
        };
        let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut counts = vec![0u64; HISTOGRAM_BINS];
        let width = (max - min) / HISTOGRAM_BINS as f64;
        for &x in xs {
            let bin = if width > 0.0 {
                (((x - min) / width) as usize).min(HISTOGRAM_BINS - 1)
            } else {
                0
            };
            counts[bin] += 1;
        }
        Some(Self {
            count,
            mean,
            sd,
            min,
            max,
            histogram: Histogram {
                lo: min,
                hi: max,
                counts,
            },
        })
    }
}

/// A theoretical value with the formula it came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub name: String,
    pub value: f64,
    pub formula: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    AtMost,
    AtLeast,
    Below,
    Above,
}

impl Relation {
    pub fn holds(self, observed: f64, threshold: f64) -> bool {
        match self {
            Self::AtMost => observed <= threshold,
            Self::AtLeast => observed >= threshold,
            Self::Below => observed < threshold,
            Self::Above => observed > threshold,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub observed: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, observed: f64, relation: Relation, threshold: f64) -> Self {
        Self {
            name: name.into(),
            observed,
            relation,
            threshold,
            pass: relation.holds(observed, threshold),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub code_version: String,
    pub config: ExperimentConfig,
    pub host: HostSummary,
    pub trials: Vec<TrialRecord>,
    pub aggregates: BTreeMap<String, Aggregate>,
    pub predicted: Vec<Prediction>,
    /// Report-level quantities that are neither per-trial nor predictions.
    pub derived: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub pass: bool,
}

impl ExperimentReport {
    pub fn new(config: ExperimentConfig, host: HostSummary) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            code_version: CODE_VERSION.to_string(),
            config,
            host,
            trials: Vec::new(),
            aggregates: BTreeMap::new(),
            predicted: Vec::new(),
            derived: BTreeMap::new(),
            checks: Vec::new(),
            notes: Vec::new(),
            pass: true,
        }
    }

    pub fn predict(&mut self, name: &str, value: f64, formula: &str) {
        self.predicted.push(Prediction {
            name: name.into(),
            value,
            formula: formula.into(),
        });
    }

    pub fn check(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn prediction(&self, name: &str) -> Option<f64> {
        self.predicted
            .iter()
            .find(|p| p.name == name)
            .map(|p| p.value)
    }

    pub fn aggregate(&self, name: &str) -> Option<&Aggregate> {
        self.aggregates.get(name)
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    /// Column of one measurement across trials, skipping trials without it.
    pub fn column(&self, name: &str) -> Vec<f64> {
        self.trials
            .iter()
            .filter_map(|t| t.values.get(name).copied())
            .collect()
    }

    /// Recomputes aggregates from the per-trial records and sets `pass`.
    pub fn finish(mut self) -> Self {
        let names: std::collections::BTreeSet<String> = self
            .trials
            .iter()
            .flat_map(|t| t.values.keys().cloned())
            .collect();
        self.aggregates = names
            .into_iter()
            .filter_map(|k| Aggregate::from_values(&self.column(&k)).map(|a| (k, a)))
            .collect();
        self.pass = self.checks.iter().all(|c| c.pass);
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports contain only finite numbers and strings")
    }
}
