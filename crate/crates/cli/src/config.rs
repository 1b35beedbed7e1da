use std::collections::BTreeMap;
use std::path::PathBuf;

use qwalk_core::graph::{gen_complete, gen_cycle, gen_gnp, gen_two_clique_bridge};
use qwalk_core::{Error, Graph, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Density,
    Visits,
    Preservation,
    Pathology,
    Mixing,
    TreeCounterexample,
    TreeEmbedding,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        Self::Density,
        Self::Visits,
        Self::Preservation,
        Self::Pathology,
        Self::Mixing,
        Self::TreeCounterexample,
        Self::TreeEmbedding,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Density => "density",
            Self::Visits => "visits",
            Self::Preservation => "preservation",
            Self::Pathology => "pathology",
            Self::Mixing => "mixing",
            Self::TreeCounterexample => "tree-counterexample",
            Self::TreeEmbedding => "tree-embedding",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let s = s.replace('_', "-");
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// Host graph recipe. Random generators draw from the experiment seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Generator {
    Gnp { p: f64 },
    Complete,
    Cycle,
    TwoCliqueBridge { eps: f64 },
    File { path: PathBuf },
}

impl Generator {
    pub fn build(&self, n: usize, seed: u64) -> Result<Graph> {
        match self {
            Self::Gnp { p } => gen_gnp(n, *p, seed),
            Self::Complete => Ok(gen_complete(n)),
            Self::Cycle => gen_cycle(n),
            Self::TwoCliqueBridge { eps } => gen_two_clique_bridge(n, *eps),
            Self::File { path } => qwalk_core::io::read_graph(qwalk_core::io::open(path)?),
        }
    }
}

/// Tree embedded by the tree experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeShape {
    Path,
    Random {
        max_degree: usize,
    },
    /// Random trees for every cap Δ from 2 up to `⌊√n⌋`; reports only.
    RandomSweep,
}

/// Every run parameter, seed included. Experiment-specific knobs live in
/// `params` and pass/fail thresholds in `tolerances`; both fall back to the
/// documented defaults of each experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub n: usize,
    pub generator: Generator,
    pub alpha: f64,
    pub eps: f64,
    pub trials: u64,
    pub seed: u64,
    #[serde(default)]
    pub start: Option<usize>,
    #[serde(default)]
    pub schedule: Option<Vec<usize>>,
    #[serde(default)]
    pub tree: Option<TreeShape>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

impl ExperimentConfig {
    /// Defaults for one experiment.
    pub fn preset(kind: ExperimentKind) -> Self {
        let (n, generator, alpha, eps, trials) = match kind {
            ExperimentKind::Density => (2000, Generator::Gnp { p: 0.5 }, 0.5, 0.05, 10),
            ExperimentKind::Visits => (1000, Generator::Gnp { p: 0.5 }, 0.5, 0.05, 5),
            ExperimentKind::Preservation => (1000, Generator::Gnp { p: 0.5 }, 0.5, 0.05, 5),
            ExperimentKind::Pathology => {
                (600, Generator::TwoCliqueBridge { eps: 0.3 }, 0.3, 0.3, 200)
            }
            ExperimentKind::Mixing => (300, Generator::Gnp { p: 0.5 }, 0.0, 0.05, 100_000),
            ExperimentKind::TreeCounterexample => (2000, Generator::Complete, 0.25, 0.1, 5),
            ExperimentKind::TreeEmbedding => (1000, Generator::Gnp { p: 0.5 }, 0.3, 0.05, 5),
        };
        Self {
            experiment: kind,
            n,
            generator,
            alpha,
            eps,
            trials,
            seed: 1,
            start: None,
            schedule: None,
            tree: match kind {
                ExperimentKind::TreeEmbedding => Some(TreeShape::Random { max_degree: 4 }),
                _ => None,
            },
            params: BTreeMap::new(),
            tolerances: BTreeMap::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be finite and >= 0, got {}", self.alpha));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return bad(format!("eps must lie in (0, 1), got {}", self.eps));
        }
        if self.trials == 0 {
            return bad("trials must be positive".into());
        }
        if self.n < 2 {
            return bad(format!("n must be at least 2, got {}", self.n));
        }
        if let Generator::Gnp { p } = self.generator {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("p must lie in [0, 1], got {p}"));
            }
        }
        Ok(())
    }

    pub fn param(&self, key: &str, default: f64) -> f64 {
        self.params.get(key).copied().unwrap_or(default)
    }

    pub fn tolerance(&self, key: &str, default: f64) -> f64 {
        self.tolerances.get(key).copied().unwrap_or(default)
    }

    /// Walk length `round(α n²)`.
    pub fn walk_length(&self) -> usize {
        (self.alpha * (self.n as f64).powi(2)).round() as usize
    }
}
