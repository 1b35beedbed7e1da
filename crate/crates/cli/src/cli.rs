use std::error::Error as StdError;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use qwalk_core::cert::{certify, CertifyOptions};
use qwalk_core::graph::{density, gen_complete, gen_cycle, gen_gnp, gen_two_clique_bridge, Graph};
use qwalk_core::io;
use qwalk_core::tree::{check_decomposition, decompose_tree};
use qwalk_core::walk::{choose_start, run_walk, sandwich_bounds, walk_subgraph, ListModel};
use qwalk_core::{
    gen_nary_tree, gen_path_tree, gen_random_tree, image_subgraph, random_homomorphism,
};
use serde_json::json;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::experiments;

pub type CliResult<T> = std::result::Result<T, Box<dyn StdError + Send + Sync>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
}

#[derive(Debug, Parser)]
#[command(
    name = "qwalk",
    version,
    about = "Random walks and tree embeddings on quasirandom graphs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a generated graph to a file.
    Generate(GenerateArgs),
    /// Measure how quasirandom a graph is.
    Certify(CertifyArgs),
    /// Run one walk and summarize its traversed subgraph.
    Walk(WalkArgs),
    /// Embed one random tree and summarize its image.
    Tree(TreeArgs),
    /// Run a named experiment and emit its JSON report.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GraphKind {
    Gnp,
    Complete,
    Cycle,
    TwoClique,
}

#[derive(Debug, Clone, Args)]
pub struct HostArgs {
    /// Read the host from a graph file (`.gz` accepted) instead of generating it.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "gnp")]
    pub kind: GraphKind,
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    /// Quasirandomness parameter; also sizes the small clique of `two-clique`.
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

impl HostArgs {
    pub fn build(&self) -> CliResult<Graph> {
        if let Some(path) = &self.graph {
            return Ok(io::read_graph(io::open(path)?)?);
        }
        Ok(match self.kind {
            GraphKind::Gnp => gen_gnp(self.n, self.p, self.seed)?,
            GraphKind::Complete => gen_complete(self.n),
            GraphKind::Cycle => gen_cycle(self.n)?,
            GraphKind::TwoClique => gen_two_clique_bridge(self.n, self.eps)?,
        })
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub host: HostArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub host: HostArgs,
    /// Sampled set pairs.
    #[arg(long, default_value_t = 2000)]
    pub trials: u64,
    /// Best-response refinement rounds per sampled pair.
    #[arg(long, default_value_t = 0)]
    pub refine: u32,
    /// Exact discrepancy by exhaustive search (small graphs only).
    #[arg(long)]
    pub exhaustive: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct WalkArgs {
    #[command(flatten)]
    pub host: HostArgs,
    /// Walk length as a multiple of n².
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    /// Explicit walk length; overrides `--alpha`.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Start vertex; defaults to the lowest-id balanced vertex.
    #[arg(long)]
    pub start: Option<usize>,
    /// Seed of the walk, separate from the host seed.
    #[arg(long, default_value_t = 1)]
    pub walk_seed: u64,
    /// Write the vertex sequence here.
    #[arg(long)]
    pub trace_out: Option<PathBuf>,
    /// Write the traversed subgraph here.
    #[arg(long)]
    pub subgraph_out: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TreeKind {
    Path,
    Nary,
    Random,
}

#[derive(Debug, Args)]
pub struct TreeArgs {
    #[command(flatten)]
    pub host: HostArgs,
    /// Read the tree from a file instead of generating it.
    #[arg(long)]
    pub tree: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "random")]
    pub shape: TreeKind,
    /// Tree edges as a multiple of n² (path and random shapes).
    #[arg(long, default_value_t = 0.3)]
    pub alpha: f64,
    #[arg(long, default_value_t = 2)]
    pub branching: usize,
    #[arg(long, default_value_t = 2)]
    pub depth: usize,
    #[arg(long, default_value_t = 4)]
    pub max_degree: usize,
    #[arg(long)]
    pub start: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub walk_seed: u64,
    /// Also decompose the tree into pieces of `L..=3L` edges.
    #[arg(long)]
    pub decompose: Option<usize>,
    #[arg(long)]
    pub tree_out: Option<PathBuf>,
    /// Write the homomorphism (`j image`) here.
    #[arg(long)]
    pub map_out: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// density, visits, preservation, pathology, mixing, tree-counterexample, tree-embedding
    pub name: String,
    /// Full configuration as JSON; flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

impl ExperimentArgs {
    pub fn resolve(&self) -> CliResult<ExperimentConfig> {
        let kind = ExperimentKind::parse(&self.name)
            .ok_or_else(|| format!("unknown experiment `{}`", self.name))?;
        let mut cfg = match &self.config {
            Some(path) => {
                let cfg: ExperimentConfig = serde_json::from_reader(std::fs::File::open(path)?)?;
                if cfg.experiment != kind {
                    return Err(format!(
                        "config is for `{}`, not `{}`",
                        cfg.experiment.name(),
                        kind.name()
                    )
                    .into());
                }
                cfg
            }
            None => ExperimentConfig::preset(kind),
        };
        if let Some(n) = self.n {
            cfg.n = n;
        }
        if let Some(p) = self.p {
            match &mut cfg.generator {
                crate::config::Generator::Gnp { p: q } => *q = p,
                _ => return Err("--p only applies to gnp hosts".into()),
            }
        }
        if let Some(eps) = self.eps {
            cfg.eps = eps;
        }
        if let Some(alpha) = self.alpha {
            cfg.alpha = alpha;
        }
        if let Some(trials) = self.trials {
            cfg.trials = trials;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => {
            let mut w = io::create(path)?;
            w.write_all(text.as_bytes())?;
            w.write_all(b"\n")?;
            w.flush()?;
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn to_json(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("serializable")
}

pub fn execute(cli: &Cli) -> CliResult<Outcome> {
    match &cli.command {
        Command::Generate(a) => {
            let g = a.host.build()?;
            let mut w = io::create(&a.out)?;
            io::write_graph(&mut w, &g)?;
            w.flush()?;
            Ok(Outcome::Pass)
        }
        Command::Certify(a) => {
            let g = a.host.build()?;
            let mut opts = CertifyOptions::new(a.host.eps, a.trials, a.host.seed);
            opts.exhaustive = a.exhaustive;
            opts.sample = opts.sample.with_refinement(a.refine);
            let report = certify(&g, &opts)?;
            emit(a.out.as_deref(), &serde_json::to_string_pretty(&report)?)?;
            Ok(if report.within_target() {
                Outcome::Pass
            } else {
                Outcome::Fail
            })
        }
        Command::Walk(a) => {
            let g = a.host.build()?;
            let start = choose_start(&g, a.host.eps, a.start)?;
            let steps = a
                .steps
                .unwrap_or_else(|| (a.alpha * (g.n() as f64).powi(2)).round() as usize);
            let mut model = ListModel::new(a.walk_seed, g.n());
            let trace = run_walk(&g, &mut model, start.vertex, steps)?;
            let sub = walk_subgraph(&g, &trace);
            if let Some(path) = &a.trace_out {
                let mut w = io::create(path)?;
                io::write_trace(&mut w, &trace)?;
                w.flush()?;
            }
            if let Some(path) = &a.subgraph_out {
                let mut w = io::create(path)?;
                io::write_subgraph(&mut w, &sub)?;
                w.flush()?;
            }
            let (lo, hi) = sandwich_bounds(&g, &trace);
            let rho = density(&g)?;
            let summary = json!({
                "n": g.n(),
                "host_edges": g.edge_count(),
                "rho": rho,
                "start": start.vertex,
                "start_balanced": start.balanced,
                "steps": steps,
                "walk_edges": sub.len(),
                "alpha_lo": lo,
                "alpha_hi": hi,
            });
            emit(a.out.as_deref(), &to_json(&summary))?;
            Ok(Outcome::Pass)
        }
        Command::Tree(a) => {
            let g = a.host.build()?;
            let edges = (a.alpha * (g.n() as f64).powi(2)).round() as usize;
            let t = match (&a.tree, a.shape) {
                (Some(path), _) => io::read_tree(io::open(path)?)?,
                (None, TreeKind::Path) => gen_path_tree(edges),
                (None, TreeKind::Nary) => gen_nary_tree(a.branching, a.depth),
                (None, TreeKind::Random) => gen_random_tree(edges + 1, a.max_degree, a.host.seed)?,
            };
            let start = choose_start(&g, a.host.eps, a.start)?;
            let mut model = ListModel::new(a.walk_seed, g.n());
            let h = random_homomorphism(&g, &t, &mut model, start.vertex)?;
            let sub = image_subgraph(&g, &t, &h);
            if let Some(path) = &a.tree_out {
                let mut w = io::create(path)?;
                io::write_tree(&mut w, &t)?;
                w.flush()?;
            }
            if let Some(path) = &a.map_out {
                let mut w = io::create(path)?;
                io::write_homomorphism(&mut w, &h)?;
                w.flush()?;
            }
            let mut summary = json!({
                "n": g.n(),
                "tree_edges": t.edge_count(),
                "tree_max_degree": t.max_degree(),
                "root_image": start.vertex,
                "root_balanced": start.balanced,
                "image_edges": sub.len(),
            });
            let mut outcome = Outcome::Pass;
            if let Some(l) = a.decompose {
                let d = decompose_tree(&t, l)?;
                let violations = check_decomposition(&t, l, &d);
                if !violations.is_empty() {
                    outcome = Outcome::Fail;
                }
                summary["decomposition"] = json!({
                    "piece_size": l,
                    "pieces": d.pieces.len(),
                    "sizes": d.pieces.iter().map(|p| p.edges.len()).collect::<Vec<_>>(),
                    "violations": violations,
                });
            }
            emit(a.out.as_deref(), &to_json(&summary))?;
            Ok(outcome)
        }
        Command::Experiment(a) => {
            let cfg = a.resolve()?;
            let report = experiments::run(&cfg)?;
            emit(a.out.as_deref(), &report.to_json())?;
            for c in report.failed_checks() {
                eprintln!(
                    "check failed: {} = {} ({:?} {})",
                    c.name, c.observed, c.relation, c.threshold
                );
            }
            Ok(if report.pass {
                Outcome::Pass
            } else {
                Outcome::Fail
            })
        }
    }
}
