//! The per-vertex list model, random walks driven by it, and the statistics
//! measured on walks.
//!
//! A [`ListModel`] assigns each vertex `v` an infinite list of uniform
//! neighbor choices `entry(v, 1), entry(v, 2), …`. A walk consumes the lists in
//! order: on its `j`-th departure from `v` it moves to `entry(v, j)`. Because
//! the list subgraph `G_L(α)` reads the same entries, every walk is sandwiched
//! between two list subgraphs (see [`sandwich_bounds`]).

use fixedbitset::FixedBitSet;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{balanced_vertices, density, Graph, VertexSet, ROUNDING_GUARD};
use crate::rng::{trial_seed, CounterRng, Domain};

/// Replayable per-vertex neighbor lists plus the walk's consumption counters.
#[derive(Clone, Debug)]
pub struct ListModel {
    seed: u64,
    consumed: Vec<u64>,
}

impl ListModel {
    pub fn new(seed: u64, n: usize) -> Self {
        Self {
            seed,
            consumed: vec![0; n],
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The `j`-th entry of `L_v` (`j ≥ 1`). `None` when `v` is isolated.
    #[inline]
    pub fn entry(&self, g: &Graph, v: usize, j: u64) -> Option<usize> {
        list_entry(self.seed, g, v, j)
    }

    /// Consumes the next unused entry of `L_v`.
    #[inline]
    pub fn next(&mut self, g: &Graph, v: usize) -> Option<usize> {
        let j = self.consumed[v] + 1;
        let u = list_entry(self.seed, g, v, j)?;
        self.consumed[v] = j;
        Some(u)
    }

    pub fn consumed(&self, v: usize) -> u64 {
        self.consumed[v]
    }

    pub fn consumed_all(&self) -> &[u64] {
        &self.consumed
    }
}

#[inline]
fn list_entry(seed: u64, g: &Graph, v: usize, j: u64) -> Option<usize> {
    let nbrs = g.neighbors(v);
    if nbrs.is_empty() {
        return None;
    }
    let mut rng = CounterRng::new(seed, Domain::ListEntry, &[v as u64, j]);
    Some(nbrs[rng.below(nbrs.len() as u64) as usize] as usize)
}

/// `⌊α·d⌋`, guarded so that `α = X/d` recovers exactly `X`.
#[inline]
pub fn prefix_len(alpha: f64, degree: usize) -> u64 {
    if alpha <= 0.0 {
        return 0;
    }
    let x = alpha * degree as f64;
    (x * (1.0 + ROUNDING_GUARD)).floor() as u64
}

/// A realized walk `W_0 … W_l`.
///
/// `visit_counts[v]` counts departures, i.e. indices `0 ≤ i < l` with `W_i = v`,
/// so it equals the number of list entries the walk consumed at `v`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WalkTrace {
    pub start: usize,
    pub sequence: Vec<u32>,
    pub visit_counts: Vec<u64>,
}

impl WalkTrace {
    pub fn steps(&self) -> usize {
        self.sequence.len() - 1
    }

    /// Rebuilds a trace from a vertex sequence, validating adjacency.
    pub fn from_sequence(g: &Graph, sequence: Vec<u32>) -> Result<Self> {
        let Some(&first) = sequence.first() else {
            return Err(Error::InvalidParameter("empty walk sequence".into()));
        };
        let n = g.n();
        let mut visit_counts = vec![0u64; n];
        for (i, &v) in sequence.iter().enumerate() {
            if v as usize >= n {
                return Err(Error::VertexOutOfRange {
                    vertex: v as usize,
                    n,
                });
            }
            if i + 1 < sequence.len() {
                let w = sequence[i + 1] as usize;
                if !g.has_edge(v as usize, w) {
                    return Err(Error::InvalidParameter(format!(
                        "step {i}: {v} and {w} are not adjacent"
                    )));
                }
                visit_counts[v as usize] += 1;
            }
        }
        Ok(Self {
            start: first as usize,
            sequence,
            visit_counts,
        })
    }
}

/// Runs `steps` steps from `start`, taking each move from the walker's list model.
pub fn run_walk(g: &Graph, model: &mut ListModel, start: usize, steps: usize) -> Result<WalkTrace> {
    let n = g.n();
    if start >= n {
        return Err(Error::VertexOutOfRange { vertex: start, n });
    }
    if steps > 0 && g.degree(start) == 0 {
        return Err(Error::IsolatedVertex(start));
    }
    let mut sequence = Vec::with_capacity(steps + 1);
    let mut visit_counts = vec![0u64; n];
    let mut cur = start;
    sequence.push(cur as u32);
    for _ in 0..steps {
        visit_counts[cur] += 1;
        // A vertex reached by a step has degree at least one.
        cur = model
            .next(g, cur)
            .expect("walk only reaches non-isolated vertices");
        sequence.push(cur as u32);
    }
    Ok(WalkTrace {
        start,
        sequence,
        visit_counts,
    })
}

/// A set of edges of a parent graph, keyed by adjacency slot.
#[derive(Clone, Debug)]
pub struct EdgeSubgraph<'g> {
    parent: &'g Graph,
    slots: FixedBitSet,
    count: usize,
}

impl<'g> EdgeSubgraph<'g> {
    pub fn empty(parent: &'g Graph) -> Self {
        Self {
            parent,
            slots: FixedBitSet::with_capacity(parent.slot_count()),
            count: 0,
        }
    }

    pub fn full(parent: &'g Graph) -> Self {
        let mut s = Self::empty(parent);
        for (u, v) in parent.edges() {
            s.insert(u, v);
        }
        s
    }

    pub fn parent(&self) -> &'g Graph {
        self.parent
    }

    /// Adds `uv`; returns false if it was already present. Panics if `uv ∉ E(parent)`.
    pub fn insert(&mut self, u: usize, v: usize) -> bool {
        let slot = self
            .parent
            .slot(u, v)
            .unwrap_or_else(|| panic!("{u}{v} is not an edge of the parent graph"));
        self.insert_slot(slot)
    }

    #[inline]
    fn insert_slot(&mut self, slot: usize) -> bool {
        let fresh = !self.slots.put(slot);
        self.count += fresh as usize;
        fresh
    }

    pub fn contains(&self, u: usize, v: usize) -> bool {
        self.parent
            .slot(u, v)
            .is_some_and(|s| self.slots.contains(s))
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn is_subset(&self, other: &EdgeSubgraph<'_>) -> bool {
        std::ptr::eq(self.parent, other.parent) && self.slots.is_subset(&other.slots)
    }

    /// Edges of `self` missing from `other`.
    pub fn difference_count(&self, other: &EdgeSubgraph<'_>) -> usize {
        self.slots.difference(&other.slots).count()
    }

    /// Edges `(u, v)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.parent
            .edges()
            .filter(|&(u, v)| self.slots.contains(self.parent.slot(u, v).unwrap()))
    }

    /// The subgraph as a standalone graph on the parent's vertex set.
    pub fn to_graph(&self) -> Graph {
        let g = self.parent;
        let adj = (0..g.n())
            .map(|u| {
                g.neighbors(u)
                    .iter()
                    .copied()
                    .filter(|&v| self.slots.contains(g.slot(u, v as usize).unwrap()))
                    .collect()
            })
            .collect();
        Graph::from_adjacency(adj)
    }
}

/// `G_W`: the distinct edges traversed by the walk.
pub fn walk_subgraph<'g>(g: &'g Graph, trace: &WalkTrace) -> EdgeSubgraph<'g> {
    let mut sub = EdgeSubgraph::empty(g);
    for w in trace.sequence.windows(2) {
        sub.insert(w[0] as usize, w[1] as usize);
    }
    sub
}

/// `G_L(α)`: edge `uv` is kept when `u` is among the first `⌊α d(v)⌋` entries
/// of `L_v` or `v` among the first `⌊α d(u)⌋` entries of `L_u`. Entries are
/// replayed from `seed`, independently of any walk's consumption.
pub fn list_subgraph(g: &Graph, seed: u64, alpha: f64) -> Result<EdgeSubgraph<'_>> {
    if alpha.is_nan() || alpha < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "alpha must be >= 0, got {alpha}"
        )));
    }
    let slots: Vec<Vec<usize>> = (0..g.n())
        .into_par_iter()
        .map(|v| {
            let len = prefix_len(alpha, g.degree(v));
            (1..=len)
                .map(|j| {
                    let u = list_entry(seed, g, v, j).expect("positive prefix implies degree >= 1");
                    g.slot(u, v).expect("list entries are neighbors")
                })
                .collect()
        })
        .collect();
    let mut sub = EdgeSubgraph::empty(g);
    for s in slots.into_iter().flatten() {
        sub.insert_slot(s);
    }
    Ok(sub)
}

/// Whether the single edge `uv` belongs to `G_L(α)` for list seed `seed`.
pub fn edge_retained(g: &Graph, seed: u64, alpha: f64, u: usize, v: usize) -> bool {
    let named = |x: usize, y: usize| {
        (1..=prefix_len(alpha, g.degree(x))).any(|j| list_entry(seed, g, x, j) == Some(y))
    };
    named(v, u) || named(u, v)
}

/// Closed-form `Pr[uv ∈ G_L(α)]` for an edge with endpoint degrees `du`, `dv`.
pub fn edge_retention_probability(alpha: f64, du: usize, dv: usize) -> f64 {
    let miss = |d: usize| (1.0 - 1.0 / d as f64).powf(prefix_len(alpha, d) as f64);
    1.0 - miss(du) * miss(dv)
}

/// `(min_v X_v/d(v), max_v X_v/d(v))` over non-isolated vertices. With the
/// same list seed, `G_L(lo) ⊆ G_W ⊆ G_L(hi)` holds exactly.
pub fn sandwich_bounds(g: &Graph, trace: &WalkTrace) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for v in 0..g.n() {
        let d = g.degree(v);
        if d == 0 {
            continue;
        }
        let a = trace.visit_counts[v] as f64 / d as f64;
        lo = lo.min(a);
        hi = hi.max(a);
    }
    if lo.is_infinite() {
        lo = 0.0;
    }
    (lo, hi)
}

/// Visit counts of the `L` interleaved subsequences `W_i, W_{i+L}, W_{i+2L}, …`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SubsequenceCounts {
    pub period: usize,
    /// Terms per subsequence, `⌊l / L⌋`.
    pub blocks: usize,
    /// `counts[i][v]` is the number of `j < blocks` with `W_{i + jL} = v`.
    pub counts: Vec<Vec<u64>>,
}

/// Only the first `blocks · L` departures are counted; a trailing partial block
/// of fewer than `L` steps is dropped, so `Σ_i counts[i][v] ≤ X_v`.
pub fn subsequence_visit_counts(trace: &WalkTrace, period: usize) -> Result<SubsequenceCounts> {
    if period == 0 {
        return Err(Error::InvalidParameter(
            "subsequence period must be positive".into(),
        ));
    }
    let steps = trace.steps();
    if period > steps {
        return Err(Error::InvalidParameter(format!(
            "period {period} exceeds walk length {steps}"
        )));
    }
    let blocks = steps / period;
    let n = trace.visit_counts.len();
    let mut counts = vec![vec![0u64; n]; period];
    for (idx, &v) in trace.sequence[..blocks * period].iter().enumerate() {
        counts[idx % period][v as usize] += 1;
    }
    Ok(SubsequenceCounts {
        period,
        blocks,
        counts,
    })
}

/// `round((ln n)²)`, at least 1.
pub fn default_subsequence_period(n: usize) -> usize {
    let l = (n.max(2) as f64).ln();
    ((l * l).round() as usize).max(1)
}

/// A probability vector over the vertices.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.iter().any(|&p| p.is_nan() || p < 0.0) {
            return Err(Error::InvalidParameter(
                "negative or NaN probability".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "probabilities sum to {total}"
            )));
        }
        Ok(Self { probs })
    }

    pub fn point_mass(n: usize, v: usize) -> Self {
        let mut probs = vec![0.0; n];
        probs[v] = 1.0;
        Self { probs }
    }

    fn from_counts(counts: &[u64], total: u64) -> Self {
        Self {
            probs: counts.iter().map(|&c| c as f64 / total as f64).collect(),
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn mass(&self, set: &VertexSet) -> f64 {
        set.iter().map(|v| self.probs[v]).sum()
    }
}

/// `π_v = d(v) / 2e(G)`.
pub fn stationary(g: &Graph) -> Result<Distribution> {
    if g.edge_count() == 0 {
        return Err(Error::Edgeless);
    }
    let two_m = 2.0 * g.edge_count() as f64;
    Ok(Distribution {
        probs: (0..g.n()).map(|v| g.degree(v) as f64 / two_m).collect(),
    })
}

/// `½ Σ |p_v − q_v|`.
pub fn tv_distance(p: &Distribution, q: &Distribution) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::SupportMismatch(p.len(), q.len()));
    }
    let s: f64 = p
        .probs
        .iter()
        .zip(&q.probs)
        .map(|(a, b)| (a - b).abs())
        .sum();
    Ok((0.5 * s).min(1.0))
}

/// Delta-method standard error of `tv_distance(empirical, reference)` when
/// `empirical` is a frequency vector from `trials` independent samples.
pub fn tv_standard_error(empirical: &Distribution, reference: &Distribution, trials: u64) -> f64 {
    let mut first = 0.0;
    let mut second = 0.0;
    for (&p, &q) in empirical.probs.iter().zip(&reference.probs) {
        let s = if p > q {
            1.0
        } else if p < q {
            -1.0
        } else {
            0.0
        };
        first += s * p;
        second += s * s * p;
    }
    let var = (second - first * first).max(0.0) / (4.0 * trials as f64);
    var.sqrt()
}

/// Monte-Carlo law of `W_i` from `start`, over `trials` walks with list seeds
/// derived from `seed`.
pub fn empirical_step_distribution(
    g: &Graph,
    start: usize,
    step: usize,
    trials: u64,
    seed: u64,
) -> Result<Distribution> {
    let counts = endpoint_counts(g, start, step, trials, seed)?;
    Ok(Distribution::from_counts(&counts, trials))
}

fn endpoint_counts(
    g: &Graph,
    start: usize,
    step: usize,
    trials: u64,
    seed: u64,
) -> Result<Vec<u64>> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    let n = g.n();
    if start >= n {
        return Err(Error::VertexOutOfRange { vertex: start, n });
    }
    if step > 0 && g.degree(start) == 0 {
        return Err(Error::IsolatedVertex(start));
    }
    let counts = (0..trials)
        .into_par_iter()
        .fold(
            || vec![0u64; n],
            |mut acc, t| {
                let mut model = ListModel::new(trial_seed(seed, t), n);
                let mut cur = start;
                for _ in 0..step {
                    cur = model.next(g, cur).expect("non-isolated");
                }
                acc[cur] += 1;
                acc
            },
        )
        .reduce(
            || vec![0u64; n],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(counts)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HitCheck {
    pub empirical: f64,
    /// `|S|/n − 9√ε/ρ`.
    pub floor: f64,
}

/// Estimates `Pr(W_i ∈ S)` from a balanced start and the lower bound it should
/// respect when the host is ε-quasirandom.
pub fn hit_probability_check(
    g: &Graph,
    start: usize,
    set: &VertexSet,
    step: usize,
    eps: f64,
    trials: u64,
    seed: u64,
) -> Result<HitCheck> {
    if step < 2 {
        return Err(Error::InvalidParameter(format!(
            "step must be >= 2, got {step}"
        )));
    }
    let n = g.n();
    if (set.len() as f64) < eps * n as f64 * (1.0 - ROUNDING_GUARD) {
        return Err(Error::InvalidParameter(format!(
            "|S| = {} is below εn = {}",
            set.len(),
            eps * n as f64
        )));
    }
    let profile = balanced_vertices(g, eps)?;
    if start >= n {
        return Err(Error::VertexOutOfRange { vertex: start, n });
    }
    if !profile.balanced.contains(start) {
        return Err(Error::Unbalanced {
            vertex: start,
            degree: g.degree(start),
            target: profile.rho * n as f64,
            slack: eps * n as f64,
        });
    }
    let counts = endpoint_counts(g, start, step, trials, seed)?;
    let hits: u64 = set.iter().map(|v| counts[v]).sum();
    let rho = density(g)?;
    Ok(HitCheck {
        empirical: hits as f64 / trials as f64,
        floor: set.len() as f64 / n as f64 - 9.0 * eps.sqrt() / rho,
    })
}

/// Start vertex chosen for a walk and whether it is balanced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct StartChoice {
    pub vertex: usize,
    pub balanced: bool,
}

/// The explicit start if given, otherwise the lowest-id balanced vertex.
pub fn choose_start(g: &Graph, eps: f64, explicit: Option<usize>) -> Result<StartChoice> {
    let profile = balanced_vertices(g, eps)?;
    match explicit {
        Some(v) if v >= g.n() => Err(Error::VertexOutOfRange {
            vertex: v,
            n: g.n(),
        }),
        Some(v) => Ok(StartChoice {
            vertex: v,
            balanced: profile.balanced.contains(v),
        }),
        None => profile
            .first_balanced()
            .map(|v| StartChoice {
                vertex: v,
                balanced: true,
            })
            .ok_or_else(|| Error::InvalidParameter(format!("no balanced vertex at eps = {eps}"))),
    }
}
