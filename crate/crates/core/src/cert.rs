//! Certifying or refuting quasirandomness.
//!
//! Discrepancy is the largest normalized deviation
//! `|e(A,B) − ρ|A||B|| / (|A||B|)` over pairs with `|A|, |B| ≥ εn`. It is
//! computed exactly for tiny graphs and estimated from below by sampling
//! otherwise. The spectral side bounds `λ = max(|λ₂|, |λₙ|)` of the walk matrix
//! through the trace of `P⁴` and estimates it by power iteration.

use std::cmp::Ordering;

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{density, Graph, VertexSet, ROUNDING_GUARD};
use crate::rng::{CounterRng, Domain};

/// Largest `n` accepted by [`discrepancy_exhaustive`].
pub const EXHAUSTIVE_LIMIT: usize = 16;

/// Largest `n` for which the sampled estimator may fall back to full enumeration.
const ENUMERATION_LIMIT: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exhaustive,
    Sampled,
}

/// A normalized deviation kept as an exact fraction so maxima are compared
/// without rounding.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Deviation {
    num: u128,
    den: u128,
}

impl Deviation {
    const ZERO: Self = Self { num: 0, den: 1 };

    /// `|e·P − m·a·b| / (P·a·b)` with `P = C(n,2)`, `m = e(G)`; equals
    /// `|e − ρab| / (ab)`.
    fn new(e: u64, a: usize, b: usize, pairs: u64, m: u64) -> Self {
        let ab = a as u128 * b as u128;
        let lhs = e as u128 * pairs as u128;
        let rhs = m as u128 * ab;
        Self {
            num: lhs.abs_diff(rhs),
            den: pairs as u128 * ab,
        }
    }

    fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl PartialOrd for Deviation {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Deviation {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Discrepancy {
    pub value: f64,
    pub witness: (VertexSet, VertexSet),
    pub method: Method,
    /// Set pairs whose deviation was evaluated (or, for the exhaustive
    /// method, covered by the maximization).
    pub pairs_checked: u64,
}

/// Density and integer constants shared by the discrepancy routines.
struct Setup {
    n: usize,
    min_size: usize,
    pairs: u64,
    m: u64,
}

impl Setup {
    fn new(g: &Graph, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "eps must lie in (0, 1], got {eps}"
            )));
        }
        density(g)?;
        let n = g.n();
        let en = eps * n as f64;
        if en < 1.0 - ROUNDING_GUARD {
            return Err(Error::InvalidParameter(format!("eps·n = {en} is below 1")));
        }
        let min_size = ((en - ROUNDING_GUARD * en).ceil() as usize).clamp(1, n);
        Ok(Self {
            n,
            min_size,
            pairs: (n as u64) * (n as u64 - 1) / 2,
            m: g.edge_count(),
        })
    }

    fn deviation(&self, e: u64, a: usize, b: usize) -> Deviation {
        Deviation::new(e, a, b, self.pairs, self.m)
    }
}

fn adjacency_masks(g: &Graph) -> Vec<u32> {
    (0..g.n())
        .map(|u| g.neighbors(u).iter().fold(0u32, |m, &v| m | 1 << v))
        .collect()
}

fn binomial(n: usize, k: usize) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i as u64 + 1))
}

fn qualifying_sets(s: &Setup) -> u64 {
    (s.min_size..=s.n).map(|k| binomial(s.n, k)).sum()
}

/// Exact discrepancy over all pairs `|A|, |B| ≥ ⌈εn⌉`, for `n ≤ 16`.
///
/// For a fixed `B` and `|A| = k`, `e(A,B) = Σ_{a∈A} |N(a) ∩ B|` is extremal when
/// `A` takes the `k` largest or `k` smallest counts, so each `B` needs one sort
/// instead of an enumeration of `A`.
pub fn discrepancy_exhaustive(g: &Graph, eps: f64) -> Result<Discrepancy> {
    let n = g.n();
    if n > EXHAUSTIVE_LIMIT {
        return Err(Error::TooLargeForExhaustive {
            n,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let s = Setup::new(g, eps)?;
    let adj = adjacency_masks(g);

    let best = (0u32..(1u32 << n))
        .into_par_iter()
        .filter(|b| b.count_ones() as usize >= s.min_size)
        .map(|b| {
            let bsize = b.count_ones() as usize;
            let mut order: Vec<(u32, usize)> =
                (0..n).map(|a| ((adj[a] & b).count_ones(), a)).collect();
            order.sort_unstable();
            let mut best = (Deviation::ZERO, 0u32);
            for k in s.min_size..=n {
                let low: u64 = order[..k].iter().map(|&(c, _)| c as u64).sum();
                let high: u64 = order[n - k..].iter().map(|&(c, _)| c as u64).sum();
                for (e, members) in [(low, &order[..k]), (high, &order[n - k..])] {
                    let d = s.deviation(e, k, bsize);
                    if d > best.0 {
                        let a = members.iter().fold(0u32, |m, &(_, v)| m | 1 << v);
                        best = (d, a);
                    }
                }
            }
            (best.0, best.1, b)
        })
        .reduce(
            || (Deviation::ZERO, 0, 0),
            |x, y| match x.0.cmp(&y.0) {
                Ordering::Greater => x,
                Ordering::Less => y,
                Ordering::Equal => {
                    if (x.2, x.1) <= (y.2, y.1) {
                        x
                    } else {
                        y
                    }
                }
            },
        );

    let q = qualifying_sets(&s);
    let (dev, a, b) = best;
    let (a, b) = if dev == Deviation::ZERO {
        let full = (1u64 << n) - 1;
        (full, full)
    } else {
        (a as u64, b as u64)
    };
    Ok(Discrepancy {
        value: dev.value(),
        witness: (VertexSet::from_mask(n, a), VertexSet::from_mask(n, b)),
        method: Method::Exhaustive,
        pairs_checked: q * q,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SampleOptions {
    pub trials: u64,
    pub seed: u64,
    /// Alternating best-response passes applied to each sampled pair: holding
    /// one side fixed, the other is replaced by the extremal set of the same
    /// size. Zero gives the plain uniform estimator.
    pub refine_rounds: u32,
}

impl SampleOptions {
    pub fn new(trials: u64, seed: u64) -> Self {
        Self {
            trials,
            seed,
            refine_rounds: 0,
        }
    }

    pub fn with_refinement(mut self, rounds: u32) -> Self {
        self.refine_rounds = rounds;
        self
    }
}

/// Dense adjacency bit matrix used for fast `e(A, B)` evaluation.
struct BitRows {
    words: usize,
    data: Vec<u64>,
}

impl BitRows {
    fn new(g: &Graph) -> Self {
        let words = g.n().div_ceil(64);
        let mut data = vec![0u64; words * g.n()];
        for u in 0..g.n() {
            let row = &mut data[u * words..(u + 1) * words];
            for &v in g.neighbors(u) {
                row[v as usize / 64] |= 1 << (v % 64);
            }
        }
        Self { words, data }
    }

    fn set_words(&self, members: &[usize]) -> Vec<u64> {
        let mut w = vec![0u64; self.words];
        for &v in members {
            w[v / 64] |= 1 << (v % 64);
        }
        w
    }

    #[inline]
    fn count_into(&self, u: usize, set: &[u64]) -> u64 {
        self.data[u * self.words..(u + 1) * self.words]
            .iter()
            .zip(set)
            .map(|(r, s)| (r & s).count_ones() as u64)
            .sum()
    }

    fn edges_between(&self, a: &[usize], b: &[usize]) -> u64 {
        let bw = self.set_words(b);
        a.iter().map(|&u| self.count_into(u, &bw)).sum()
    }

    /// The size-`k` set maximizing the deviation against the fixed set `other`.
    fn best_response(&self, s: &Setup, other: &[usize], k: usize) -> (Deviation, Vec<usize>) {
        let ow = self.set_words(other);
        let mut order: Vec<(u64, usize)> = (0..s.n).map(|u| (self.count_into(u, &ow), u)).collect();
        order.sort_unstable();
        let low: u64 = order[..k].iter().map(|x| x.0).sum();
        let high: u64 = order[s.n - k..].iter().map(|x| x.0).sum();
        let dl = s.deviation(low, k, other.len());
        let dh = s.deviation(high, k, other.len());
        let pick = if dh > dl {
            &order[s.n - k..]
        } else {
            &order[..k]
        };
        let mut set: Vec<usize> = pick.iter().map(|x| x.1).collect();
        set.sort_unstable();
        (dl.max(dh), set)
    }
}

struct Candidate {
    dev: Deviation,
    index: u64,
    a: Vec<usize>,
    b: Vec<usize>,
}

fn better(x: Candidate, y: Candidate) -> Candidate {
    match x.dev.cmp(&y.dev) {
        Ordering::Greater => x,
        Ordering::Less => y,
        Ordering::Equal if x.index <= y.index => x,
        Ordering::Equal => y,
    }
}

/// Lower-bound estimate of the discrepancy from `trials` random pairs.
///
/// Each trial draws `|A|` and `|B|` uniformly from `[⌈εn⌉, n]` and uniform
/// subsets of those sizes. When the trial budget covers every qualifying pair
/// of a graph with at most 20 vertices, all pairs are enumerated instead, so
/// the result is exact.
pub fn discrepancy_sampled(g: &Graph, eps: f64, opts: SampleOptions) -> Result<Discrepancy> {
    if opts.trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    let s = Setup::new(g, eps)?;
    if s.n <= ENUMERATION_LIMIT {
        let q = qualifying_sets(&s);
        if opts.trials >= q * q {
            return Ok(enumerate_all_pairs(g, &s, q));
        }
    }
    let rows = BitRows::new(g);
    let span = (s.n - s.min_size + 1) as u64;
    let best = (0..opts.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = CounterRng::new(opts.seed, Domain::Subset, &[t]);
            let asize = s.min_size + rng.below(span) as usize;
            let bsize = s.min_size + rng.below(span) as usize;
            let mut a = sample(&mut rng, s.n, asize).into_vec();
            let mut b = sample(&mut rng, s.n, bsize).into_vec();
            a.sort_unstable();
            b.sort_unstable();
            let mut dev = s.deviation(rows.edges_between(&a, &b), asize, bsize);
            let mut best = Candidate {
                dev,
                index: t,
                a: a.clone(),
                b: b.clone(),
            };
            for _ in 0..opts.refine_rounds {
                let (_, na) = rows.best_response(&s, &b, asize);
                let (d, nb) = rows.best_response(&s, &na, bsize);
                if d <= dev {
                    break;
                }
                (a, b, dev) = (na, nb, d);
                best = Candidate {
                    dev,
                    index: t,
                    a: a.clone(),
                    b: b.clone(),
                };
            }
            best
        })
        .reduce(
            || Candidate {
                dev: Deviation::ZERO,
                index: u64::MAX,
                a: Vec::new(),
                b: Vec::new(),
            },
            better,
        );
    let n = s.n;
    Ok(Discrepancy {
        value: best.dev.value(),
        witness: (
            VertexSet::from_ids(n, best.a).expect("sampled ids < n"),
            VertexSet::from_ids(n, best.b).expect("sampled ids < n"),
        ),
        method: Method::Sampled,
        pairs_checked: opts.trials,
    })
}

/// Evaluates every qualifying pair directly (no extremal-set shortcut).
fn enumerate_all_pairs(g: &Graph, s: &Setup, q: u64) -> Discrepancy {
    let n = s.n;
    let adj = adjacency_masks(g);
    let sets: Vec<u32> = (0u32..(1 << n))
        .filter(|m| m.count_ones() as usize >= s.min_size)
        .collect();
    let (dev, a, b) = sets
        .par_iter()
        .map(|&a| {
            let members: Vec<usize> = (0..n).filter(|&v| a >> v & 1 == 1).collect();
            let mut best = (Deviation::ZERO, a, a);
            for &b in &sets {
                let e: u64 = members
                    .iter()
                    .map(|&u| (adj[u] & b).count_ones() as u64)
                    .sum();
                let d = s.deviation(e, members.len(), b.count_ones() as usize);
                if d > best.0 {
                    best = (d, a, b);
                }
            }
            best
        })
        .reduce(
            || (Deviation::ZERO, u32::MAX, u32::MAX),
            |x, y| match x.0.cmp(&y.0) {
                Ordering::Greater => x,
                Ordering::Less => y,
                Ordering::Equal if (x.1, x.2) <= (y.1, y.2) => x,
                Ordering::Equal => y,
            },
        );
    Discrepancy {
        value: dev.value(),
        witness: (
            VertexSet::from_mask(n, a as u64),
            VertexSet::from_mask(n, b as u64),
        ),
        method: Method::Sampled,
        pairs_checked: q * q,
    }
}

/// `|e(A,B) − ρ|A||B|| / (|A||B|)` for one pair.
pub fn pair_deviation(g: &Graph, a: &VertexSet, b: &VertexSet) -> Result<f64> {
    let rho = density(g)?;
    let (sa, sb) = (a.len() as f64, b.len() as f64);
    if sa == 0.0 || sb == 0.0 {
        return Err(Error::InvalidParameter("empty set".into()));
    }
    let e = crate::graph::edges_between(g, a, b) as f64;
    Ok((e - rho * sa * sb).abs() / (sa * sb))
}

/// Labelled 4-cycles: `2 Σ_u Σ_{v≠u} C(|N(u) ∩ N(v)|, 2)`.
pub fn count_c4_labelled(g: &Graph) -> u64 {
    let n = g.n();
    let per_vertex: Vec<u64> = (0..n)
        .into_par_iter()
        .map_init(
            || vec![0u64; n],
            |common, u| {
                let mut touched = Vec::new();
                for &w in g.neighbors(u) {
                    for &v in g.neighbors(w as usize) {
                        let v = v as usize;
                        if v != u {
                            if common[v] == 0 {
                                touched.push(v);
                            }
                            common[v] += 1;
                        }
                    }
                }
                let mut total = 0u64;
                for v in touched {
                    let c = common[v];
                    total += c * c.saturating_sub(1) / 2;
                    common[v] = 0;
                }
                total
            },
        )
        .collect();
    2 * per_vertex.iter().sum::<u64>()
}

fn require_no_isolated(g: &Graph) -> Result<()> {
    match (0..g.n()).find(|&v| g.degree(v) == 0) {
        Some(v) => Err(Error::IsolatedVertex(v)),
        None => Ok(()),
    }
}

/// `tr(P⁴) = Σ_{u,v} (P²)_{uv} (P²)_{vu}` with
/// `(P²)_{uv} = Σ_{w ∈ N(u)∩N(v)} 1/(d(u)d(w))`.
///
/// Reversibility gives `(P²)_{vu} = (d(u)/d(v)) (P²)_{uv}`, so each row of `P²`
/// is accumulated once by wedge enumeration.
pub fn trace_p4(g: &Graph) -> Result<f64> {
    require_no_isolated(g)?;
    let n = g.n();
    let per_vertex: Vec<f64> = (0..n)
        .into_par_iter()
        .map_init(
            || (vec![0f64; n], Vec::new()),
            |(row, touched), u| {
                let du = g.degree(u) as f64;
                for &w in g.neighbors(u) {
                    let weight = 1.0 / (du * g.degree(w as usize) as f64);
                    for &v in g.neighbors(w as usize) {
                        let v = v as usize;
                        if row[v] == 0.0 {
                            touched.push(v);
                        }
                        row[v] += weight;
                    }
                }
                let mut total = 0.0;
                for &v in touched.iter() {
                    total += row[v] * row[v] * du / g.degree(v) as f64;
                    row[v] = 0.0;
                }
                touched.clear();
                total
            },
        )
        .collect();
    Ok(per_vertex.iter().sum())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LambdaBound {
    /// `(max(tr P⁴ − 1, 0))^{1/4}` when certified, otherwise 1.
    pub lambda_bound: f64,
    pub trace_p4: Option<f64>,
    pub connected: bool,
    pub bipartite: bool,
}

impl LambdaBound {
    pub fn certified(&self) -> bool {
        self.connected && !self.bipartite
    }
}

/// Since `λ⁴ ≤ Σ_{i≥2} λ_i⁴ = tr(P⁴) − 1`, the fourth root bounds `λ` from
/// above. Disconnected or bipartite graphs have `λ = 1` and get no bound.
pub fn lambda_bound_from_trace(g: &Graph) -> LambdaBound {
    let (connected, bipartite) = g.connectivity();
    let trace = trace_p4(g).ok();
    let lambda_bound = match trace {
        Some(t) if connected && !bipartite => (t - 1.0).max(0.0).powf(0.25).min(1.0),
        _ => 1.0,
    };
    LambdaBound {
        lambda_bound,
        trace_p4: trace,
        connected,
        bipartite,
    }
}

/// `y = D^{-1/2} A D^{-1/2} x`.
fn apply_normalized(g: &Graph, inv_sqrt_deg: &[f64], x: &[f64], y: &mut [f64]) {
    y.par_iter_mut().enumerate().for_each(|(u, yu)| {
        let s: f64 = g
            .neighbors(u)
            .iter()
            .map(|&v| inv_sqrt_deg[v as usize] * x[v as usize])
            .sum();
        *yu = inv_sqrt_deg[u] * s;
    });
}

fn project_out(x: &mut [f64], unit: &[f64]) {
    let c: f64 = x.iter().zip(unit).map(|(a, b)| a * b).sum();
    x.iter_mut().zip(unit).for_each(|(a, b)| *a -= c * b);
}

fn normalize(x: &mut [f64]) -> f64 {
    let norm = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm > 0.0 {
        x.iter_mut().for_each(|a| *a /= norm);
    }
    norm
}

/// Power iteration for `λ` on the square of `D^{-1/2} A D^{-1/2}` restricted to
/// the complement of its top eigenvector `∝ √d`. Iterating the square makes
/// `±λ` converge together. Stops once the residual guarantees the returned
/// value is within about `tol` of an eigenvalue modulus.
pub fn lambda_estimate(g: &Graph, tol: f64, max_iter: usize) -> Result<f64> {
    let (connected, bipartite) = g.connectivity();
    if !connected {
        return Err(Error::Disconnected);
    }
    if bipartite {
        return Err(Error::Bipartite);
    }
    require_no_isolated(g)?;
    let n = g.n();
    let inv_sqrt_deg: Vec<f64> = (0..n).map(|v| 1.0 / (g.degree(v) as f64).sqrt()).collect();
    let mut top: Vec<f64> = (0..n).map(|v| (g.degree(v) as f64).sqrt()).collect();
    normalize(&mut top);

    let mut rng = CounterRng::new(0x5eed, Domain::Subset, &[n as u64]);
    let mut x: Vec<f64> = (0..n).map(|_| rng.unit() - 0.5).collect();
    project_out(&mut x, &top);
    if normalize(&mut x) == 0.0 {
        return Ok(0.0);
    }
    let mut mid = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut mu = 0.0;
    for _ in 0..max_iter {
        apply_normalized(g, &inv_sqrt_deg, &x, &mut mid);
        apply_normalized(g, &inv_sqrt_deg, &mid, &mut y);
        project_out(&mut y, &top);
        mu = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>().max(0.0);
        let residual = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (b - mu * a).powi(2))
            .sum::<f64>()
            .sqrt();
        // |μ − θ²| ≤ r for some eigenvalue θ; |√μ − θ| ≤ r/√μ.
        if residual <= tol * mu.sqrt().max(tol) {
            return Ok(mu.sqrt());
        }
        std::mem::swap(&mut x, &mut y);
        if normalize(&mut x) == 0.0 {
            return Ok(0.0);
        }
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        last: mu.sqrt(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuasirandomnessReport {
    pub rho: f64,
    pub eps_target: f64,
    pub discrepancy: f64,
    pub method: Method,
    pub pairs_checked: u64,
    pub c4_labelled: u64,
    pub trace_p4: Option<f64>,
    pub lambda_bound: f64,
    pub lambda_estimate: Option<f64>,
    pub connected: bool,
    pub bipartite: bool,
}

impl QuasirandomnessReport {
    /// Whether the measured discrepancy stays below the target.
    pub fn within_target(&self) -> bool {
        self.discrepancy < self.eps_target
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CertifyOptions {
    pub eps: f64,
    pub exhaustive: bool,
    pub sample: SampleOptions,
    pub lambda_tol: f64,
    pub lambda_max_iter: usize,
}

impl CertifyOptions {
    pub fn new(eps: f64, trials: u64, seed: u64) -> Self {
        Self {
            eps,
            exhaustive: false,
            sample: SampleOptions::new(trials, seed),
            lambda_tol: 1e-8,
            lambda_max_iter: 10_000,
        }
    }
}

pub fn certify(g: &Graph, opts: &CertifyOptions) -> Result<QuasirandomnessReport> {
    let rho = density(g)?;
    let disc = if opts.exhaustive {
        discrepancy_exhaustive(g, opts.eps)?
    } else {
        discrepancy_sampled(g, opts.eps, opts.sample)?
    };
    let bound = lambda_bound_from_trace(g);
    let lambda_estimate = if bound.certified() {
        lambda_estimate(g, opts.lambda_tol, opts.lambda_max_iter).ok()
    } else {
        None
    };
    Ok(QuasirandomnessReport {
        rho,
        eps_target: opts.eps,
        discrepancy: disc.value,
        method: disc.method,
        pairs_checked: disc.pairs_checked,
        c4_labelled: count_c4_labelled(g),
        trace_p4: bound.trace_p4,
        lambda_bound: bound.lambda_bound,
        lambda_estimate,
        connected: bound.connected,
        bipartite: bound.bipartite,
    })
}
