//! Immutable simple graphs in compressed adjacency form, vertex sets, degree
//! profiles and the generators used by the experiments.

use std::collections::VecDeque;

use fixedbitset::FixedBitSet;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::{keyed_coin, Domain};

/// Relative slack applied where a float threshold is compared to an exact count.
pub(crate) const ROUNDING_GUARD: f64 = 1e-9;

/// Undirected simple graph on vertices `0..n`.
///
/// Neighbor lists are sorted and stored contiguously; `offsets[v]..offsets[v + 1]`
/// indexes the neighbors of `v`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    edge_count: u64,
}

impl Graph {
    /// Builds a graph from unordered vertex pairs. Duplicate pairs collapse.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (u, v) in edges {
            for x in [u, v] {
                if x >= n {
                    return Err(Error::VertexOutOfRange { vertex: x, n });
                }
            }
            if u == v {
                return Err(Error::SelfLoop(u));
            }
            adj[u].push(v as u32);
            adj[v].push(u as u32);
        }
        Ok(Self::from_adjacency(adj))
    }

    /// Takes per-vertex neighbor lists that are already symmetric and loop-free;
    /// sorts and deduplicates them.
    pub(crate) fn from_adjacency(mut adj: Vec<Vec<u32>>) -> Self {
        let mut offsets = Vec::with_capacity(adj.len() + 1);
        offsets.push(0);
        let mut total = 0usize;
        for list in adj.iter_mut() {
            list.sort_unstable();
            list.dedup();
            total += list.len();
            offsets.push(total);
        }
        let mut neighbors = Vec::with_capacity(total);
        for list in adj {
            neighbors.extend_from_slice(&list);
        }
        Self {
            offsets,
            neighbors,
            edge_count: (total / 2) as u64,
        }
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> u64 {
        self.edge_count
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n()).map(|v| self.degree(v)).collect()
    }

    pub fn min_degree(&self) -> usize {
        (0..self.n()).map(|v| self.degree(v)).min().unwrap_or(0)
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n()).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.slot(u, v).is_some()
    }

    /// Position of the edge `uv` in the adjacency array, taken from the list of
    /// the smaller endpoint. Distinct edges get distinct slots below `2 e(G)`.
    #[inline]
    pub fn slot(&self, u: usize, v: usize) -> Option<usize> {
        let (a, b) = if u < v { (u, v) } else { (v, u) };
        self.neighbors(a)
            .binary_search(&(b as u32))
            .ok()
            .map(|i| self.offsets[a] + i)
    }

    /// Number of adjacency slots, i.e. `2 e(G)`.
    pub fn slot_count(&self) -> usize {
        self.neighbors.len()
    }

    /// Edges `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .map(|&v| v as usize)
                .filter(move |&v| v > u)
                .map(move |v| (u, v))
        })
    }

    /// Size of `N(u) ∩ N(v)` by merging the sorted lists.
    pub fn common_neighbors(&self, u: usize, v: usize) -> usize {
        let (a, b) = (self.neighbors(u), self.neighbors(v));
        let (mut i, mut j, mut c) = (0, 0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    c += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        c
    }

    /// BFS 2-coloring over every component; returns `(connected, bipartite)`.
    pub fn connectivity(&self) -> (bool, bool) {
        let n = self.n();
        let mut color = vec![u8::MAX; n];
        let mut components = 0;
        let mut bipartite = true;
        let mut queue = VecDeque::new();
        for s in 0..n {
            if color[s] != u8::MAX {
                continue;
            }
            components += 1;
            color[s] = 0;
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                for &w in self.neighbors(u) {
                    let w = w as usize;
                    if color[w] == u8::MAX {
                        color[w] = color[u] ^ 1;
                        queue.push_back(w);
                    } else if color[w] == color[u] {
                        bipartite = false;
                    }
                }
            }
        }
        (components <= 1, bipartite)
    }

    pub fn is_connected(&self) -> bool {
        self.connectivity().0
    }
}

/// A subset of `{0, …, n−1}` with bitset membership.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexSet {
    bits: FixedBitSet,
}

impl VertexSet {
    pub fn empty(n: usize) -> Self {
        Self {
            bits: FixedBitSet::with_capacity(n),
        }
    }

    pub fn full(n: usize) -> Self {
        let mut bits = FixedBitSet::with_capacity(n);
        bits.insert_range(..);
        Self { bits }
    }

    pub fn from_ids<I: IntoIterator<Item = usize>>(n: usize, ids: I) -> Result<Self> {
        let mut s = Self::empty(n);
        for v in ids {
            if v >= n {
                return Err(Error::VertexOutOfRange { vertex: v, n });
            }
            s.bits.insert(v);
        }
        Ok(s)
    }

    /// Members are the set bits of `mask` (for universes of at most 64 vertices).
    pub fn from_mask(n: usize, mask: u64) -> Self {
        let mut s = Self::empty(n);
        for v in 0..n.min(64) {
            if mask >> v & 1 == 1 {
                s.bits.insert(v);
            }
        }
        s
    }

    pub fn universe(&self) -> usize {
        self.bits.len()
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_clear()
    }

    #[inline]
    pub fn contains(&self, v: usize) -> bool {
        self.bits.contains(v)
    }

    pub fn insert(&mut self, v: usize) {
        self.bits.insert(v);
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.ones()
    }

    pub fn complement(&self) -> Self {
        let mut bits = self.bits.clone();
        bits.toggle_range(..);
        Self { bits }
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.bits.is_subset(&other.bits)
    }
}

/// `e_G(A, B)`: ordered pairs `(a, b) ∈ A × B` with `ab ∈ E(G)`. An edge with
/// both ends in `A ∩ B` is counted twice.
pub fn edges_between(g: &Graph, a: &VertexSet, b: &VertexSet) -> u64 {
    a.iter()
        .map(|u| {
            g.neighbors(u)
                .iter()
                .filter(|&&w| b.contains(w as usize))
                .count() as u64
        })
        .sum()
}

fn pairs(n: usize) -> u64 {
    (n as u64) * (n as u64).saturating_sub(1) / 2
}

/// `e(G) / C(n, 2)`.
pub fn density(g: &Graph) -> Result<f64> {
    if g.n() < 2 {
        return Err(Error::TooFewVertices {
            needed: 2,
            got: g.n(),
        });
    }
    Ok(g.edge_count() as f64 / pairs(g.n()) as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DegreeProfile {
    pub rho: f64,
    pub epsilon: f64,
    #[serde(serialize_with = "serialize_set")]
    pub balanced: VertexSet,
}

fn serialize_set<S: serde::Serializer>(
    set: &VertexSet,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(set.iter())
}

impl DegreeProfile {
    pub fn unbalanced_count(&self) -> usize {
        self.balanced.universe() - self.balanced.len()
    }

    /// Lowest-id balanced vertex, if any.
    pub fn first_balanced(&self) -> Option<usize> {
        self.balanced.iter().next()
    }
}

/// Vertices with `|d(v) − ρn| ≤ εn`.
pub fn balanced_vertices(g: &Graph, eps: f64) -> Result<DegreeProfile> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "eps must lie in (0, 1), got {eps}"
        )));
    }
    let rho = density(g)?;
    let n = g.n();
    // |d − ρn| ≤ εn  ⇔  |d(n−1) − 2m| ≤ εn(n−1); left side is an exact integer.
    let slack = eps * n as f64 * (n - 1) as f64 * (1.0 + ROUNDING_GUARD);
    let two_m = 2 * g.edge_count() as i64;
    let mut balanced = VertexSet::empty(n);
    for v in 0..n {
        let lhs = (g.degree(v) as i64 * (n as i64 - 1) - two_m).unsigned_abs() as f64;
        if lhs <= slack {
            balanced.insert(v);
        }
    }
    Ok(DegreeProfile {
        rho,
        epsilon: eps,
        balanced,
    })
}

/// `G(n, p)`: each pair `u < v` is kept by an independent coin keyed on `(seed, u, v)`.
pub fn gen_gnp(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "p must lie in [0, 1], got {p}"
        )));
    }
    let upper: Vec<Vec<u32>> = (0..n)
        .into_par_iter()
        .map(|u| {
            ((u + 1)..n)
                .filter(|&v| keyed_coin(seed, Domain::PairCoin, &[u as u64, v as u64], p))
                .map(|v| v as u32)
                .collect()
        })
        .collect();
    let mut adj: Vec<Vec<u32>> = upper.clone();
    for (u, list) in upper.iter().enumerate() {
        for &v in list {
            adj[v as usize].push(u as u32);
        }
    }
    Ok(Graph::from_adjacency(adj))
}

pub fn gen_complete(n: usize) -> Graph {
    let adj = (0..n)
        .map(|u| (0..n as u32).filter(|&v| v as usize != u).collect())
        .collect();
    Graph::from_adjacency(adj)
}

pub fn gen_empty(n: usize) -> Graph {
    Graph::from_adjacency(vec![Vec::new(); n])
}

pub fn gen_cycle(n: usize) -> Result<Graph> {
    if n < 3 {
        return Err(Error::TooFewVertices { needed: 3, got: n });
    }
    Graph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n)))
}

pub fn gen_path(n: usize) -> Result<Graph> {
    Graph::from_edges(n, (1..n).map(|i| (i - 1, i)))
}

/// `K_{1,leaves}` with center 0.
pub fn gen_star(leaves: usize) -> Graph {
    Graph::from_edges(leaves + 1, (1..=leaves).map(|i| (0, i))).expect("star edges are valid")
}

/// `K_{a,b}` with parts `0..a` and `a..a+b`.
pub fn gen_complete_bipartite(a: usize, b: usize) -> Graph {
    let edges = (0..a).flat_map(|u| (a..a + b).map(move |v| (u, v)));
    Graph::from_edges(a + b, edges).expect("bipartite edges are valid")
}

/// Size of the small clique in [`gen_two_clique_bridge`]: `⌈ε²n/2⌉`.
pub fn small_clique_size(n: usize, eps: f64) -> usize {
    let x = eps * eps * n as f64 / 2.0;
    (x - ROUNDING_GUARD * x.max(1.0)).ceil().max(0.0) as usize
}

/// A clique on `0..s` and a clique on `s..n`, joined by the single edge `{0, s}`,
/// where `s = ⌈ε²n/2⌉`.
pub fn gen_two_clique_bridge(n: usize, eps: f64) -> Result<Graph> {
    let s = small_clique_size(n, eps);
    if s < 2 {
        return Err(Error::InvalidParameter(format!(
            "small clique size ⌈ε²n/2⌉ = {s} must be at least 2"
        )));
    }
    if n < s + 2 {
        return Err(Error::InvalidParameter(format!(
            "large clique would have {} vertices",
            n.saturating_sub(s)
        )));
    }
    let mut adj: Vec<Vec<u32>> = (0..n)
        .map(|u| {
            let range = if u < s { 0..s } else { s..n };
            range.filter(|&v| v != u).map(|v| v as u32).collect()
        })
        .collect();
    adj[0].push(s as u32);
    adj[s].push(0);
    Ok(Graph::from_adjacency(adj))
}
