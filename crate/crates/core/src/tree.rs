//! Rooted trees, random homomorphisms into a host graph, and the decomposition
//! of a tree into edge-disjoint rooted pieces with between `L` and `3L` edges.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::{CounterRng, Domain};
use crate::walk::{EdgeSubgraph, ListModel};

/// A rooted tree on `v_0 … v_k` whose enumeration is prefix-connected: every
/// `v_j` (`j ≥ 1`) has its parent among `v_0 … v_{j−1}`. Vertex `0` is the root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootedTree {
    parent: Vec<u32>,
    depth: Vec<u32>,
}

impl RootedTree {
    /// `parents[j]` for `j ≥ 1`; `parents[0]` is ignored (the root has no parent).
    pub fn from_parents(parents: &[usize]) -> Result<Self> {
        if parents.is_empty() {
            return Err(Error::InvalidParameter(
                "a tree needs at least one vertex".into(),
            ));
        }
        let mut parent = Vec::with_capacity(parents.len());
        let mut depth = Vec::with_capacity(parents.len());
        parent.push(0);
        depth.push(0);
        for (j, &p) in parents.iter().enumerate().skip(1) {
            if p >= j {
                return Err(Error::ForwardParent {
                    child: j,
                    parent: p,
                });
            }
            parent.push(p as u32);
            depth.push(depth[p] + 1);
        }
        Ok(Self { parent, depth })
    }

    /// Number of vertices `k + 1`.
    pub fn size(&self) -> usize {
        self.parent.len()
    }

    pub fn edge_count(&self) -> usize {
        self.parent.len() - 1
    }

    /// Parent of `v_j`, `None` for the root.
    pub fn parent(&self, j: usize) -> Option<usize> {
        (j > 0).then(|| self.parent[j] as usize)
    }

    pub fn depth(&self, j: usize) -> usize {
        self.depth[j] as usize
    }

    /// Children lists in ascending index order.
    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut ch = vec![Vec::new(); self.size()];
        for j in 1..self.size() {
            ch[self.parent[j] as usize].push(j);
        }
        ch
    }

    /// Graph degree of each vertex (children plus the parent edge).
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.size()];
        for j in 1..self.size() {
            deg[j] += 1;
            deg[self.parent[j] as usize] += 1;
        }
        deg
    }

    pub fn max_degree(&self) -> usize {
        self.degrees().into_iter().max().unwrap_or(0)
    }

    /// Parent array with the root's entry set to 0.
    pub fn parents(&self) -> Vec<usize> {
        self.parent.iter().map(|&p| p as usize).collect()
    }
}

/// A path with `edges` edges, rooted at one end.
pub fn gen_path_tree(edges: usize) -> RootedTree {
    let parents: Vec<usize> = (0..=edges).map(|j| j.saturating_sub(1)).collect();
    RootedTree::from_parents(&parents).expect("path parents precede children")
}

/// Complete `branching`-ary tree of the given depth, in breadth-first order.
pub fn gen_nary_tree(branching: usize, depth: usize) -> RootedTree {
    let mut parents = vec![0usize];
    let mut level_start = 0;
    let mut level_len = 1;
    for _ in 0..depth {
        if branching == 0 {
            break;
        }
        let next_start = parents.len();
        for p in level_start..level_start + level_len {
            parents.extend(std::iter::repeat_n(p, branching));
        }
        level_start = next_start;
        level_len *= branching;
    }
    RootedTree::from_parents(&parents).expect("breadth-first parents precede children")
}

/// Random tree on `vertices` vertices: vertex `j` attaches to a uniformly chosen
/// earlier vertex whose graph degree is still below `max_degree`.
pub fn gen_random_tree(vertices: usize, max_degree: usize, seed: u64) -> Result<RootedTree> {
    if max_degree < 2 {
        return Err(Error::InvalidParameter(format!(
            "max degree must be at least 2, got {max_degree}"
        )));
    }
    if vertices == 0 {
        return Err(Error::InvalidParameter(
            "a tree needs at least one vertex".into(),
        ));
    }
    let mut rng = CounterRng::new(seed, Domain::Tree, &[vertices as u64, max_degree as u64]);
    let mut degree = vec![0usize; vertices];
    let mut open: Vec<usize> = vec![0];
    let mut parents = vec![0usize; vertices];
    for j in 1..vertices {
        let pick = rng.below(open.len() as u64) as usize;
        let p = open[pick];
        parents[j] = p;
        degree[p] += 1;
        degree[j] = 1;
        if degree[p] >= max_degree {
            open.swap_remove(pick);
        }
        open.push(j);
    }
    RootedTree::from_parents(&parents)
}

/// An edge-preserving map `φ: V(T) → V(G)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TreeHomomorphism {
    pub image: Vec<u32>,
}

impl TreeHomomorphism {
    pub fn root_image(&self) -> usize {
        self.image[0] as usize
    }

    /// Checks that every tree edge maps onto a host edge.
    pub fn is_valid(&self, g: &Graph, t: &RootedTree) -> bool {
        self.image.len() == t.size()
            && (1..t.size()).all(|j| {
                g.has_edge(
                    self.image[j] as usize,
                    self.image[t.parent[j] as usize] as usize,
                )
            })
    }
}

/// Maps `v_0` to `root_image`, then for `j = 1…k` sets `φ(v_j)` to the next
/// unused entry of `L_{φ(parent(v_j))}`. A path tree reproduces the walk with
/// the same list model and start.
pub fn random_homomorphism(
    g: &Graph,
    t: &RootedTree,
    model: &mut ListModel,
    root_image: usize,
) -> Result<TreeHomomorphism> {
    let n = g.n();
    if root_image >= n {
        return Err(Error::VertexOutOfRange {
            vertex: root_image,
            n,
        });
    }
    if t.size() > 1 && g.degree(root_image) == 0 {
        return Err(Error::IsolatedVertex(root_image));
    }
    let mut image = Vec::with_capacity(t.size());
    image.push(root_image as u32);
    for j in 1..t.size() {
        let from = image[t.parent[j] as usize] as usize;
        let to = model
            .next(g, from)
            .expect("images only reach non-isolated vertices");
        image.push(to as u32);
    }
    Ok(TreeHomomorphism { image })
}

/// `visits[x]`: tree edges `uv` (`u` the parent) with `φ(u) = x`.
pub fn tree_visit_counts(g: &Graph, t: &RootedTree, h: &TreeHomomorphism) -> Vec<u64> {
    let mut visits = vec![0u64; g.n()];
    for j in 1..t.size() {
        visits[h.image[t.parent[j] as usize] as usize] += 1;
    }
    visits
}

/// `G_T`: distinct host edges `φ(u)φ(v)` over tree edges `uv`.
pub fn image_subgraph<'g>(g: &'g Graph, t: &RootedTree, h: &TreeHomomorphism) -> EdgeSubgraph<'g> {
    let mut sub = EdgeSubgraph::empty(g);
    for j in 1..t.size() {
        sub.insert(h.image[j] as usize, h.image[t.parent[j] as usize] as usize);
    }
    sub
}

/// One piece of a decomposition. Tree edges are named by their child endpoint.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Piece {
    pub root: usize,
    pub edges: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TreeDecomposition {
    pub pieces: Vec<Piece>,
}

/// Splits `E(T)` into edge-disjoint rooted subtrees of `L` to `3L` edges.
///
/// While at least `L` edges remain, take the deepest vertex `v` (smallest index
/// on ties) with at least `L` remaining descendants. Each branch below `v` has
/// at most `L` edges, so accumulating whole branches in ascending child order
/// stops between `L` and `2L − 1` edges; that union is detached as a piece
/// rooted at `v`. Fewer than `L` leftover edges form a subtree containing the
/// root and the last piece's root, and are merged into the last piece, which is
/// then rooted at the tree's root.
pub fn decompose_tree(t: &RootedTree, piece_size: usize) -> Result<TreeDecomposition> {
    let total = t.edge_count();
    if piece_size == 0 || piece_size > total {
        return Err(Error::InvalidParameter(format!(
            "piece size {piece_size} must lie in [1, {total}]"
        )));
    }
    let l = piece_size;
    let k = t.size();
    let children = t.children();

    // Remaining strict descendants per vertex.
    let mut desc = vec![0usize; k];
    for j in (1..k).rev() {
        desc[t.parent[j] as usize] += desc[j] + 1;
    }
    let mut removed = vec![false; k];

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by_key(|&v| (std::cmp::Reverse(t.depth[v]), v));

    let mut pieces: Vec<Piece> = Vec::new();
    let mut remaining = total;
    let mut cursor = 0;
    while remaining >= l {
        // Counts only decrease, so a vertex passed over never qualifies later.
        while desc[order[cursor]] < l {
            cursor += 1;
        }
        let v = order[cursor];
        let mut edges = Vec::new();
        for &c in &children[v] {
            if edges.len() >= l {
                break;
            }
            if removed[c] {
                continue;
            }
            collect_branch(&children, &mut removed, c, &mut edges);
        }
        let taken = edges.len();
        let mut a = v;
        loop {
            desc[a] -= taken;
            match t.parent(a) {
                Some(p) => a = p,
                None => break,
            }
        }
        remaining -= taken;
        pieces.push(Piece { root: v, edges });
    }
    if remaining > 0 {
        let rest: Vec<usize> = (1..k).filter(|&j| !removed[j]).collect();
        let last = pieces.last_mut().expect("at least one piece since L <= N");
        last.edges.extend(rest);
        last.edges.sort_unstable();
        last.root = 0;
    }
    Ok(TreeDecomposition { pieces })
}

fn collect_branch(children: &[Vec<usize>], removed: &mut [bool], top: usize, out: &mut Vec<usize>) {
    let mut stack = vec![top];
    while let Some(x) = stack.pop() {
        if removed[x] {
            continue;
        }
        removed[x] = true;
        out.push(x);
        stack.extend(children[x].iter().rev().copied());
    }
}

/// Violations of the decomposition invariants, empty when all hold: the pieces
/// partition `E(T)`, each piece is connected and contains the designated root
/// as its top vertex, and sizes lie in `[L, 3L]`.
pub fn check_decomposition(
    t: &RootedTree,
    piece_size: usize,
    d: &TreeDecomposition,
) -> Vec<String> {
    let mut problems = Vec::new();
    let mut owner = vec![usize::MAX; t.size()];
    for (i, p) in d.pieces.iter().enumerate() {
        if p.edges.len() < piece_size || p.edges.len() > 3 * piece_size {
            problems.push(format!("piece {i} has {} edges", p.edges.len()));
        }
        for &e in &p.edges {
            if e == 0 || e >= t.size() {
                problems.push(format!("piece {i} names non-edge {e}"));
                continue;
            }
            if owner[e] != usize::MAX {
                problems.push(format!("edge {e} in pieces {} and {i}", owner[e]));
            }
            owner[e] = i;
        }
        // Connected and rooted: every edge's parent endpoint is the root or the
        // child endpoint of another edge of the piece, and the root is not.
        let in_piece: std::collections::HashSet<usize> = p.edges.iter().copied().collect();
        if in_piece.contains(&p.root) {
            problems.push(format!("piece {i} root {} is a child in the piece", p.root));
        }
        for &e in &p.edges {
            let up = t.parent[e] as usize;
            if up != p.root && !in_piece.contains(&up) {
                problems.push(format!(
                    "piece {i} edge {e} is detached from root {}",
                    p.root
                ));
            }
        }
    }
    for (e, &o) in owner.iter().enumerate().skip(1) {
        if o == usize::MAX {
            problems.push(format!("edge {e} uncovered"));
        }
    }
    problems
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_complete, gen_gnp};
    use crate::walk::run_walk;

    #[test]
    fn build_examples() {
        let path = RootedTree::from_parents(&[0, 0, 1, 2]).unwrap();
        assert_eq!(path.edge_count(), 3);
        assert_eq!(path.depth(3), 3);
        let star = RootedTree::from_parents(&[0, 0, 0, 0]).unwrap();
        assert_eq!(star.degrees(), vec![3, 1, 1, 1]);
        assert!(matches!(
            RootedTree::from_parents(&[0, 0, 2, 1]),
            Err(Error::ForwardParent {
                child: 2,
                parent: 2
            })
        ));
    }

    #[test]
    fn generators() {
        let t = gen_nary_tree(2, 2);
        assert_eq!(t.size(), 7);
        assert_eq!(t.edge_count(), 6);
        assert_eq!(t.max_degree(), 3);
        assert_eq!(gen_nary_tree(1000, 2).size(), 1 + 1000 + 1_000_000);
        assert_eq!(gen_path_tree(5).max_degree(), 2);
        let r = gen_random_tree(100, 3, 7).unwrap();
        assert_eq!(r.size(), 100);
        assert!(r.max_degree() <= 3);
        assert_eq!(r, gen_random_tree(100, 3, 7).unwrap());
        assert!(gen_random_tree(10, 1, 0).is_err());
        let p = gen_random_tree(50, 2, 3).unwrap();
        assert!(p.max_degree() <= 2);
    }

    #[test]
    fn path_tree_matches_walk() {
        let g = gen_gnp(40, 0.3, 3).unwrap();
        for seed in 0..5 {
            let walk = run_walk(&g, &mut ListModel::new(seed, 40), 1, 200).unwrap();
            let t = gen_path_tree(200);
            let h = random_homomorphism(&g, &t, &mut ListModel::new(seed, 40), 1).unwrap();
            assert_eq!(h.image, walk.sequence);
            assert_eq!(tree_visit_counts(&g, &t, &h), walk.visit_counts);
            let a = image_subgraph(&g, &t, &h);
            let b = crate::walk::walk_subgraph(&g, &walk);
            assert!(a.is_subset(&b) && b.is_subset(&a));
        }
    }

    #[test]
    fn k2_images_alternate_by_depth() {
        let g = gen_complete(2);
        let t = gen_random_tree(30, 4, 1).unwrap();
        let h = random_homomorphism(&g, &t, &mut ListModel::new(2, 2), 0).unwrap();
        for j in 0..t.size() {
            assert_eq!(h.image[j] as usize, t.depth(j) % 2);
        }
    }

    #[test]
    fn star_visits_and_image() {
        let g = gen_complete(10);
        let t = gen_nary_tree(7, 1);
        let h = random_homomorphism(&g, &t, &mut ListModel::new(3, 10), 4).unwrap();
        assert!(h.is_valid(&g, &t));
        let visits = tree_visit_counts(&g, &t, &h);
        assert_eq!(visits[4], 7);
        assert_eq!(visits.iter().sum::<u64>(), 7);
        let sub = image_subgraph(&g, &t, &h);
        assert!(sub.len() <= 7);
        assert!(sub.edges().all(|(u, v)| u == 4 || v == 4));
    }

    #[test]
    fn decompose_path() {
        let t = gen_path_tree(9);
        let d = decompose_tree(&t, 3).unwrap();
        let sizes: Vec<usize> = d.pieces.iter().map(|p| p.edges.len()).collect();
        assert_eq!(sizes, vec![3, 3, 3]);
        assert_eq!(
            d.pieces[0],
            Piece {
                root: 6,
                edges: vec![7, 8, 9]
            }
        );
        assert!(check_decomposition(&t, 3, &d).is_empty());
    }

    #[test]
    fn decompose_star() {
        let t = gen_nary_tree(9, 1);
        let d = decompose_tree(&t, 3).unwrap();
        assert_eq!(d.pieces.len(), 3);
        assert!(d.pieces.iter().all(|p| p.edges.len() == 3 && p.root == 0));
        assert_eq!(d.pieces[0].edges, vec![1, 2, 3]);
        assert!(check_decomposition(&t, 3, &d).is_empty());
    }

    #[test]
    fn decompose_whole_and_errors() {
        let t = gen_random_tree(20, 3, 4).unwrap();
        let d = decompose_tree(&t, 19).unwrap();
        assert_eq!(d.pieces.len(), 1);
        assert_eq!(d.pieces[0].root, 0);
        assert!(decompose_tree(&t, 20).is_err());
        assert!(decompose_tree(&t, 0).is_err());
    }

    #[test]
    fn decompose_with_remainder() {
        // Path of 10 edges, L = 3: three pieces of 3, then one leftover edge
        // merged into the last piece, re-rooted at 0.
        let t = gen_path_tree(10);
        let d = decompose_tree(&t, 3).unwrap();
        assert_eq!(d.pieces.len(), 3);
        assert_eq!(
            d.pieces[2],
            Piece {
                root: 0,
                edges: vec![1, 2, 3, 4]
            }
        );
        assert!(check_decomposition(&t, 3, &d).is_empty());
    }

    #[test]
    fn checker_flags_bad_pieces() {
        let t = gen_path_tree(4);
        let bad = TreeDecomposition {
            pieces: vec![Piece {
                root: 0,
                edges: vec![1, 3],
            }],
        };
        let problems = check_decomposition(&t, 2, &bad);
        assert!(problems.iter().any(|p| p.contains("detached")));
        assert!(problems.iter().any(|p| p.contains("uncovered")));
    }
}
