//! Random walks and tree-indexed random walks on quasirandom graphs.
//!
//! Walks are driven by a per-vertex list model so that the traversed subgraph
//! can be compared edge-for-edge with independent per-vertex edge sampling.
//! The [`cert`] module measures how quasirandom a graph (or a traversed
//! subgraph) is.

pub mod cert;
pub mod error;
pub mod graph;
pub mod io;
pub mod rng;
pub mod tree;
pub mod walk;

pub use cert::{
    certify, count_c4_labelled, discrepancy_exhaustive, discrepancy_sampled,
    lambda_bound_from_trace, lambda_estimate, trace_p4, CertifyOptions, Discrepancy, LambdaBound,
    Method, QuasirandomnessReport, SampleOptions,
};
pub use error::{Error, Result};
pub use graph::{
    balanced_vertices, density, edges_between, gen_complete, gen_gnp, gen_two_clique_bridge,
    DegreeProfile, Graph, VertexSet,
};
pub use tree::{
    decompose_tree, gen_nary_tree, gen_path_tree, gen_random_tree, image_subgraph,
    random_homomorphism, tree_visit_counts, RootedTree, TreeDecomposition, TreeHomomorphism,
};
pub use walk::{
    list_subgraph, run_walk, sandwich_bounds, stationary, tv_distance, walk_subgraph, Distribution,
    EdgeSubgraph, ListModel, WalkTrace,
};
