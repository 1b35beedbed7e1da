use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vertex {vertex} out of range for graph on {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),

    #[error("graph needs at least {needed} vertices, got {got}")]
    TooFewVertices { needed: usize, got: usize },

    #[error("graph has no edges")]
    Edgeless,

    #[error("vertex {0} is isolated")]
    IsolatedVertex(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("exhaustive discrepancy is limited to n <= {limit}, got n = {n}")]
    TooLargeForExhaustive { n: usize, limit: usize },

    #[error("graph is disconnected")]
    Disconnected,

    #[error("graph is bipartite")]
    Bipartite,

    #[error(
        "power iteration did not converge after {iterations} iterations (last estimate {last})"
    )]
    NotConverged { iterations: usize, last: f64 },

    #[error(
        "vertex {vertex} is not balanced (degree {degree}, target {target:.1} +/- {slack:.1})"
    )]
    Unbalanced {
        vertex: usize,
        degree: usize,
        target: f64,
        slack: f64,
    },

    #[error("tree parent of vertex {child} is {parent}, which does not precede it")]
    ForwardParent { child: usize, parent: usize },

    #[error("distributions have different supports ({0} vs {1})")]
    SupportMismatch(usize, usize),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
