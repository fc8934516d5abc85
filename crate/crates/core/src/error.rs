use thiserror::Error;

/// Errors raised across the association, spectral, and rectification layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("view {view} does not exist (layout has {n_views} views)")]
    ViewOutOfRange { view: usize, n_views: usize },

    #[error("item {item} out of range for view {view} with {count} items")]
    IndexOutOfRange { view: usize, item: usize, count: usize },

    #[error("vertex {vertex} out of range (layout has {total} vertices)")]
    VertexOutOfRange { vertex: usize, total: usize },

    #[error("edge ({a}, {b}) joins two items of view {view}")]
    SameViewEdge { a: usize, b: usize, view: usize },

    #[error("layouts differ: {left:?} vs {right:?}")]
    LayoutMismatch { left: Vec<usize>, right: Vec<usize> },

    #[error("invalid lifting: {0}")]
    InvalidLifting(String),

    #[error("cost matrix has {rows} rows but only {cols} columns")]
    ShapeError { rows: usize, cols: usize },

    #[error("cost matrix entry ({row}, {col}) is not finite")]
    NonFiniteCost { row: usize, col: usize },

    #[error("eigensolver did not converge on component {component} after {iterations} iterations")]
    ConvergenceFailure { component: usize, iterations: usize },

    #[error("component {component} has {size} vertices, above the dense limit {limit}")]
    ComponentTooLarge {
        component: usize,
        size: usize,
        limit: usize,
    },

    #[error("need {required} non-zero embedding rows for pivots, found {available}")]
    InsufficientNonZeroRows { required: usize, available: usize },

    #[error("universe size {requested} outside the feasible range [{min}, {max}]")]
    InvalidUniverseSize {
        requested: usize,
        min: usize,
        max: usize,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
