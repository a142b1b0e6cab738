use thiserror::Error;

use crate::graph::Link;
use crate::sim::Trace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("graph is not strongly connected")]
    NotStronglyConnected,

    #[error("graph is disconnected: {} components ({})", .components.len(), describe_components(.components))]
    Disconnected { components: Vec<Vec<usize>> },

    #[error("node {node} out of range for a graph with {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },

    #[error("self-loop on node {0} is not allowed")]
    SelfLoop(usize),

    #[error("link ({}, {}) is not in the base topology", .0.0, .0.1)]
    NonCompliantLink(Link),

    #[error("requested {requested} extra edges but only {added} candidates were available")]
    AddsExhausted { added: usize, requested: usize },

    #[error("conflict graph has {size} vertices, exhaustive coloring is limited to {limit}")]
    TooLarge { size: usize, limit: usize },

    #[error("invalid link partition: {0}")]
    InvalidPartition(String),

    #[error("matrix is not symmetric (|W_ij - W_ji| = {0:e})")]
    AsymmetricInput(f64),

    #[error("matrix has no positive entry")]
    AllZero,

    #[error("invalid parameter: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("push-sum weight of node {node} is not positive ({value})")]
    NonPositiveWeight { node: usize, value: f64 },

    #[error("exact constants are only available for quadratic problems")]
    UnsupportedProblem,

    #[error("simulation diverged at iteration {iteration} (loss {loss:e})")]
    Diverged {
        iteration: usize,
        loss: f64,
        trace: Box<Trace>,
    },

    #[error("random geometric graph still disconnected after {0} attempts")]
    RetriesExhausted(usize),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn describe_components(components: &[Vec<usize>]) -> String {
    components
        .iter()
        .map(|c| {
            let shown: Vec<String> = c.iter().take(8).map(|v| v.to_string()).collect();
            if c.len() > 8 {
                format!("{{{}, ...}}", shown.join(", "))
            } else {
                format!("{{{}}}", shown.join(", "))
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}
