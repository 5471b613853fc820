use thiserror::Error;

use crate::topology::NodeId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("points coincide within tolerance")]
    CoincidentPoints,
    #[error("points are collinear within tolerance")]
    CollinearPoints,
    #[error("path turn window {kappa} is not below pi")]
    KappaTooLarge { kappa: f64 },
    #[error("path endpoints coincide")]
    CoincidentEndpoints,
    #[error("k = {k} outside the supported range 1..=20")]
    KTooLarge { k: u32 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("invalid angle triple at node {node}: {reason}")]
    InvalidAngleTriple { node: NodeId, reason: String },
    #[error("eps = {eps} outside the admissible range {range}")]
    EpsOutOfRange { eps: f64, range: &'static str },
    #[error("node {0} is not a terminal")]
    NotATerminal(NodeId),
    #[error("degenerate edge at node {node} (length {length:e})")]
    DegenerateEdge { node: NodeId, length: f64 },
    #[error("quasi-terminals of the children of node {0} coincide")]
    CoincidentQuasiTerminals(NodeId),
    #[error("oracle did not converge after {iterations} sweeps (length {length}, last move {last_move:e})")]
    NoConvergence { iterations: usize, length: f64, last_move: f64 },
    #[error("{formula}: precondition violated ({detail})")]
    RangeViolation { formula: &'static str, detail: String },
    #[error("no polynomial root found (scanned |z - 1| <= {radius})")]
    NoRootFound { radius: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
