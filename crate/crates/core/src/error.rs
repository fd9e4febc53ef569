use thiserror::Error;

use crate::tree::NodeId;

#[derive(Debug, Error)]
pub enum Error {
    /// A predictor vector that does not fit the declared schema.
    #[error("input error: {0}")]
    Input(String),

    /// An edit that does not apply to the targeted node.
    #[error("structural error at node {node}: {reason}")]
    Structure { node: NodeId, reason: String },

    #[error("leaf {0} has no output; draw leaf outputs before predicting")]
    UnsetLeaf(NodeId),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("LP solver failed after {iterations} pivots ({rows} rows, {cols} columns)")]
    LpStall {
        iterations: usize,
        rows: usize,
        cols: usize,
    },

    #[error("cutpoint interval is inverted: lo = {lo}, hi = {hi}")]
    InvertedInterval { lo: f64, hi: f64 },

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("data error: {0}")]
    Data(String),

    #[error("{0}")]
    Metric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<V, E = Error> = std::result::Result<V, E>;
