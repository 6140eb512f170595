//! Error taxonomy shared across the crate.
//!
//! Numeric routines reject malformed input (`Domain`), graph routines
//! distinguish disconnection from bad indices, and the simulation layer
//! reports configuration and planning failures separately so callers can
//! react (replan, abandon a goal) without string matching.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Matrix input violates a numeric precondition (NaN, asymmetry, wrong size).
    #[error("domain error: {0}")]
    Domain(String),

    /// The graph under evaluation is not connected, so spanning-tree
    /// quantities are undefined (the reduced Laplacian is singular).
    #[error("disconnected graph: {0}")]
    Disconnected(String),

    /// Bad graph structure: unknown node id, self-loop, empty graph.
    #[error("invalid graph: {0}")]
    Graph(String),

    /// Invalid configuration value or an unsatisfiable experiment setup.
    #[error("configuration error: {0}")]
    Config(String),

    /// No traversable path to the requested goal.
    #[error("unreachable goal: {0}")]
    Unreachable(String),

    /// Malformed world or pose-graph file.
    #[error("parse error: {0}")]
    Parse(String),

    /// Input exceeds a hard guard (e.g. exhaustive enumeration size cap).
    #[error("refusing input: {0}")]
    Refused(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
