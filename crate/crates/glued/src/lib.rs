//! Modified glued-trees graphs and the degree-5 decision problem on them.
//!
//! * [`instance`] builds the graphs: a glued-trees graph, a depth-`2k`
//!   binary tree hanging off ENTRANCE, and three markers that are either
//!   isolated or attached to EXIT.
//! * [`oracle`] is the query-counting adjacency-list oracle.
//! * [`walk`] simulates the continuous-time quantum walk, on the full graph
//!   and on the column-reduced line.
//! * [`solvers`] holds the two-stage quantum algorithm and the classical
//!   baselines.
//! * [`games`] plays the lower-bound games and the reductions between them.

pub mod games;
pub mod instance;
pub mod oracle;
pub mod solvers;
pub mod walk;

pub use instance::{GluedInstance, GluedParams, Label, Role, Variant};
pub use oracle::{AdjOracle, OracleMode};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("k must be even and at least 2, got {0}")]
    InvalidDepth(u32),
    #[error("instance too large: {0}")]
    TooLarge(String),
    #[error("label {label} is outside [1, {n}]")]
    LabelOutOfRange { label: u32, n: u32 },
    #[error("slot {0} is outside [1, 5]")]
    SlotOutOfRange(usize),
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("internal consistency failure: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
