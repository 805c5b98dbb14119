//! Query-complexity toolkit for hypergraph properties in the adjacency-matrix
//! model.
//!
//! The crate is organised bottom-up:
//!
//! * [`edges`] ranks hyperedges, induces edge maps from vertex maps and checks
//!   isomorphism invariance of small properties by exhaustive search.
//! * [`dr`] samples the collapsing map distributions `D_r` and computes their
//!   constraint probabilities exactly by enumeration.
//! * [`qsim`] is a dense state-vector simulator for query circuits with the
//!   plain, extended, index-shift and composed oracles.
//! * [`dequantizer`] turns a boosted quantum query circuit into a randomized
//!   decision tree and measures how close the collapsed-map circuits stay to
//!   the permuted ones.

pub mod dequantizer;
pub mod dr;
pub mod edges;
pub mod qsim;
pub mod seed;

pub use edges::{EdgeIndexer, EdgeMap, Hypergraph, VertexMap};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("vertex {vertex} is outside [1, {n}]")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("edge has {size} vertices but the uniformity is {l}")]
    EdgeTooLarge { size: usize, l: usize },
    #[error("edge is empty")]
    EmptyEdge,
    #[error("vertex {0} appears twice in an edge")]
    DuplicateVertex(usize),
    #[error("index {index} is outside [1, {bound}]")]
    IndexOutOfRange { index: usize, bound: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("domain too large: {0}")]
    DomainTooLarge(String),
    #[error("register layout mismatch: {0}")]
    LayoutMismatch(String),
    #[error("matrix is not unitary (deviation {0:e})")]
    NotUnitary(f64),
    #[error("bit {0} was read without being queried")]
    UnqueriedBit(usize),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
