//! Driver-node selection for structured linear descriptor networks.
//!
//! The library models networked systems `F x' = A x` whose matrices mix known
//! rational entries with free parameters, decides structural controllability
//! through matroid constraints on the candidate input set, and selects input
//! nodes that satisfy controllability while maximizing monotone submodular
//! performance metrics (network coherence, consensus convergence error).
//!
//! Module layout follows the pipeline:
//!
//! * [`structmat`] — mixed fixed/free matrices and randomized rank over GF(p)
//! * [`matroid`] — matroid oracles, duals, unions, and intersection algorithms
//! * [`sysmodel`] — descriptor systems, constructors, and network generation
//! * [`auxgraph`] — the auxiliary-graph machinery certifying the pencil
//!   condition, plus the formal cycle-coefficient verifier
//! * [`constraints`] — the controllability matroids, graph controllability
//!   indices, and randomized certificates
//! * [`metrics`] — coherence / convergence-error metrics and their
//!   submodular-objective wrappers
//! * [`select`] — minimum input set, continuous greedy with swap rounding,
//!   exact modular selection, and the trade-off greedy

pub mod auxgraph;
pub mod constraints;
pub mod matroid;
pub mod metrics;
pub mod select;
pub mod structmat;
pub mod sysmodel;

use thiserror::Error;

/// Errors from the structured-matrix layer.
#[derive(Debug, Error)]
pub enum StructError {
    #[error("invalid field configuration: {0}")]
    BadFieldConfig(String),
    #[error("fixed entry denominator divisible by prime {0}")]
    DenominatorDivisible(u64),
}

/// Errors from matroid constructions and algorithms.
#[derive(Debug, Error)]
pub enum MatroidError {
    #[error("element {0} outside ground set of size {1}")]
    ElementOutOfRange(usize, usize),
    #[error("ground sets differ: {0} vs {1}")]
    GroundMismatch(usize, usize),
    #[error("no common basis: max common independent set {found} < common rank {need}")]
    NoCommonBasis { found: usize, need: usize },
    #[error(transparent)]
    Struct(#[from] StructError),
}

/// Errors from system construction and selection.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("node index {0} out of range (n = {1})")]
    NodeOutOfRange(usize, usize),
    #[error("graph has no edges; the consensus form needs at least one")]
    EmptyGraph,
    #[error("graph must be undirected for the consensus form")]
    NotUndirected,
    #[error("need at least two nodes, got {0}")]
    TooFewNodes(usize),
    #[error("degree bisection failed after {iterations} iterations (achieved {achieved:.3}, target {target:.3})")]
    DegreeBisection {
        iterations: usize,
        achieved: f64,
        target: f64,
    },
    #[error("no independent matching: system is not solvable")]
    NoIndependentMatching,
    #[error("basis completion failed: J rows inconsistent")]
    CompletionFailed,
    #[error("simple-cycle budget exceeded ({0} cycles)")]
    CycleBudgetExceeded(usize),
    #[error("k = {k} too small: need k >= max(r1, r2) = {min_k}")]
    KTooSmall { k: usize, min_k: usize },
    #[error("system graph is not strongly connected")]
    NotStronglyConnected,
    #[error("input set empty")]
    EmptyInputSet,
    #[error("followers disconnected from every input: variance unbounded")]
    UnboundedVariance,
    #[error(transparent)]
    Matroid(#[from] MatroidError),
    #[error(transparent)]
    Struct(#[from] StructError),
}

pub use structmat::{FieldConfig, Stream, StructuredMatrix};
