//! Numerical toolkit for homogeneous (graded nilpotent Lie) groups.
//!
//! The crate builds a group out of a graded basis and sparse structure
//! constants, multiplies in exponential coordinates through a truncated
//! Baker–Campbell–Hausdorff law (steps up to 6), and layers the geometric
//! machinery of intrinsic-graph theory on top of that arithmetic:
//!
//! - [`algebra`]: graded Lie algebras, group arithmetic, dilations,
//!   left-invariant vector fields;
//! - [`metric`]: homogeneous norms/distances, cones, the splitting constant;
//! - [`splitting`]: homogeneous subgroups, complementary couples `(W, V)`,
//!   group projections and graph translations;
//! - [`exterior`]: multivectors, wedge, Hodge star, orienting units;
//! - [`graph`]: intrinsic maps, intrinsic differentials, projected vector
//!   fields, and three independent routes to the intrinsic Jacobian;
//! - [`measure`]: slice volumes, spherical factors, Federer-density blow-ups,
//!   Pansu differentials, implicit level-set solving, area-formula checks.
//!
//! Everything is plain `f64` numerics over immutable values; all stochastic
//! estimators take explicit seeds and are deterministic for a given seed,
//! independent of thread count.

pub mod algebra;
mod bch;
pub mod exterior;
pub mod fixtures;
pub mod graph;
pub mod groupspec;
pub mod measure;
pub mod metric;
pub mod optim;
pub mod report;
pub mod rng;
pub mod splitting;

pub use algebra::{GradedAlgebra, Point, TangentVector};
pub use graph::{IntrinsicLinearMap, IntrinsicMap};
pub use measure::MeasureEstimate;
pub use metric::Distance;
pub use splitting::{ComplementaryCouple, HomogeneousSubgroup};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("group step {0} exceeds the supported maximum of 6")]
    UnsupportedStep(usize),
    #[error("invalid algebra spec: {0}")]
    InvalidAlgebra(String),
    #[error("invalid subgroup: {0}")]
    InvalidSubgroup(String),
    #[error("invalid couple: {0}")]
    InvalidCouple(String),
    #[error("layer index {index} out of range 1..={step}")]
    LayerOutOfRange { index: usize, step: usize },
    #[error("basis index {index} out of range 1..={dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("point outside the map domain")]
    OutOfDomain,
    #[error("{what} did not converge (residual {residual:e})")]
    NonConvergence { what: &'static str, residual: f64 },
    #[error("singular system in {0}")]
    Singular(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown fixture: {0}")]
    UnknownFixture(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
