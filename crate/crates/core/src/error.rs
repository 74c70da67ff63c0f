use thiserror::Error;

use crate::qstate::BasisLabel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("register layout mismatch: {left:?} vs {right:?}")]
    LayoutMismatch { left: Vec<u32>, right: Vec<u32> },

    #[error("label {label} is not valid for register layout {dims:?}")]
    LabelOutOfRange { label: BasisLabel, dims: Vec<u32> },

    #[error("label {label} is outside the operator domain: {reason}")]
    OutsideDomain { label: BasisLabel, reason: String },

    #[error("null projection: outcome weight {weight:e} is indistinguishable from zero")]
    NullProjection { weight: f64 },

    #[error("state has zero norm and cannot be normalized")]
    ZeroNorm,

    #[error("invalid measurement setup: {0}")]
    InvalidSetup(String),

    #[error("invalid lattice world: {0}")]
    InvalidWorld(String),

    #[error("projector family is not a partition of the identity: {0}")]
    NotAPartition(String),

    #[error(
        "total dimension {dim} exceeds the exact-mode bound {bound}; use sampled mode \
         (restrict to a subspace or sample candidate states) instead"
    )]
    DimensionTooLarge { dim: u128, bound: u128 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("branch list is empty")]
    EmptyBranches,

    #[error("state spans {0} macro labels; a single definite branch is required")]
    NotASingleBranch(usize),

    #[error("backward enumeration exceeded depth cap {cap} ({requested} projection times)")]
    DepthCapExceeded { cap: usize, requested: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
