//! Continuation of the fixed-point branches of `P_ρ`, their catastrophes and
//! the resulting wedge angles.

pub mod branch;
pub mod events;
pub mod export;
pub mod family;
pub mod oracle;
pub mod wedge;

use thiserror::Error;

use crate::planar_map::MapError;

pub use branch::{
    continue_branch, continue_from_eta, Branch, BranchPoint, Catastrophe, CatastropheKind, ContinuationOptions, Side,
    Stability, Termination, POINT_TOL,
};
pub use events::{detect_and_refine_folds, detect_infinity, FOLD_TOL};
pub use export::{bifurcation_diagram, classify_and_export, BranchClass, Diagram, EventRow, NamedBranch};
pub use family::FixedPointFamily;
pub use oracle::{newton_grid_oracle, trace_kappa_components, ComponentBranch};
pub use wedge::{branch_wedge, classify_overlap, wedge_angles, Overlap, WedgeAngle, WedgeReport};

#[derive(Debug, Error)]
pub enum ContinuationError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("seed is not a fixed point (residual {0:e})")]
    SeedNotFixed(f64),
    #[error("branch tangent is undefined at the seed")]
    SingularSeed,
    #[error(transparent)]
    Map(#[from] MapError),
}
