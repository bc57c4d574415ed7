//! Truncated and general planar maps `P_ρ`, their level curves and
//! transverse fold candidates.

pub mod candidates;
pub mod field;
pub mod levelset;
pub mod map;

use thiserror::Error;

pub use candidates::{transverse_fold_candidates, CandidateReport, FoldCandidate, FoldCase, Rejection};
pub use field::{Envelope, Monomial, PlanarField, Point, Poly};
pub use levelset::{levelset, CurveKind, CurveLabel, LevelCurve, Window};
pub use map::{
    eb_map, eb_map_revisited, AxisSample, Eta, FamilyCoefficients, GeneralParts, MapSpec, PConditionReport,
    PointAlgebra, EB_OMEGA_STAR,
};

#[derive(Debug, Error)]
pub enum MapError {
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("invalid map: {0}")]
    InvalidSpec(String),
    #[error("map has no general (ρ-dependent) parts")]
    NotGeneral,
    #[error("row index must be 1 or 2, got {0}")]
    BadRow(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
