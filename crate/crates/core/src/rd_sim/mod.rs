//! Reaction-diffusion simulation of perturbed spiral waves.

pub mod analysis;
pub mod experiment;
pub mod grid;
pub mod model;
pub mod tip;

pub use analysis::{anchoring_center, AnchorReport};
pub use experiment::{
    run_experiment, run_sweep, write_pgm, Direction, ExperimentResult, Preset, RunOptions, SnapFrame, SweepOptions,
    SweepPath, SweepRecord, SweepRow, TipTrajectory,
};
pub use grid::{laplacian_5pt, Grid, Scheme, SimState, Stepper};
pub use model::{BellShape, GaussianBell, Kinetics, ModelSpec, Species};
pub use tip::{tip_candidates, track_tip};

#[derive(Debug, thiserror::Error)]
pub enum RdError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("non-finite state at t = {t:.4} near ({x1:.3}, {x2:.3})")]
    BlowUp { t: f64, x1: f64, x2: f64 },
    #[error("tip series too short: {0}")]
    ShortSeries(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
