//! The center-bundle ODE of a rotating wave under translational perturbations
//! centred at `ξ_1, …, ξ_n`, its time-2π map and perturbed rotating waves.

pub mod flow;
pub mod orbit;
pub mod system;

pub use flow::{integrate, integrate_in, time_2pi_map, FlowOptions, Frame, Trajectory};
pub use orbit::{
    find_perturbed_wave, floquet_at, floquet_multipliers, map_jacobian, trapezoid_average, Floquet, PeriodicOrbit,
    WaveStability, HYPERBOLICITY_TOL,
};
pub use system::{CenterBundleSystem, PerturbationFn, PolyTerm, MAX_DEGREE};

use num_complex::Complex64;

#[derive(Debug, thiserror::Error)]
pub enum CenterBundleError {
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("perturbation overflow at t = {t}")]
    Overflow { t: f64 },
    #[error("trajectory left radius {radius} at t = {t}")]
    DriftEscape { t: f64, radius: f64 },
    #[error("all parameters are zero: every point is a non-hyperbolic fixed point")]
    Unperturbed,
    #[error("singular Jacobian of P − id near z = {z}")]
    NearFold { z: Complex64 },
    #[error("no fixed point after {iterations} Newton iterations (residual {residual:.3e})")]
    RootNotFound { iterations: usize, residual: f64 },
}
