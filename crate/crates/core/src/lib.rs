//! Anchoring of spiral waves by several localized perturbations: a planar
//! reduced map with its fixed-point continuation, the center-bundle ODE, and
//! a reaction-diffusion simulator.

pub mod center_bundle;
pub mod continuation;
pub mod planar_map;
pub mod rd_sim;
