//! Fixed-step RK4 integration and the time-2π map.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::system::CenterBundleSystem;
use super::CenterBundleError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowOptions {
    /// Nominal step; the actual step divides the interval evenly.
    pub dt: f64,
    /// Integration aborts once `|p|` (or `|z|`) exceeds this.
    pub escape_radius: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            dt: TAU / 4096.0,
            escape_radius: 1e6,
        }
    }
}

impl FlowOptions {
    pub fn with_dt(dt: f64) -> Self {
        Self { dt, ..Self::default() }
    }

    fn validate(&self) -> Result<(), CenterBundleError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) || !(self.escape_radius > 0.0) {
            return Err(CenterBundleError::InvalidArgument(format!(
                "dt = {} and escape radius = {} must be positive",
                self.dt, self.escape_radius
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub y: Vec<Complex64>,
}

impl Trajectory {
    pub fn last(&self) -> Complex64 {
        *self.y.last().expect("trajectory holds its initial point")
    }
}

/// Which form of the equations to integrate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Frame {
    /// The original variable `p`.
    Fixed,
    /// `z = p − ξ_1 + i e^{it} v`.
    CoRotating,
}

pub fn integrate_in(
    sys: &CenterBundleSystem,
    frame: Frame,
    y0: Complex64,
    t0: f64,
    t1: f64,
    opts: &FlowOptions,
) -> Result<Trajectory, CenterBundleError> {
    opts.validate()?;
    if !(t1 > t0) {
        return Err(CenterBundleError::InvalidArgument(format!("need t1 > t0, got [{t0}, {t1}]")));
    }
    if !(y0.re.is_finite() && y0.im.is_finite()) {
        return Err(CenterBundleError::InvalidArgument("non-finite initial point".into()));
    }
    let rhs = |y: Complex64, t: f64| match frame {
        Frame::Fixed => sys.evaluate_rhs(y, t),
        Frame::CoRotating => sys.evaluate_rhs_z(y, t),
    };
    let steps = ((t1 - t0) / opts.dt).ceil().max(1.0) as usize;
    let h = (t1 - t0) / steps as f64;
    let mut traj = Trajectory {
        t: Vec::with_capacity(steps + 1),
        y: Vec::with_capacity(steps + 1),
    };
    traj.t.push(t0);
    traj.y.push(y0);
    let mut y = y0;
    for k in 0..steps {
        let t = t0 + k as f64 * h;
        let k1 = rhs(y, t)?;
        let k2 = rhs(y + 0.5 * h * k1, t + 0.5 * h)?;
        let k3 = rhs(y + 0.5 * h * k2, t + 0.5 * h)?;
        let k4 = rhs(y + h * k3, t + h)?;
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        let tn = if k + 1 == steps { t1 } else { t0 + (k + 1) as f64 * h };
        if y.norm() > opts.escape_radius {
            return Err(CenterBundleError::DriftEscape {
                t: tn,
                radius: opts.escape_radius,
            });
        }
        traj.t.push(tn);
        traj.y.push(y);
    }
    Ok(traj)
}

/// Integrates the equation in `p` over `[t0, t1]`.
pub fn integrate(
    sys: &CenterBundleSystem,
    p0: Complex64,
    t0: f64,
    t1: f64,
    opts: &FlowOptions,
) -> Result<Trajectory, CenterBundleError> {
    integrate_in(sys, Frame::Fixed, p0, t0, t1, opts)
}

/// `z(2π)` from `z(0) = z0` in the co-rotating frame.
pub fn time_2pi_map(sys: &CenterBundleSystem, z0: Complex64, opts: &FlowOptions) -> Result<Complex64, CenterBundleError> {
    Ok(integrate_in(sys, Frame::CoRotating, z0, 0.0, TAU, opts)?.last())
}
