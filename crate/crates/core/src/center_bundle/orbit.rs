//! Perturbed rotating waves: fixed points of the time-2π map, their orbits,
//! Floquet multipliers and anchoring centers.

use std::f64::consts::TAU;
use std::io::Write;

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::flow::{integrate_in, time_2pi_map, FlowOptions, Frame};
use super::system::CenterBundleSystem;
use super::CenterBundleError;
use crate::planar_map::map::eigenvalues2;

/// `| |μ| − 1 |` below this leaves the orbit unclassified.
pub const HYPERBOLICITY_TOL: f64 = 1e-4;
pub const NEWTON_TOL: f64 = 1e-10;
pub const NEWTON_MAX_ITER: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WaveStability {
    /// Both multipliers inside the unit circle.
    Anchoring,
    /// Both outside.
    Repelling,
    Saddle,
    NonHyperbolic,
}

impl WaveStability {
    pub fn classify(moduli: [f64; 2]) -> Self {
        if moduli.iter().any(|m| (m - 1.0).abs() <= HYPERBOLICITY_TOL) {
            WaveStability::NonHyperbolic
        } else if moduli.iter().all(|&m| m < 1.0) {
            WaveStability::Anchoring
        } else if moduli.iter().all(|&m| m > 1.0) {
            WaveStability::Repelling
        } else {
            WaveStability::Saddle
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            WaveStability::Anchoring => "anchoring",
            WaveStability::Repelling => "repelling",
            WaveStability::Saddle => "saddle",
            WaveStability::NonHyperbolic => "non-hyperbolic",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Floquet {
    pub multipliers: [Complex64; 2],
    pub stability: WaveStability,
}

impl Floquet {
    pub fn moduli(&self) -> [f64; 2] {
        [self.multipliers[0].norm(), self.multipliers[1].norm()]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    /// Fixed point of the time-2π map in the co-rotating frame.
    pub z: Complex64,
    pub t: Vec<f64>,
    pub p: Vec<Complex64>,
    pub floquet: Floquet,
    /// Time average of `p` over one period.
    pub center: Complex64,
    pub newton_iterations: usize,
    pub residual: f64,
}

impl PeriodicOrbit {
    pub fn closure_error(&self) -> f64 {
        (self.p[self.p.len() - 1] - self.p[0]).norm()
    }

    /// `t,re_p,im_p`.
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["t", "re_p", "im_p"])?;
        for (t, p) in self.t.iter().zip(&self.p) {
            wr.write_record(&[format!("{t:.12}"), format!("{:.12}", p.re), format!("{:.12}", p.im)])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn summary(&self) -> String {
        let [m1, m2] = self.floquet.multipliers;
        format!(
            "center = {:.10} {:+.10}i, multipliers = ({:.8} {:+.8}i, {:.8} {:+.8}i), moduli = ({:.8}, {:.8}), {}",
            self.center.re,
            self.center.im,
            m1.re,
            m1.im,
            m2.re,
            m2.im,
            m1.norm(),
            m2.norm(),
            self.floquet.stability.name()
        )
    }
}

/// Trapezoidal average of samples spanning exactly one period.
pub fn trapezoid_average(t: &[f64], y: &[Complex64]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..t.len().saturating_sub(1) {
        acc += 0.5 * (t[k + 1] - t[k]) * (y[k] + y[k + 1]);
    }
    acc / (t[t.len() - 1] - t[0])
}

/// `DP(z)` as a real 2×2 matrix by central differences.
pub fn map_jacobian(sys: &CenterBundleSystem, z: Complex64, opts: &FlowOptions) -> Result<Matrix2<f64>, CenterBundleError> {
    let h = 1e-6 * z.norm().max(1.0);
    let mut j = Matrix2::zeros();
    for (col, dir) in [Complex64::new(h, 0.0), Complex64::new(0.0, h)].into_iter().enumerate() {
        let d = (time_2pi_map(sys, z + dir, opts)? - time_2pi_map(sys, z - dir, opts)?) / (2.0 * h);
        j[(0, col)] = d.re;
        j[(1, col)] = d.im;
    }
    Ok(j)
}

/// Multipliers of the time-2π map at `z` and the resulting classification.
pub fn floquet_at(sys: &CenterBundleSystem, z: Complex64, opts: &FlowOptions) -> Result<Floquet, CenterBundleError> {
    let multipliers = eigenvalues2(&map_jacobian(sys, z, opts)?);
    let moduli = [multipliers[0].norm(), multipliers[1].norm()];
    Ok(Floquet {
        multipliers,
        stability: WaveStability::classify(moduli),
    })
}

pub fn floquet_multipliers(
    sys: &CenterBundleSystem,
    orbit: &PeriodicOrbit,
    opts: &FlowOptions,
) -> Result<Floquet, CenterBundleError> {
    floquet_at(sys, orbit.z, opts)
}

/// Newton on `z ↦ P(z) − z`, then the orbit through the fixed point.
pub fn find_perturbed_wave(
    sys: &CenterBundleSystem,
    guess: Complex64,
    opts: &FlowOptions,
) -> Result<PeriodicOrbit, CenterBundleError> {
    if sys.is_unperturbed() {
        return Err(CenterBundleError::Unperturbed);
    }
    let mut z = guess;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    for it in 0..=NEWTON_MAX_ITER {
        let g = time_2pi_map(sys, z, opts)? - z;
        residual = g.norm();
        iterations = it;
        if residual <= NEWTON_TOL || it == NEWTON_MAX_ITER {
            break;
        }
        let jm = map_jacobian(sys, z, opts)? - Matrix2::identity();
        let scale = jm.abs().max().max(f64::MIN_POSITIVE);
        if jm.determinant().abs() <= 1e-12 * scale * scale {
            return Err(CenterBundleError::NearFold { z });
        }
        let step = jm
            .lu()
            .solve(&Vector2::new(-g.re, -g.im))
            .ok_or(CenterBundleError::NearFold { z })?;
        z += Complex64::new(step[0], step[1]);
    }
    if !(residual <= NEWTON_TOL) {
        return Err(CenterBundleError::RootNotFound { iterations, residual });
    }
    let traj = integrate_in(sys, Frame::CoRotating, z, 0.0, TAU, opts)?;
    let p: Vec<Complex64> = traj.t.iter().zip(&traj.y).map(|(&t, &zz)| sys.p_from_z(zz, t)).collect();
    let center = trapezoid_average(&traj.t, &p);
    let floquet = floquet_at(sys, z, opts)?;
    Ok(PeriodicOrbit {
        z,
        t: traj.t,
        p,
        floquet,
        center,
        newton_iterations: iterations,
        residual,
    })
}
