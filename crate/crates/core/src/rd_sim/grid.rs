//! Grid state, the 5-point Laplacian and explicit Runge-Kutta stepping.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{ModelSpec, Species};
use super::RdError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Heun's two-stage method.
    Rk2,
    Rk4,
}

impl Scheme {
    /// Stability interval of the scheme on the negative real axis.
    fn real_stability(self) -> f64 {
        match self {
            Scheme::Rk2 => 2.0,
            Scheme::Rk4 => 2.785,
        }
    }
}

/// `N × N` nodes on `[−L, L]²` with spacing `h = 2L/(N − 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub n: usize,
    pub l: f64,
}

impl Grid {
    pub fn new(n: usize, l: f64) -> Result<Self, RdError> {
        if n < 4 || !(l > 0.0) || !l.is_finite() {
            return Err(RdError::InvalidArgument(format!("grid needs N ≥ 4 and L > 0, got N={n}, L={l}")));
        }
        Ok(Self { n, l })
    }

    pub fn h(&self) -> f64 {
        2.0 * self.l / (self.n - 1) as f64
    }

    pub fn coord(&self, k: usize) -> f64 {
        -self.l + k as f64 * self.h()
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Samples `f(x1, x2)` with rows along `x2` and columns along `x1`.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            let y = self.coord(i);
            for j in 0..n {
                out[i * n + j] = f(self.coord(j), y);
            }
        }
        out
    }

    /// Largest stable step of `scheme` for pure diffusion with coefficient `d`.
    pub fn cfl_dt(&self, scheme: Scheme, d: f64) -> f64 {
        if d <= 0.0 {
            return f64::INFINITY;
        }
        scheme.real_stability() * self.h() * self.h() / (8.0 * d)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub grid: Grid,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub t: f64,
}

impl SimState {
    pub fn uniform(grid: Grid, u: f64, v: f64) -> Self {
        Self {
            grid,
            u: vec![u; grid.len()],
            v: vec![v; grid.len()],
            t: 0.0,
        }
    }

    /// Excited `u` on `x1 > tip_x1` and refractory `v` on `x2 < tip_x2`, over
    /// the rest state elsewhere. `mirrored` excites `x1 < tip_x1` instead,
    /// which reverses the sense of rotation.
    pub fn cross_field(grid: Grid, model: &ModelSpec, tip: [f64; 2], mirrored: bool) -> Self {
        let (ur, vr) = model.kinetics.rest_state();
        let (ue, vx) = model.kinetics.stimulus_levels();
        let u = grid.sample(|x, _| if (x > tip[0]) != mirrored { ue } else { ur });
        let v = grid.sample(|_, y| if y < tip[1] { vx } else { vr });
        Self { grid, u, v, t: 0.0 }
    }

    /// First non-finite value, as `(row, column)`.
    pub fn first_non_finite(&self) -> Option<(usize, usize)> {
        let n = self.grid.n;
        self.u
            .iter()
            .zip(&self.v)
            .position(|(a, b)| !a.is_finite() || !b.is_finite())
            .map(|k| (k / n, k % n))
    }
}

#[inline(always)]
fn neighbours(k: usize, n: usize) -> (usize, usize) {
    let lo = if k == 0 { 1 } else { k - 1 };
    let hi = if k == n - 1 { n - 2 } else { k + 1 };
    (lo, hi)
}

/// 5-point Laplacian with mirrored ghost nodes.
pub fn laplacian_5pt(field: &[f64], n: usize, h: f64) -> Vec<f64> {
    let inv = 1.0 / (h * h);
    let mut out = vec![0.0; n * n];
    out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let (im, ip) = neighbours(i, n);
        for (j, o) in row.iter_mut().enumerate() {
            let (jm, jp) = neighbours(j, n);
            let c = field[i * n + j];
            *o = (field[im * n + j] + field[ip * n + j] + field[i * n + jm] + field[i * n + jp] - 4.0 * c) * inv;
        }
    });
    out
}

/// Precomputed right-hand side of one model on one grid.
pub struct Stepper {
    pub model: ModelSpec,
    pub grid: Grid,
    pub scheme: Scheme,
    pub dt: f64,
    pu: Vec<f64>,
    pv: Vec<f64>,
    k: [Vec<f64>; 8],
    tmp: [Vec<f64>; 2],
}

impl Stepper {
    pub fn new(model: &ModelSpec, grid: Grid, scheme: Scheme, dt: f64) -> Result<Self, RdError> {
        model.validate()?;
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(RdError::InvalidArgument(format!("dt must be > 0, got {dt}")));
        }
        let bound = model
            .diffusion
            .iter()
            .map(|&d| grid.cfl_dt(scheme, d))
            .fold(f64::INFINITY, f64::min);
        if dt > bound {
            log::warn!("dt = {dt} exceeds the diffusive stability estimate {bound:.4}");
        }
        let pu = grid.sample(|x, y| model.perturbation(Species::U, x, y));
        let pv = grid.sample(|x, y| model.perturbation(Species::V, x, y));
        let z = || vec![0.0; grid.len()];
        Ok(Self {
            model: model.clone(),
            grid,
            scheme,
            dt,
            pu,
            pv,
            k: [z(), z(), z(), z(), z(), z(), z(), z()],
            tmp: [z(), z()],
        })
    }

    /// Perturbation fields `(φ_u, φ_v)` on the grid.
    pub fn perturbation_fields(&self) -> (&[f64], &[f64]) {
        (&self.pu, &self.pv)
    }

    /// Full right-hand side into `(du, dv)`.
    pub fn rhs_into(&self, u: &[f64], v: &[f64], du: &mut [f64], dv: &mut [f64]) {
        let n = self.grid.n;
        let h = self.grid.h();
        let inv = 1.0 / (h * h);
        let [du_c, dv_c] = self.model.diffusion;
        let kin = self.model.kinetics;
        let (pu, pv) = (&self.pu, &self.pv);
        du.par_chunks_mut(n)
            .zip(dv.par_chunks_mut(n))
            .enumerate()
            .for_each(|(i, (du_row, dv_row))| {
                let (im, ip) = neighbours(i, n);
                let (r, rm, rp) = (i * n, im * n, ip * n);
                for j in 0..n {
                    let (jm, jp) = neighbours(j, n);
                    let c = r + j;
                    let (uc, vc) = (u[c], v[c]);
                    let (mut fu, mut fv) = kin.reaction(uc, vc, pu[c], pv[c]);
                    if du_c != 0.0 {
                        fu += du_c * (u[rm + j] + u[rp + j] + u[r + jm] + u[r + jp] - 4.0 * uc) * inv;
                    }
                    if dv_c != 0.0 {
                        fv += dv_c * (v[rm + j] + v[rp + j] + v[r + jm] + v[r + jp] - 4.0 * vc) * inv;
                    }
                    du_row[j] = fu;
                    dv_row[j] = fv;
                }
            });
    }

    /// One step of the configured scheme.
    pub fn step(&mut self, s: &mut SimState) -> Result<(), RdError> {
        let dt = self.dt;
        let mut k = std::mem::take(&mut self.k);
        let mut tmp = std::mem::take(&mut self.tmp);
        let [k1u, k1v, k2u, k2v, k3u, k3v, k4u, k4v] = &mut k;
        let [tu, tv] = &mut tmp;
        match self.scheme {
            Scheme::Rk2 => {
                self.rhs_into(&s.u, &s.v, k1u, k1v);
                axpy_into(tu, &s.u, dt, k1u);
                axpy_into(tv, &s.v, dt, k1v);
                self.rhs_into(tu, tv, k2u, k2v);
                s.u.par_iter_mut()
                    .zip(k1u.par_iter().zip(k2u.par_iter()))
                    .for_each(|(y, (a, b))| *y += 0.5 * dt * (a + b));
                s.v.par_iter_mut()
                    .zip(k1v.par_iter().zip(k2v.par_iter()))
                    .for_each(|(y, (a, b))| *y += 0.5 * dt * (a + b));
            }
            Scheme::Rk4 => {
                self.rhs_into(&s.u, &s.v, k1u, k1v);
                axpy_into(tu, &s.u, 0.5 * dt, k1u);
                axpy_into(tv, &s.v, 0.5 * dt, k1v);
                self.rhs_into(tu, tv, k2u, k2v);
                axpy_into(tu, &s.u, 0.5 * dt, k2u);
                axpy_into(tv, &s.v, 0.5 * dt, k2v);
                self.rhs_into(tu, tv, k3u, k3v);
                axpy_into(tu, &s.u, dt, k3u);
                axpy_into(tv, &s.v, dt, k3v);
                self.rhs_into(tu, tv, k4u, k4v);
                let w = dt / 6.0;
                for (y, (a, b, c, d)) in [(&mut s.u, (&*k1u, &*k2u, &*k3u, &*k4u)), (&mut s.v, (&*k1v, &*k2v, &*k3v, &*k4v))] {
                    y.par_iter_mut().enumerate().for_each(|(i, y)| {
                        *y += w * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]);
                    });
                }
            }
        }
        self.k = k;
        self.tmp = tmp;
        s.t += dt;
        if let Some((i, j)) = s.first_non_finite() {
            return Err(RdError::BlowUp {
                t: s.t,
                x1: s.grid.coord(j),
                x2: s.grid.coord(i),
            });
        }
        Ok(())
    }

    pub fn advance(&mut self, s: &mut SimState, steps: usize) -> Result<(), RdError> {
        for _ in 0..steps {
            self.step(s)?;
        }
        Ok(())
    }
}

fn axpy_into(out: &mut [f64], y: &[f64], a: f64, x: &[f64]) {
    out.par_iter_mut()
        .zip(y.par_iter().zip(x.par_iter()))
        .for_each(|(o, (y, x))| *o = y + a * x);
}
