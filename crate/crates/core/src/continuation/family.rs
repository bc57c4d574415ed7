//! The fixed-point equation of `P_ρ` written as `f(x, s) = 0` with
//! `P_ρ(x, s) − x = 2πρ f(x, s)`.

use std::f64::consts::TAU;

use nalgebra::{Complex, Matrix2, Vector2};

use super::ContinuationError;
use crate::planar_map::map::eigenvalues2;
use crate::planar_map::{MapSpec, Point};

/// `P_ρ` for the truncated map, or `𝒫` restricted to `‖λ‖ = ρ` when `general`.
#[derive(Clone, Copy, Debug)]
pub struct FixedPointFamily<'a> {
    pub map: &'a MapSpec,
    pub rho: f64,
    pub general: bool,
}

/// Value and first derivatives of `f` at one point.
#[derive(Clone, Copy, Debug)]
pub struct Linearization {
    pub f: Vector2<f64>,
    pub dx: Matrix2<f64>,
    pub ds: Vector2<f64>,
}

impl<'a> FixedPointFamily<'a> {
    pub fn new(map: &'a MapSpec, rho: f64, general: bool) -> Result<Self, ContinuationError> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(ContinuationError::InvalidArgument(format!("rho must be > 0, got {rho}")));
        }
        if general && map.general.is_none() {
            return Err(ContinuationError::InvalidArgument(
                "general continuation requested for a map without general parts".into(),
            ));
        }
        Ok(Self { map, rho, general })
    }

    pub fn linearize(&self, x: &Point, s: f64) -> Linearization {
        let (c, sn) = (s.cos(), s.sin());
        let (f0, df0) = self.map.f0.value_and_jacobian(x);
        let (g, dg) = self.map.g_xi.value_and_jacobian(x);
        let mut lin = Linearization {
            f: c * f0 + sn * g,
            dx: c * df0 + sn * dg,
            ds: -sn * f0 + c * g,
        };
        if self.general {
            let parts = self.map.general.as_ref().expect("checked in new");
            let r = self.rho;
            let (fc, dfc) = parts.f0_correction.value_and_jacobian(x);
            let (gc, dgc) = parts.g_correction.value_and_jacobian(x);
            let (j, dj) = parts.j.value_and_jacobian(x);
            lin.f += r * (c * c * fc + c * sn * j + sn * sn * gc);
            lin.dx += r * (c * c * dfc + c * sn * dj + sn * sn * dgc);
            lin.ds += r * (-2.0 * c * sn * fc + (c * c - sn * sn) * j + 2.0 * sn * c * gc);
        }
        lin
    }

    pub fn residual(&self, x: &Point, s: f64) -> Vector2<f64> {
        self.linearize(x, s).f
    }

    /// `‖P_ρ(x, s) − x‖`.
    pub fn p_residual(&self, x: &Point, s: f64) -> f64 {
        TAU * self.rho * self.residual(x, s).norm()
    }

    /// `D_x P_ρ(x, s)`.
    pub fn jacobian_p(&self, x: &Point, s: f64) -> Matrix2<f64> {
        Matrix2::identity() + TAU * self.rho * self.linearize(x, s).dx
    }

    /// `det(D_x P_ρ − I) / (2πρ)² = det D_x f`.
    pub fn fold_det(&self, x: &Point, s: f64) -> f64 {
        self.linearize(x, s).dx.determinant()
    }

    pub fn multipliers(&self, x: &Point, s: f64) -> [Complex<f64>; 2] {
        eigenvalues2(&self.jacobian_p(x, s))
    }

    /// Newton on `x ↦ f(x, s)` at fixed `s`.
    pub fn solve_at(&self, x0: &Point, s: f64, max_iter: usize) -> Option<Point> {
        let mut x = *x0;
        for _ in 0..max_iter {
            let lin = self.linearize(&x, s);
            let dx = lin.dx.lu().solve(&(-lin.f))?;
            x += dx;
            if !x.iter().all(|v| v.is_finite()) {
                return None;
            }
            if dx.norm() <= 1e-13 * (1.0 + x.norm()) {
                return (self.p_residual(&x, s) <= 1e-10).then_some(x);
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planar_map::{eb_map, eb_map_revisited};
    use proptest::prelude::*;

    fn check_derivatives(fam: &FixedPointFamily, x: Point, s: f64) -> Result<(), TestCaseError> {
        let lin = fam.linearize(&x, s);
        let h = 1e-6;
        for k in 0..2 {
            let mut e = Vector2::zeros();
            e[k] = h;
            let fd = (fam.residual(&(x + e), s) - fam.residual(&(x - e), s)) / (2.0 * h);
            for r in 0..2 {
                prop_assert!((fd[r] - lin.dx[(r, k)]).abs() <= 1e-6 * lin.dx[(r, k)].abs().max(1.0));
            }
        }
        let fd = (fam.residual(&x, s + h) - fam.residual(&x, s - h)) / (2.0 * h);
        for r in 0..2 {
            prop_assert!((fd[r] - lin.ds[r]).abs() <= 1e-6 * lin.ds[r].abs().max(1.0));
        }
        Ok(())
    }

    proptest! {
        #[test]
        fn truncated_derivatives(x in -4.0f64..4.0, y in -4.0f64..4.0, s in 0.0f64..6.3) {
            let m = eb_map();
            let fam = FixedPointFamily::new(&m, 0.01, false).unwrap();
            check_derivatives(&fam, Vector2::new(x, y), s)?;
        }

        #[test]
        fn general_derivatives(x in -4.0f64..4.0, y in -4.0f64..4.0, s in 0.0f64..6.3) {
            let m = eb_map_revisited();
            let fam = FixedPointFamily::new(&m, 0.05, true).unwrap();
            check_derivatives(&fam, Vector2::new(x, y), s)?;
        }

        #[test]
        fn general_matches_map(x in -4.0f64..4.0, y in -4.0f64..4.0, s in 0.0f64..6.3) {
            let m = eb_map_revisited();
            let rho = 0.02;
            let fam = FixedPointFamily::new(&m, rho, true).unwrap();
            let p = Vector2::new(x, y);
            let direct = m.eval_p_general(&p, [rho * s.cos(), rho * s.sin()]).unwrap() - p;
            let via = TAU * rho * fam.residual(&p, s);
            prop_assert!((direct - via).norm() <= 1e-12 * direct.norm().max(1.0));
        }
    }

    #[test]
    fn truncated_matches_p_rho() {
        let m = eb_map();
        let fam = FixedPointFamily::new(&m, 0.01, false).unwrap();
        let x = Vector2::new(0.3, -1.2);
        let d = m.eval_p_rho(&x, 1.1, 0.01) - x;
        assert!((d - TAU * 0.01 * fam.residual(&x, 1.1)).norm() < 1e-15);
    }

    #[test]
    fn rejects_bad_rho_and_missing_parts() {
        let m = eb_map();
        assert!(FixedPointFamily::new(&m, 0.0, false).is_err());
        assert!(FixedPointFamily::new(&m, 0.01, true).is_err());
    }

    #[test]
    fn antipodal_parameter_is_fixed() {
        let m = eb_map();
        let fam = FixedPointFamily::new(&m, 0.01, false).unwrap();
        assert!(fam.p_residual(&Vector2::zeros(), std::f64::consts::PI) < 1e-15);
    }
}
