//! Planar vector fields `R² → R²` built from a bivariate polynomial around a
//! base point, optionally multiplied by an isotropic Gaussian envelope.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use super::MapError;

pub type Point = Vector2<f64>;

/// A single monomial `coeff · y1^i · y2^j` with `y = x − base`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub i: u32,
    pub j: u32,
    pub coeff: f64,
}

/// Sparse bivariate polynomial.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Poly {
    pub terms: Vec<Monomial>,
}

impl Poly {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `coeff` to the monomial `(i, j)`, merging repeated exponents.
    pub fn add(&mut self, i: u32, j: u32, coeff: f64) {
        if let Some(t) = self.terms.iter_mut().find(|t| t.i == i && t.j == j) {
            t.coeff += coeff;
        } else {
            self.terms.push(Monomial { i, j, coeff });
            self.terms.sort_by_key(|t| (t.i + t.j, std::cmp::Reverse(t.i)));
        }
    }

    pub fn with(mut self, i: u32, j: u32, coeff: f64) -> Self {
        self.add(i, j, coeff);
        self
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|t| t.i + t.j).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.coeff == 0.0)
    }

    /// Value, gradient and Hessian `[p, p1, p2, p11, p12, p22]` at `y`.
    fn eval2(&self, y: [f64; 2]) -> [f64; 6] {
        let mut out = [0.0; 6];
        for t in &self.terms {
            let (i, j) = (t.i as i32, t.j as i32);
            let a = |e: i32| if e < 0 { 0.0 } else { y[0].powi(e) };
            let b = |e: i32| if e < 0 { 0.0 } else { y[1].powi(e) };
            let (fi, fj) = (i as f64, j as f64);
            out[0] += t.coeff * a(i) * b(j);
            out[1] += t.coeff * fi * a(i - 1) * b(j);
            out[2] += t.coeff * fj * a(i) * b(j - 1);
            out[3] += t.coeff * fi * (fi - 1.0) * a(i - 2) * b(j);
            out[4] += t.coeff * fi * fj * a(i - 1) * b(j - 1);
            out[5] += t.coeff * fj * (fj - 1.0) * a(i) * b(j - 2);
        }
        out
    }
}

/// `exp(rate · ‖x − center‖²)` with `rate ≤ 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub rate: f64,
    pub center: [f64; 2],
}

impl Envelope {
    /// Value, gradient and Hessian in the same layout as [`Poly::eval2`].
    fn eval2(&self, x: &Point) -> [f64; 6] {
        let d = [x[0] - self.center[0], x[1] - self.center[1]];
        let a = self.rate;
        let e = (a * (d[0] * d[0] + d[1] * d[1])).exp();
        [
            e,
            2.0 * a * d[0] * e,
            2.0 * a * d[1] * e,
            (2.0 * a + 4.0 * a * a * d[0] * d[0]) * e,
            4.0 * a * a * d[0] * d[1] * e,
            (2.0 * a + 4.0 * a * a * d[1] * d[1]) * e,
        ]
    }
}

/// Second derivatives of both components: `hess[k]` is the Hessian of component `k`.
#[derive(Clone, Copy, Debug)]
pub struct FieldHessian {
    pub hess: [Matrix2<f64>; 2],
}

/// A planar field `x ↦ (u(x − base), v(x − base)) · envelope(x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanarField {
    pub base: [f64; 2],
    pub u: Poly,
    pub v: Poly,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub envelope: Option<Envelope>,
}

impl PlanarField {
    pub fn new(base: [f64; 2], u: Poly, v: Poly) -> Self {
        Self {
            base,
            u,
            v,
            envelope: None,
        }
    }

    pub fn with_envelope(mut self, envelope: Envelope) -> Result<Self, MapError> {
        if !(envelope.rate <= 0.0) || !envelope.rate.is_finite() {
            return Err(MapError::InvalidField(format!(
                "envelope rate must be finite and <= 0, got {}",
                envelope.rate
            )));
        }
        self.envelope = Some(envelope);
        Ok(self)
    }

    pub fn zero() -> Self {
        Self::new([0.0, 0.0], Poly::new(), Poly::new())
    }

    pub fn is_zero(&self) -> bool {
        self.u.is_zero() && self.v.is_zero()
    }

    fn parts(&self, x: &Point) -> ([f64; 6], [f64; 6], Option<[f64; 6]>) {
        let y = [x[0] - self.base[0], x[1] - self.base[1]];
        (
            self.u.eval2(y),
            self.v.eval2(y),
            self.envelope.map(|e| e.eval2(x)),
        )
    }

    pub fn eval(&self, x: &Point) -> Point {
        let y = [x[0] - self.base[0], x[1] - self.base[1]];
        let scale = self.envelope.map_or(1.0, |e| e.eval2(x)[0]);
        let mut out = Vector2::zeros();
        for (k, p) in [&self.u, &self.v].into_iter().enumerate() {
            let mut s = 0.0;
            for t in &p.terms {
                s += t.coeff * y[0].powi(t.i as i32) * y[1].powi(t.j as i32);
            }
            out[k] = s * scale;
        }
        out
    }

    /// Exact Jacobian; row `k` is the gradient of component `k`.
    pub fn jacobian(&self, x: &Point) -> Matrix2<f64> {
        let (pu, pv, env) = self.parts(x);
        let rows = [product2(&pu, env.as_ref()), product2(&pv, env.as_ref())];
        Matrix2::new(rows[0][1], rows[0][2], rows[1][1], rows[1][2])
    }

    pub fn value_and_jacobian(&self, x: &Point) -> (Point, Matrix2<f64>) {
        let (pu, pv, env) = self.parts(x);
        let a = product2(&pu, env.as_ref());
        let b = product2(&pv, env.as_ref());
        (
            Vector2::new(a[0], b[0]),
            Matrix2::new(a[1], a[2], b[1], b[2]),
        )
    }

    pub fn hessian(&self, x: &Point) -> FieldHessian {
        let (pu, pv, env) = self.parts(x);
        let h = |d: [f64; 6]| Matrix2::new(d[3], d[4], d[4], d[5]);
        FieldHessian {
            hess: [
                h(product2(&pu, env.as_ref())),
                h(product2(&pv, env.as_ref())),
            ],
        }
    }
}

/// Leibniz rule for `p · e` up to second order.
fn product2(p: &[f64; 6], e: Option<&[f64; 6]>) -> [f64; 6] {
    let Some(e) = e else { return *p };
    [
        p[0] * e[0],
        p[1] * e[0] + p[0] * e[1],
        p[2] * e[0] + p[0] * e[2],
        p[3] * e[0] + 2.0 * p[1] * e[1] + p[0] * e[3],
        p[4] * e[0] + p[1] * e[2] + p[2] * e[1] + p[0] * e[4],
        p[5] * e[0] + 2.0 * p[2] * e[2] + p[0] * e[5],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample_field() -> PlanarField {
        PlanarField::new(
            [1.0, -0.5],
            Poly::new().with(0, 0, 0.3).with(1, 0, 2.0).with(1, 2, -1.5),
            Poly::new().with(0, 1, 1.0).with(3, 0, 0.25).with(2, 1, 0.7),
        )
        .with_envelope(Envelope {
            rate: -0.1,
            center: [0.5, 0.5],
        })
        .unwrap()
    }

    #[test]
    fn merges_repeated_monomials() {
        let p = Poly::new().with(1, 1, 2.0).with(1, 1, -0.5);
        assert_eq!(p.terms.len(), 1);
        assert_eq!(p.terms[0].coeff, 1.5);
    }

    #[test]
    fn rejects_growing_envelope() {
        let f = PlanarField::zero().with_envelope(Envelope {
            rate: 0.1,
            center: [0.0, 0.0],
        });
        assert!(f.is_err());
    }

    proptest! {
        #[test]
        fn jacobian_matches_central_differences(x in -3.0f64..3.0, y in -3.0f64..3.0) {
            let f = sample_field();
            let p = Vector2::new(x, y);
            let j = f.jacobian(&p);
            let h = 1e-5;
            for c in 0..2 {
                let mut e = Vector2::zeros();
                e[c] = h;
                let fd = (f.eval(&(p + e)) - f.eval(&(p - e))) / (2.0 * h);
                for r in 0..2 {
                    let scale = j[(r, c)].abs().max(1.0);
                    prop_assert!((fd[r] - j[(r, c)]).abs() <= 1e-6 * scale);
                }
            }
        }

        #[test]
        fn hessian_matches_jacobian_differences(x in -3.0f64..3.0, y in -3.0f64..3.0) {
            let f = sample_field();
            let p = Vector2::new(x, y);
            let hs = f.hessian(&p);
            let h = 1e-5;
            for c in 0..2 {
                let mut e = Vector2::zeros();
                e[c] = h;
                let fd = (f.jacobian(&(p + e)) - f.jacobian(&(p - e))) / (2.0 * h);
                for k in 0..2 {
                    for r in 0..2 {
                        let exact = hs.hess[k][(r, c)];
                        prop_assert!((fd[(k, r)] - exact).abs() <= 1e-6 * exact.abs().max(1.0));
                    }
                }
            }
        }
    }
}
