use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{Complex, Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use super::field::{Envelope, PlanarField, Point, Poly};
use super::MapError;

const TAU: f64 = 2.0 * PI;

/// λ-dependent parts of the general fixed-point map
/// `𝒫(x,λ) = x + 2π[λ1 ℱ0(x,λ1) + λ1 λ2 𝒥(x) + λ2 𝒢ξ(x,λ2)]` with
/// `ℱ0 = F0 + λ1·f0_correction` and `𝒢ξ = Gξ + λ2·g_correction`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralParts {
    pub f0_correction: PlanarField,
    pub g_correction: PlanarField,
    pub j: PlanarField,
}

/// A complete fixed-point map instance: offset ξ, the fields `F0`, `Gξ` and
/// optionally the corrections that make it a general map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapSpec {
    pub xi: [f64; 2],
    pub f0: PlanarField,
    pub g_xi: PlanarField,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub general: Option<GeneralParts>,
}

/// Which of the two distinguished points a quantity refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Eta {
    Origin,
    Xi,
}

impl Eta {
    /// Parameter angle of the coordinate axis on which this point is fixed.
    pub fn axis_angle(self) -> f64 {
        match self {
            Eta::Origin => 0.0,
            Eta::Xi => PI / 2.0,
        }
    }
}

impl MapSpec {
    pub fn new(xi: [f64; 2], f0: PlanarField, g_xi: PlanarField) -> Result<Self, MapError> {
        let spec = Self {
            xi,
            f0,
            g_xi,
            general: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_general(mut self, parts: GeneralParts) -> Result<Self, MapError> {
        self.general = Some(parts);
        self.validate()?;
        Ok(self)
    }

    pub fn xi_point(&self) -> Point {
        Vector2::new(self.xi[0], self.xi[1])
    }

    pub fn eta_point(&self, eta: Eta) -> Point {
        match eta {
            Eta::Origin => Vector2::zeros(),
            Eta::Xi => self.xi_point(),
        }
    }

    /// Checks the structural hypotheses: ξ ≠ 0, nonzero fields, `F0(0) = 0`,
    /// `Gξ(ξ) = 0`, and the same for the general-map corrections.
    pub fn validate(&self) -> Result<(), MapError> {
        let xi = self.xi_point();
        if xi.norm() == 0.0 || !xi.iter().all(|v| v.is_finite()) {
            return Err(MapError::InvalidSpec("xi must be finite and nonzero".into()));
        }
        if self.f0.is_zero() {
            return Err(MapError::InvalidSpec("F0 is identically zero".into()));
        }
        if self.g_xi.is_zero() {
            return Err(MapError::InvalidSpec("G_xi is identically zero".into()));
        }
        let tol = 1e-12;
        let r0 = self.f0.eval(&Vector2::zeros()).norm();
        if r0 > tol {
            return Err(MapError::InvalidSpec(format!("F0(0) = {r0:e}, expected 0")));
        }
        let rx = self.g_xi.eval(&xi).norm();
        if rx > tol {
            return Err(MapError::InvalidSpec(format!("G_xi(xi) = {rx:e}, expected 0")));
        }
        if let Some(g) = &self.general {
            let c0 = g.f0_correction.eval(&Vector2::zeros()).norm();
            let cx = g.g_correction.eval(&xi).norm();
            if c0 > tol || cx > tol {
                return Err(MapError::InvalidSpec(
                    "general-map corrections must vanish at 0 and xi respectively".into(),
                ));
            }
        }
        Ok(())
    }

    /// `P(x,λ) = x + 2π[λ1 F0(x) + λ2 Gξ(x)]`.
    pub fn eval_p(&self, x: &Point, lam: [f64; 2]) -> Point {
        x + TAU * (lam[0] * self.f0.eval(x) + lam[1] * self.g_xi.eval(x))
    }

    /// `P_ρ(x,s) = x + 2πρ[cos(s) F0(x) + sin(s) Gξ(x)]`.
    pub fn eval_p_rho(&self, x: &Point, s: f64, rho: f64) -> Point {
        x + TAU * rho * (s.cos() * self.f0.eval(x) + s.sin() * self.g_xi.eval(x))
    }

    fn general_parts(&self) -> Result<&GeneralParts, MapError> {
        self.general.as_ref().ok_or(MapError::NotGeneral)
    }

    /// `ℱ0(x, λ1)`.
    pub fn f0_general(&self, x: &Point, lam1: f64) -> Result<Point, MapError> {
        let g = self.general_parts()?;
        Ok(self.f0.eval(x) + lam1 * g.f0_correction.eval(x))
    }

    /// `𝒢ξ(x, λ2)`.
    pub fn g_general(&self, x: &Point, lam2: f64) -> Result<Point, MapError> {
        let g = self.general_parts()?;
        Ok(self.g_xi.eval(x) + lam2 * g.g_correction.eval(x))
    }

    /// `𝒫(x,λ) = x + 2π[λ1 ℱ0(x,λ1) + λ1λ2 𝒥(x,λ) + λ2 𝒢ξ(x,λ2)]`.
    pub fn eval_p_general(&self, x: &Point, lam: [f64; 2]) -> Result<Point, MapError> {
        let g = self.general_parts()?;
        let f = self.f0_general(x, lam[0])?;
        let gg = self.g_general(x, lam[1])?;
        Ok(x + TAU * (lam[0] * f + lam[0] * lam[1] * g.j.eval(x) + lam[1] * gg))
    }

    /// `A(x) = [F0(x) | Gξ(x)]`.
    pub fn matrix_a(&self, x: &Point) -> Matrix2<f64> {
        Matrix2::from_columns(&[self.f0.eval(x), self.g_xi.eval(x)])
    }

    pub fn det_a(&self, x: &Point) -> f64 {
        self.matrix_a(x).determinant()
    }

    /// `𝒜(x,λ) = [ℱ0 + (λ2/2)𝒥 | (λ1/2)𝒥 + 𝒢ξ]`, so that `𝒜(x,λ)·λ = (𝒫(x,λ) − x)/2π`.
    pub fn matrix_a_general(&self, x: &Point, lam: [f64; 2]) -> Result<Matrix2<f64>, MapError> {
        let g = self.general_parts()?;
        let j = g.j.eval(x);
        let c1 = self.f0_general(x, lam[0])? + 0.5 * lam[1] * j;
        let c2 = 0.5 * lam[0] * j + self.g_general(x, lam[1])?;
        Ok(Matrix2::from_columns(&[c1, c2]))
    }

    /// `(B, C, E)` with `B = det DF0`, `C = det DH1 + det DH2`, `E = det DGξ`.
    pub fn quad_form_bce(&self, x: &Point) -> (f64, f64, f64) {
        let df = self.f0.jacobian(x);
        let dg = self.g_xi.jacobian(x);
        bce_from_jacobians(&df, &dg)
    }

    /// `Q(x) = [[B, C/2], [C/2, E]]`; the fold condition reads `λᵀ Q(x) λ = 0`.
    pub fn quad_form_matrix(&self, x: &Point) -> Matrix2<f64> {
        let (b, c, e) = self.quad_form_bce(x);
        Matrix2::new(b, 0.5 * c, 0.5 * c, e)
    }

    /// j-fold bifurcation function `Γ_j = A²_{j,2}B − A_{j,1}A_{j,2}C + A²_{j,1}E`
    /// with `j ∈ {1, 2}`.
    pub fn fold_function_gamma(&self, j: usize, x: &Point) -> Result<f64, MapError> {
        if !(1..=2).contains(&j) {
            return Err(MapError::BadRow(j));
        }
        let a = self.matrix_a(x);
        let (b, c, e) = self.quad_form_bce(x);
        let (a1, a2) = (a[(j - 1, 0)], a[(j - 1, 1)]);
        Ok(a2 * a2 * b - a1 * a2 * c + a1 * a1 * e)
    }

    /// Every algebraic quantity at `x`, with gradients, in a single pass.
    pub fn algebra_at(&self, x: &Point) -> PointAlgebra {
        let (f, df) = self.f0.value_and_jacobian(x);
        let (g, dg) = self.g_xi.value_and_jacobian(x);
        let hf = self.f0.hessian(x);
        let hg = self.g_xi.hessian(x);
        let a = Matrix2::from_columns(&[f, g]);
        let (b, c, e) = bce_from_jacobians(&df, &dg);

        // Gradients of the entries of A: row k of df is ∇F_k.
        let grad_f = [df.row(0).transpose(), df.row(1).transpose()];
        let grad_g = [dg.row(0).transpose(), dg.row(1).transpose()];
        let grad_det = g[1] * grad_f[0] + f[0] * grad_g[1] - f[1] * grad_g[0] - g[0] * grad_f[1];

        let pair = |ga: Vector2<f64>, ha: &Matrix2<f64>, gb: Vector2<f64>, hb: &Matrix2<f64>| {
            // ∇ det D(a, b) = ∇(a_x b_y − a_y b_x)
            Vector2::from_fn(|k, _| {
                ha[(0, k)] * gb[1] + ga[0] * hb[(1, k)] - ha[(1, k)] * gb[0] - ga[1] * hb[(0, k)]
            })
        };
        let grad_b = pair(grad_f[0], &hf.hess[0], grad_f[1], &hf.hess[1]);
        let grad_e = pair(grad_g[0], &hg.hess[0], grad_g[1], &hg.hess[1]);
        let grad_c = pair(grad_f[0], &hf.hess[0], grad_g[1], &hg.hess[1])
            + pair(grad_g[0], &hg.hess[0], grad_f[1], &hf.hess[1]);

        let mut gamma = [0.0; 2];
        let mut grad_gamma = [Vector2::zeros(); 2];
        for r in 0..2 {
            let (a1, a2) = (f[r], g[r]);
            let (ga1, ga2) = (grad_f[r], grad_g[r]);
            gamma[r] = a2 * a2 * b - a1 * a2 * c + a1 * a1 * e;
            grad_gamma[r] = 2.0 * a2 * b * ga2 + a2 * a2 * grad_b
                - (a2 * c * ga1 + a1 * c * ga2 + a1 * a2 * grad_c)
                + 2.0 * a1 * e * ga1
                + a1 * a1 * grad_e;
        }
        PointAlgebra {
            a,
            det_a: a.determinant(),
            grad_det,
            b,
            c,
            e,
            gamma,
            grad_gamma,
        }
    }

    /// Verifies the axis fixed-point property, the eigenvalue side condition on
    /// sampled axis parameters, and the rotational structure of `DF0(0)`, `DGξ(ξ)`.
    pub fn check_p_conditions(&self, omega: f64) -> Result<PConditionReport, MapError> {
        if !(omega > 0.0) {
            return Err(MapError::InvalidArgument(format!("probe radius must be > 0, got {omega}")));
        }
        let mut samples = Vec::new();
        let mut p1_residual: f64 = 0.0;
        for eta in [Eta::Origin, Eta::Xi] {
            let p = self.eta_point(eta);
            for frac in [-0.99, -0.5, -0.1, 0.1, 0.5, 0.99] {
                let mag = frac * omega;
                let lam = match eta {
                    Eta::Origin => [mag, 0.0],
                    Eta::Xi => [0.0, mag],
                };
                let residual = (self.eval_p(&p, lam) - p).norm();
                p1_residual = p1_residual.max(residual);
                let jac = Matrix2::identity()
                    + TAU * (lam[0] * self.f0.jacobian(&p) + lam[1] * self.g_xi.jacobian(&p));
                let eig = eigenvalues2(&jac);
                let moduli = [eig[0].norm(), eig[1].norm()];
                let same_side = (moduli[0] < 1.0 && moduli[1] < 1.0) || (moduli[0] > 1.0 && moduli[1] > 1.0);
                samples.push(AxisSample {
                    eta,
                    lambda: mag,
                    residual,
                    moduli,
                    same_side,
                });
            }
        }
        let df0 = self.f0.jacobian(&Vector2::zeros());
        let dg = self.g_xi.jacobian(&self.xi_point());
        let p2 = |eta| samples.iter().filter(|s: &&AxisSample| s.eta == eta).all(|s| s.same_side);
        Ok(PConditionReport {
            p1_residual,
            p1_holds: p1_residual <= 1e-12,
            p2_origin: p2(Eta::Origin),
            p2_xi: p2(Eta::Xi),
            df0_at_origin: df0,
            dg_at_xi: dg,
            df0_rotational: rotational_form(&df0),
            dg_rotational: rotational_form(&dg),
            samples,
        })
    }
}

fn bce_from_jacobians(df: &Matrix2<f64>, dg: &Matrix2<f64>) -> (f64, f64, f64) {
    let b = df.determinant();
    let e = dg.determinant();
    // H1 = (F0_1, G_2), H2 = (G_1, F0_2)
    let c = (df[(0, 0)] * dg[(1, 1)] - df[(0, 1)] * dg[(1, 0)])
        + (dg[(0, 0)] * df[(1, 1)] - dg[(0, 1)] * df[(1, 0)]);
    (b, c, e)
}

/// `(a, b)` when `m = [[a, −b], [b, a]]` to within `1e-12` relative.
pub fn rotational_form(m: &Matrix2<f64>) -> Option<(f64, f64)> {
    let scale = m.abs().max().max(1.0);
    let tol = 1e-12 * scale;
    if (m[(0, 0)] - m[(1, 1)]).abs() <= tol && (m[(0, 1)] + m[(1, 0)]).abs() <= tol {
        Some((m[(0, 0)], m[(1, 0)]))
    } else {
        None
    }
}

/// Eigenvalues of a real 2×2 matrix, larger real part first.
pub fn eigenvalues2(m: &Matrix2<f64>) -> [Complex<f64>; 2] {
    let tr = m.trace();
    let det = m.determinant();
    let disc = 0.25 * tr * tr - det;
    if disc >= 0.0 {
        let r = disc.sqrt();
        // avoid cancellation in the smaller root
        let big = 0.5 * tr + r.copysign(tr);
        let small = if big != 0.0 { det / big } else { 0.5 * tr - r };
        let (a, b) = if big >= small { (big, small) } else { (small, big) };
        [Complex::new(a, 0.0), Complex::new(b, 0.0)]
    } else {
        let im = (-disc).sqrt();
        [Complex::new(0.5 * tr, im), Complex::new(0.5 * tr, -im)]
    }
}

#[derive(Clone, Debug)]
pub struct PointAlgebra {
    pub a: Matrix2<f64>,
    pub det_a: f64,
    pub grad_det: Vector2<f64>,
    pub b: f64,
    pub c: f64,
    pub e: f64,
    /// `Γ_1`, `Γ_2`.
    pub gamma: [f64; 2],
    pub grad_gamma: [Vector2<f64>; 2],
}

#[derive(Clone, Debug)]
pub struct AxisSample {
    pub eta: Eta,
    pub lambda: f64,
    pub residual: f64,
    pub moduli: [f64; 2],
    pub same_side: bool,
}

#[derive(Clone, Debug)]
pub struct PConditionReport {
    pub p1_residual: f64,
    pub p1_holds: bool,
    pub p2_origin: bool,
    pub p2_xi: bool,
    pub df0_at_origin: Matrix2<f64>,
    pub dg_at_xi: Matrix2<f64>,
    pub df0_rotational: Option<(f64, f64)>,
    pub dg_rotational: Option<(f64, f64)>,
    pub samples: Vec<AxisSample>,
}

/// Coefficients of the catalogue family
///
/// ```text
/// F0 = (2x1 − x2 + Σ a_ij x1^i x2^j,  x1 + 2x2 + Σ b_ij x1^i x2^j) · f0(x)
/// Gξ = (7 − 3x1 − x2/2 + Σ c_ij y1^i y2^j,  5 + x1/2 − 3x2 + Σ d_ij y1^i y2^j) · gξ(x)
/// ```
///
/// with `y = x − ξ`. Keys are `"a20"`, `"b11"`, `"c02"`, ...
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FamilyCoefficients {
    pub xi: [f64; 2],
    pub coefficients: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f0_envelope: Option<Envelope>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_envelope: Option<Envelope>,
}

impl FamilyCoefficients {
    pub fn build(&self) -> Result<MapSpec, MapError> {
        let xi = self.xi;
        let mut fu = Poly::new().with(1, 0, 2.0).with(0, 1, -1.0);
        let mut fv = Poly::new().with(1, 0, 1.0).with(0, 1, 2.0);
        // linear parts of Gξ re-expressed around ξ
        let mut gu = Poly::new()
            .with(0, 0, 7.0 - 3.0 * xi[0] - 0.5 * xi[1])
            .with(1, 0, -3.0)
            .with(0, 1, -0.5);
        let mut gv = Poly::new()
            .with(0, 0, 5.0 + 0.5 * xi[0] - 3.0 * xi[1])
            .with(1, 0, 0.5)
            .with(0, 1, -3.0);
        for (key, &val) in &self.coefficients {
            let (target, i, j) = parse_family_key(key)?;
            if i + j < 2 {
                return Err(MapError::InvalidSpec(format!(
                    "coefficient {key}: only terms with i+j > 1 are free"
                )));
            }
            match target {
                'a' => fu.add(i, j, val),
                'b' => fv.add(i, j, val),
                'c' => gu.add(i, j, val),
                'd' => gv.add(i, j, val),
                _ => unreachable!(),
            }
        }
        let mut f0 = PlanarField::new([0.0, 0.0], fu, fv);
        let mut g = PlanarField::new(xi, gu, gv);
        if let Some(e) = self.f0_envelope {
            f0 = f0.with_envelope(e)?;
        }
        if let Some(e) = self.g_envelope {
            g = g.with_envelope(e)?;
        }
        MapSpec::new(xi, f0, g)
    }
}

fn parse_family_key(key: &str) -> Result<(char, u32, u32), MapError> {
    let bad = || MapError::InvalidSpec(format!("bad coefficient key '{key}' (expected e.g. a20, d11)"));
    let mut chars = key.chars();
    let target = chars.next().ok_or_else(bad)?;
    if !matches!(target, 'a' | 'b' | 'c' | 'd') {
        return Err(bad());
    }
    let rest: Vec<char> = chars.collect();
    if rest.len() != 2 {
        return Err(bad());
    }
    let i = rest[0].to_digit(10).ok_or_else(bad)?;
    let j = rest[1].to_digit(10).ok_or_else(bad)?;
    Ok((target, i, j))
}

/// The EB map: `ξ = (2,2)`, `a11 = b20 = c02 = d11 = d20 = 1`, `a02 = −1`.
pub fn eb_map() -> MapSpec {
    let coefficients = [("a11", 1.0), ("b20", 1.0), ("c02", 1.0), ("d11", 1.0), ("d20", 1.0), ("a02", -1.0)]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
    FamilyCoefficients {
        xi: [2.0, 2.0],
        coefficients,
        ..Default::default()
    }
    .build()
    .expect("EB coefficients are valid")
}

/// The EB map with the λ-dependent corrections of the revisited example.
pub fn eb_map_revisited() -> MapSpec {
    let f0_correction = PlanarField::new(
        [0.0, 0.0],
        Poly::new().with(1, 0, -5.6).with(0, 1, 9.0).with(2, 0, -1.8).with(1, 1, -4.1).with(0, 2, -5.7),
        Poly::new().with(1, 0, -9.0).with(0, 1, -5.6).with(2, 0, -9.0).with(1, 1, 4.9).with(0, 2, -10.0),
    );
    let g_correction = PlanarField::new(
        [0.0, 0.0],
        Poly::new()
            .with(0, 0, 28.0)
            .with(1, 0, -26.0)
            .with(0, 1, 0.4)
            .with(2, 0, 9.5)
            .with(1, 1, -3.3)
            .with(0, 2, -0.4),
        Poly::new()
            .with(0, 0, 0.4)
            .with(1, 0, -7.6)
            .with(0, 1, -6.0)
            .with(2, 0, 5.6)
            .with(1, 1, -3.5)
            .with(0, 2, 4.6),
    );
    let j = PlanarField::new(
        [0.0, 0.0],
        Poly::new().with(0, 0, 6.7).with(1, 0, 6.4).with(0, 1, 3.6).with(2, 0, -6.6).with(1, 1, -1.0).with(0, 2, -1.6),
        Poly::new().with(0, 0, 5.9).with(1, 0, 6.2).with(0, 1, -9.2).with(2, 0, 2.5).with(1, 1, 7.9).with(0, 2, 7.3),
    );
    eb_map()
        .with_general(GeneralParts {
            f0_correction,
            g_correction,
            j,
        })
        .expect("revisited EB corrections vanish at 0 and xi")
}

/// Guaranteed-regime radius quoted for the EB map.
pub const EB_OMEGA_STAR: f64 = 12.0 / (37.0 * PI);
