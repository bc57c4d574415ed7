//! Perturbation polynomials and the right-hand side of the center-bundle ODE.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::CenterBundleError;

/// Highest total degree accepted for a perturbation polynomial.
pub const MAX_DEGREE: u32 = 12;

/// One monomial `c · w^k · w̄^l`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyTerm {
    pub k: u32,
    pub l: u32,
    pub c: Complex64,
}

/// `H(w, w̄) = Σ c_{k,l} w^k w̄^l`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PerturbationFn {
    pub terms: Vec<PolyTerm>,
}

impl PerturbationFn {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `c w^k w̄^l`, merging with an existing term of the same exponents.
    pub fn with_term(mut self, k: u32, l: u32, c: Complex64) -> Self {
        match self.terms.iter_mut().find(|t| t.k == k && t.l == l) {
            Some(t) => t.c += c,
            None => self.terms.push(PolyTerm { k, l, c }),
        }
        self
    }

    /// `α·w`.
    pub fn linear(alpha: Complex64) -> Self {
        Self::new().with_term(1, 0, alpha)
    }

    /// `α·(w + i v)`: linear with a zero at the unperturbed rotating wave.
    pub fn linear_at_wave(alpha: Complex64, v: Complex64) -> Self {
        Self::new()
            .with_term(1, 0, alpha)
            .with_term(0, 0, alpha * Complex64::i() * v)
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|t| t.k + t.l).max().unwrap_or(0)
    }

    pub fn eval(&self, w: Complex64, wb: Complex64) -> Complex64 {
        self.terms
            .iter()
            .map(|t| t.c * w.powu(t.k) * wb.powu(t.l))
            .sum()
    }

    /// `∂H/∂w` with `w̄` held fixed.
    pub fn d1(&self, w: Complex64, wb: Complex64) -> Complex64 {
        self.terms
            .iter()
            .filter(|t| t.k > 0)
            .map(|t| t.c * t.k as f64 * w.powu(t.k - 1) * wb.powu(t.l))
            .sum()
    }

    pub fn validate(&self) -> Result<(), CenterBundleError> {
        if self.degree() > MAX_DEGREE {
            return Err(CenterBundleError::InvalidSystem(format!(
                "perturbation degree {} exceeds {MAX_DEGREE}",
                self.degree()
            )));
        }
        if self.terms.iter().any(|t| !t.c.re.is_finite() || !t.c.im.is_finite()) {
            return Err(CenterBundleError::InvalidSystem("non-finite perturbation coefficient".into()));
        }
        Ok(())
    }
}

/// `ṗ = e^{it}[v + Σ λ_j H_j((p−ξ_j)e^{−it}, conj(p−ξ_j)e^{it})]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CenterBundleSystem {
    pub v: Complex64,
    pub centers: Vec<Complex64>,
    pub perturbations: Vec<PerturbationFn>,
    pub lambda: Vec<f64>,
}

impl CenterBundleSystem {
    pub fn new(
        v: Complex64,
        centers: Vec<Complex64>,
        perturbations: Vec<PerturbationFn>,
        lambda: Vec<f64>,
    ) -> Result<Self, CenterBundleError> {
        let sys = Self {
            v,
            centers,
            perturbations,
            lambda,
        };
        sys.validate()?;
        Ok(sys)
    }

    pub fn validate(&self) -> Result<(), CenterBundleError> {
        let n = self.centers.len();
        if n == 0 {
            return Err(CenterBundleError::InvalidSystem("at least one center is required".into()));
        }
        if self.perturbations.len() != n || self.lambda.len() != n {
            return Err(CenterBundleError::InvalidSystem(format!(
                "{n} centers but {} perturbations and {} parameters",
                self.perturbations.len(),
                self.lambda.len()
            )));
        }
        for i in 0..n {
            for j in i + 1..n {
                if (self.centers[i] - self.centers[j]).norm() == 0.0 {
                    return Err(CenterBundleError::InvalidSystem(format!("centers {i} and {j} coincide")));
                }
            }
        }
        if !self.v.re.is_finite() || !self.v.im.is_finite() || self.lambda.iter().any(|l| !l.is_finite()) {
            return Err(CenterBundleError::InvalidSystem("non-finite drift or parameter".into()));
        }
        for h in &self.perturbations {
            h.validate()?;
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.centers.len()
    }

    pub fn is_unperturbed(&self) -> bool {
        self.lambda.iter().all(|&l| l == 0.0)
    }

    /// `Σ λ_j H_j((p−ξ_j)e^{−it}, conj(p−ξ_j)e^{it})`.
    fn forcing(&self, p: Complex64, rot: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for ((xi, h), &lam) in self.centers.iter().zip(&self.perturbations).zip(&self.lambda) {
            if lam == 0.0 {
                continue;
            }
            let d = p - *xi;
            acc += lam * h.eval(d * rot.conj(), d.conj() * rot);
        }
        acc
    }

    /// Right-hand side in `p`.
    pub fn evaluate_rhs(&self, p: Complex64, t: f64) -> Result<Complex64, CenterBundleError> {
        let rot = Complex64::from_polar(1.0, t);
        finite(rot * (self.v + self.forcing(p, rot)), t)
    }

    /// Right-hand side in the co-rotating frame `z = p − ξ_1 + i e^{it} v`.
    pub fn evaluate_rhs_z(&self, z: Complex64, t: f64) -> Result<Complex64, CenterBundleError> {
        let rot = Complex64::from_polar(1.0, t);
        let p = self.p_from_z(z, t);
        finite(rot * self.forcing(p, rot), t)
    }

    pub fn z_from_p(&self, p: Complex64, t: f64) -> Complex64 {
        p - self.centers[0] + Complex64::i() * Complex64::from_polar(1.0, t) * self.v
    }

    pub fn p_from_z(&self, z: Complex64, t: f64) -> Complex64 {
        z + self.centers[0] - Complex64::i() * Complex64::from_polar(1.0, t) * self.v
    }

    /// `α_j = D_1 H_j(−iv, i v̄)`.
    pub fn anchoring_coefficient(&self, j: usize) -> Result<Complex64, CenterBundleError> {
        let h = self
            .perturbations
            .get(j)
            .ok_or_else(|| CenterBundleError::InvalidArgument(format!("no perturbation {j}")))?;
        let i = Complex64::i();
        Ok(h.d1(-i * self.v, i * self.v.conj()))
    }
}

fn finite(v: Complex64, t: f64) -> Result<Complex64, CenterBundleError> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(CenterBundleError::Overflow { t })
    }
}
