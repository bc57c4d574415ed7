//! Kinetics, diffusion and Gaussian perturbations of the reaction-diffusion models.

use serde::{Deserialize, Serialize};

use super::RdError;

/// Which equation a perturbation enters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Species {
    U,
    V,
}

/// Radial profile of a bell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BellShape {
    /// `exp(a r²)`, `a < 0`.
    Rate(f64),
    /// `exp(−r²/β²)`.
    Width(f64),
}

impl BellShape {
    pub fn rate(self) -> f64 {
        match self {
            BellShape::Rate(a) => a,
            BellShape::Width(b) => -1.0 / (b * b),
        }
    }
}

/// `amplitude · profile(‖x − center‖)` added to the equation of `target`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianBell {
    pub amplitude: f64,
    pub center: [f64; 2],
    pub shape: BellShape,
    pub target: Species,
}

impl GaussianBell {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let (dx, dy) = (x - self.center[0], y - self.center[1]);
        self.amplitude * (self.shape.rate() * (dx * dx + dy * dy)).exp()
    }

    pub fn validate(&self) -> Result<(), RdError> {
        let ok = match self.shape {
            BellShape::Rate(a) => a < 0.0 && a.is_finite(),
            BellShape::Width(b) => b != 0.0 && b.is_finite(),
        };
        if !ok || !self.amplitude.is_finite() || !self.center.iter().all(|c| c.is_finite()) {
            return Err(RdError::InvalidModel(format!("bell {self:?} is not bounded and decaying")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Kinetics {
    /// `u_t = (u − u³/3 − v)/ς + φ_u + D_u Δu`, `v_t = ς(u + β − γ v + φ_v) + D_v Δv`.
    Fhn { varsigma: f64, beta: f64, gamma: f64 },
    /// `u_t = (u − u² − (f v + φ_u)(u − q)/(u + q))/ς + D_u Δu`, `v_t = u − v + φ_v + D_v Δv`.
    Oregonator { f: f64, q: f64, varsigma: f64 },
}

impl Kinetics {
    pub fn validate(&self) -> Result<(), RdError> {
        let ok = match *self {
            Kinetics::Fhn { varsigma, beta, gamma } => varsigma > 0.0 && beta.is_finite() && gamma.is_finite(),
            Kinetics::Oregonator { f, q, varsigma } => varsigma > 0.0 && q > 0.0 && f.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(RdError::InvalidModel(format!("bad kinetic parameters {self:?}")))
        }
    }

    /// Reaction terms at one point, with the local perturbation values.
    #[inline(always)]
    pub fn reaction(&self, u: f64, v: f64, pu: f64, pv: f64) -> (f64, f64) {
        match *self {
            Kinetics::Fhn { varsigma, beta, gamma } => (
                (u - u * u * u / 3.0 - v) / varsigma + pu,
                varsigma * (u + beta - gamma * v + pv),
            ),
            Kinetics::Oregonator { f, q, varsigma } => (
                (u - u * u - (f * v + pu) * (u - q) / (u + q)) / varsigma,
                u - v + pv,
            ),
        }
    }

    /// Homogeneous rest state without perturbation.
    pub fn rest_state(&self) -> (f64, f64) {
        match *self {
            Kinetics::Fhn { beta, gamma, .. } => {
                // u − u³/3 − (u + β)/γ = 0
                let g = |u: f64| u - u * u * u / 3.0 - (u + beta) / gamma;
                let dg = |u: f64| 1.0 - u * u - 1.0 / gamma;
                let mut u = -1.0;
                for _ in 0..60 {
                    let d = dg(u);
                    if d == 0.0 {
                        break;
                    }
                    u -= g(u) / d;
                }
                (u, (u + beta) / gamma)
            }
            Kinetics::Oregonator { f, q, .. } => {
                // positive root of u² + (f + q − 1) u − q (1 + f) = 0, with v = u
                let b = f + q - 1.0;
                let u = 0.5 * (-b + (b * b + 4.0 * q * (1.0 + f)).sqrt());
                (u, u)
            }
        }
    }

    /// Values used for the excited and refractory regions of the initial stimulus.
    pub fn stimulus_levels(&self) -> (f64, f64) {
        match *self {
            Kinetics::Fhn { .. } => (2.0, 1.0),
            Kinetics::Oregonator { .. } => (0.8, 0.3),
        }
    }

    /// Range of `u` mapped to black and white in frames.
    pub fn display_range(&self) -> (f64, f64) {
        match self {
            Kinetics::Fhn { .. } => (-2.2, 2.2),
            Kinetics::Oregonator { .. } => (0.0, 1.0),
        }
    }

    /// Default tip levels `(iso_u, iso_v)`.
    pub fn default_tip_levels(&self) -> (f64, f64) {
        match *self {
            Kinetics::Fhn { .. } => (0.0, 0.0),
            Kinetics::Oregonator { .. } => (0.18, 0.1),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kinetics: Kinetics,
    pub diffusion: [f64; 2],
    #[serde(default)]
    pub bells: Vec<GaussianBell>,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<(), RdError> {
        self.kinetics.validate()?;
        if self.diffusion.iter().any(|d| !(*d >= 0.0) || !d.is_finite()) {
            return Err(RdError::InvalidModel(format!("diffusion {:?} must be ≥ 0", self.diffusion)));
        }
        for b in &self.bells {
            b.validate()?;
        }
        Ok(())
    }

    /// Sum of the bells targeting `species` at `(x, y)`.
    pub fn perturbation(&self, species: Species, x: f64, y: f64) -> f64 {
        self.bells.iter().filter(|b| b.target == species).map(|b| b.eval(x, y)).sum()
    }

    pub fn bell_centers(&self) -> Vec<[f64; 2]> {
        let mut out: Vec<[f64; 2]> = Vec::new();
        for b in &self.bells {
            if !out.contains(&b.center) {
                out.push(b.center);
            }
        }
        out
    }

    pub fn fhn(bells: Vec<GaussianBell>) -> Self {
        Self {
            kinetics: Kinetics::Fhn {
                varsigma: 0.3,
                beta: 0.6,
                gamma: 0.5,
            },
            diffusion: [1.0, 0.0],
            bells,
        }
    }

    /// Two-bell FitzHugh-Nagumo model with `−φ_2` in the `v` equation.
    pub fn fhn_two_bells() -> Self {
        let amp = 2f64.sqrt() * (0.05 * std::f64::consts::PI).cos() * 0.12;
        let shape = BellShape::Rate(-0.00086);
        Self::fhn(vec![
            GaussianBell {
                amplitude: amp,
                center: [9.0, 0.0],
                shape,
                target: Species::U,
            },
            GaussianBell {
                amplitude: -amp,
                center: [-10.0, 5.0 * 3f64.sqrt()],
                shape,
                target: Species::V,
            },
        ])
    }

    /// Four-bell FitzHugh-Nagumo model with `+φ_2` in the `v` equation.
    pub fn fhn_four_bells() -> Self {
        let bell = |amplitude: f64, center: [f64; 2], a: f64, target| GaussianBell {
            amplitude,
            center,
            shape: BellShape::Rate(a),
            target,
        };
        Self::fhn(vec![
            bell(0.12, [9.0, 0.0], -0.00086, Species::U),
            bell(-0.10, [-1.0, 10.0], -0.0008, Species::U),
            bell(-0.12, [-10.0, 5.0 * 3f64.sqrt()], -0.00086, Species::V),
            bell(0.08, [10.0, 10.0], -0.0009, Species::V),
        ])
    }

    /// Modified Oregonator with bells of widths `β_1, β_2` at `(15,15)` and `(18.75,15)`.
    pub fn oregonator(alpha: [f64; 2], widths: [f64; 2]) -> Self {
        Self {
            kinetics: Kinetics::Oregonator {
                f: 1.4,
                q: 0.002,
                varsigma: 0.05,
            },
            diffusion: [1.0, 0.6],
            bells: vec![
                GaussianBell {
                    amplitude: alpha[0],
                    center: [15.0, 15.0],
                    shape: BellShape::Width(widths[0]),
                    target: Species::U,
                },
                GaussianBell {
                    amplitude: alpha[1],
                    center: [18.75, 15.0],
                    shape: BellShape::Width(widths[1]),
                    target: Species::U,
                },
            ],
        }
    }
}
