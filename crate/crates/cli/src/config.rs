//! TOML run configuration shared by every subcommand.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use spiral_anchor::center_bundle::CenterBundleSystem;
use spiral_anchor::continuation::ContinuationOptions;
use spiral_anchor::planar_map::{Envelope, FamilyCoefficients, GeneralParts, MapSpec, PlanarField, Window};
use spiral_anchor::rd_sim::{Grid, ModelSpec, Preset, RunOptions, Scheme, SweepOptions, SweepPath};

use crate::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<MapConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levelset: Option<LevelsetConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub continuation: Option<ContinuationConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center_bundle: Option<CenterBundleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<RunConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

/// Either the catalogue family (ξ plus coefficients `a_ij … d_ij`) or explicit fields.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    pub xi: [f64; 2],
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub coefficients: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f0_envelope: Option<Envelope>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_envelope: Option<Envelope>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f0: Option<PlanarField>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_xi: Option<PlanarField>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub general: Option<GeneralParts>,
}

impl MapConfig {
    pub fn build(&self) -> Result<MapSpec, CliError> {
        let spec = match (&self.f0, &self.g_xi) {
            (Some(f0), Some(g)) => {
                if !self.coefficients.is_empty() {
                    return Err(CliError::Config("map: give either coefficients or f0/g_xi, not both".into()));
                }
                MapSpec::new(self.xi, f0.clone(), g.clone())
            }
            (None, None) => FamilyCoefficients {
                xi: self.xi,
                coefficients: self.coefficients.clone(),
                f0_envelope: self.f0_envelope,
                g_envelope: self.g_envelope,
            }
            .build(),
            _ => return Err(CliError::Config("map: f0 and g_xi must be given together".into())),
        }
        .map_err(|e| CliError::Config(format!("map: {e}")))?;
        match &self.general {
            Some(g) => spec
                .with_general(g.clone())
                .map_err(|e| CliError::Config(format!("map.general: {e}"))),
            None => Ok(spec),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelsetConfig {
    /// Half-width of a square window around the origin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<Window>,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
}

fn default_resolution() -> usize {
    400
}

impl LevelsetConfig {
    pub fn window(&self, spec: &MapSpec) -> Window {
        match (self.window, self.half_width) {
            (Some(w), _) => w,
            (None, Some(h)) => Window::square(h),
            (None, None) => Window::auto(spec),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuationConfig {
    pub rho: f64,
    /// Use the λ-dependent corrections of the map.
    #[serde(default)]
    pub general: bool,
    /// Radius of the guaranteed regime; larger `rho` only warns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_star: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_init: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub escape_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
}

impl ContinuationConfig {
    pub fn options(&self) -> ContinuationOptions {
        let d = ContinuationOptions::default();
        ContinuationOptions {
            step_init: self.step_init.unwrap_or(d.step_init),
            step_min: self.step_min.unwrap_or(d.step_min),
            step_max: self.step_max.unwrap_or(d.step_max),
            escape_radius: self.escape_radius.or(d.escape_radius),
            max_steps: self.max_steps.unwrap_or(d.max_steps),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CenterBundleConfig {
    pub system: CenterBundleSystem,
    /// Newton start in the co-rotating frame.
    #[serde(default)]
    pub guess: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

/// Overrides of the preset run options.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<Scheme>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tip_every: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transient_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tip_levels: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stimulus: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mirrored: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_every: Option<usize>,
}

impl RunConfig {
    pub fn options(&self, preset: Preset, model: &ModelSpec) -> RunOptions {
        let d = RunOptions::preset(preset, model);
        RunOptions {
            grid: Grid {
                n: self.n.unwrap_or(d.grid.n),
                l: self.l.unwrap_or(d.grid.l),
            },
            scheme: self.scheme.unwrap_or(d.scheme),
            dt: self.dt.unwrap_or(d.dt),
            duration: self.duration.unwrap_or(d.duration),
            tip_every: self.tip_every.unwrap_or(d.tip_every),
            transient_fraction: self.transient_fraction.unwrap_or(d.transient_fraction),
            tip_levels: self.tip_levels.or(d.tip_levels),
            stimulus: self.stimulus.unwrap_or(d.stimulus),
            mirrored: self.mirrored.unwrap_or(d.mirrored),
            frame_every: self.frame_every.or(d.frame_every),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub path: SweepPath,
    pub spin_up: f64,
    pub per_step: f64,
    #[serde(default = "yes")]
    pub reverse: bool,
    #[serde(default = "one")]
    pub jump_tol: f64,
    #[serde(default = "one")]
    pub disagreement_tol: f64,
}

fn yes() -> bool {
    true
}

fn one() -> f64 {
    1.0
}

impl SweepConfig {
    pub fn options(&self, run: RunOptions) -> SweepOptions {
        SweepOptions {
            run,
            spin_up: self.spin_up,
            per_step: self.per_step,
            reverse: self.reverse,
            jump_tol: self.jump_tol,
            disagreement_tol: self.disagreement_tol,
        }
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Canonical TOML form; parses back to an identical value.
    pub fn echo(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(format!("cannot serialise config: {e}")))
    }

    /// SHA-256 of the canonical form together with the run context.
    pub fn digest(&self, context: &str) -> Result<String, CliError> {
        let mut h = Sha256::new();
        h.update(context.as_bytes());
        h.update([0u8]);
        h.update(self.echo()?.as_bytes());
        Ok(hex::encode(h.finalize()))
    }

    pub fn require<'a, T>(section: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
        section
            .as_ref()
            .ok_or_else(|| CliError::Config(format!("missing [{name}] section")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_map_round_trips() {
        let text = r#"
[map]
xi = [2.0, 2.0]
[map.coefficients]
a11 = 1.0
a02 = -1.0
[continuation]
rho = 0.01
"#;
        let c = Config::parse(text).unwrap();
        assert_eq!(Config::parse(&c.echo().unwrap()).unwrap(), c);
        assert_eq!(c.map.unwrap().coefficients["a02"], -1.0);
    }

    #[test]
    fn unknown_keys_name_the_path() {
        let err = Config::parse("[continuation]\nrho = 0.01\nrhoo = 2\n").unwrap_err();
        assert!(err.to_string().contains("rhoo"), "{err}");
        let err = Config::parse("[map]\nxi = [1.0, \"a\"]\n").unwrap_err();
        assert!(err.to_string().contains("xi = [1.0"), "{err}");
    }

    #[test]
    fn digest_depends_on_context_and_content() {
        let a = Config::parse("[continuation]\nrho = 0.01\n").unwrap();
        let b = Config::parse("[continuation]\nrho = 0.02\n").unwrap();
        assert_ne!(a.digest("continue").unwrap(), b.digest("continue").unwrap());
        assert_ne!(a.digest("continue").unwrap(), a.digest("levelset").unwrap());
        assert_eq!(a.digest("x").unwrap(), a.digest("x").unwrap());
    }
}
