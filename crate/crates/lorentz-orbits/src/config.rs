//! Scenario configuration: a single strict JSON document describing
//! constants, the electromagnetic model, solver settings, seeds and the
//! optional simulate / probe sections. Unknown keys are rejected, and
//! every run re-emits the fully resolved document next to its outputs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::PhysicalConstants;
use crate::fields::{
    ElectromagneticModel, GaussianForcing, KeplerModel, LienardWiechertModel, ProbeSpec,
    ZeroFieldModel,
};
use crate::orbit::{SeedSpec, SolverOptions};
use crate::error::SourceError;
use crate::sources::{ChargeSource, Harmonic, SourceEnsemble, SourceTrajectory};
use crate::vec3::Vec3;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl From<SourceError> for ConfigError {
    fn from(e: SourceError) -> Self {
        match e {
            SourceError::Superluminal { beta_max } => ConfigError::Invalid(format!(
                "superluminal source: beta_max = {beta_max}"
            )),
            other => ConfigError::Invalid(other.to_string()),
        }
    }
}

fn vec3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConstantsConfig {
    pub c: f64,
    pub eps0: f64,
    pub m: f64,
    pub q: f64,
}

impl Default for ConstantsConfig {
    fn default() -> Self {
        let k = PhysicalConstants::nondimensional();
        Self { c: k.c, eps0: k.eps0, m: k.m, q: k.q }
    }
}

impl ConstantsConfig {
    pub fn build(&self) -> Result<PhysicalConstants, ConfigError> {
        PhysicalConstants::new(self.c, self.eps0, self.m, self.q)
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub charge: f64,
    /// Defaults to the model period.
    #[serde(default)]
    pub period: Option<f64>,
    #[serde(default)]
    pub mean: [f64; 3],
    /// Fourier cosine coefficients, one [x, y, z] triple per harmonic.
    #[serde(default)]
    pub cos_coefficients: Vec<[f64; 3]>,
    #[serde(default)]
    pub sin_coefficients: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingConfig {
    pub epsilon: f64,
    #[serde(default = "default_true")]
    pub time_modulated: bool,
}

fn default_true() -> bool {
    true
}

fn default_alpha() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum ModelConfig {
    #[serde(rename = "lienard-wiechert")]
    LienardWiechert { period: f64, sources: Vec<SourceConfig> },
    #[serde(rename = "kepler")]
    Kepler {
        period: f64,
        #[serde(default = "default_alpha")]
        alpha: f64,
        #[serde(default)]
        forcing: Option<ForcingConfig>,
    },
    #[serde(rename = "builtin:zero-field")]
    ZeroField { period: f64 },
}

impl ModelConfig {
    pub fn period(&self) -> f64 {
        match self {
            ModelConfig::LienardWiechert { period, .. }
            | ModelConfig::Kepler { period, .. }
            | ModelConfig::ZeroField { period } => *period,
        }
    }

    pub fn build(
        &self,
        constants: PhysicalConstants,
    ) -> Result<Box<dyn ElectromagneticModel>, ConfigError> {
        match self {
            ModelConfig::LienardWiechert { period, sources } => {
                if sources.is_empty() {
                    return Err(ConfigError::Invalid("model needs at least one source".into()));
                }
                let mut built = Vec::with_capacity(sources.len());
                for s in sources {
                    let n = s.cos_coefficients.len().max(s.sin_coefficients.len());
                    let harmonics: Vec<Harmonic> = (0..n)
                        .map(|j| Harmonic {
                            cos: s.cos_coefficients.get(j).copied().map_or(Vec3::zero(), vec3),
                            sin: s.sin_coefficients.get(j).copied().map_or(Vec3::zero(), vec3),
                        })
                        .collect();
                    let traj = SourceTrajectory::new(
                        s.period.unwrap_or(*period),
                        vec3(s.mean),
                        harmonics,
                        constants.c,
                    )?;
                    built.push(ChargeSource::new(traj, s.charge));
                }
                let ensemble = SourceEnsemble::new(built)?;
                Ok(Box::new(LienardWiechertModel::new(ensemble, constants)))
            }
            ModelConfig::Kepler { period, alpha, forcing } => {
                let forcing_box: Option<Box<dyn crate::fields::Forcing>> =
                    forcing.as_ref().map(|f| {
                        Box::new(GaussianForcing {
                            epsilon: f.epsilon,
                            time_modulated: f.time_modulated,
                            period: *period,
                        }) as Box<dyn crate::fields::Forcing>
                    });
                let model = KeplerModel::new(*alpha, forcing_box, constants, *period)
                    .map_err(|e| ConfigError::Invalid(e.to_string()))?;
                Ok(Box::new(model))
            }
            ModelConfig::ZeroField { period } => {
                if !period.is_finite() || *period <= 0.0 {
                    return Err(ConfigError::Invalid("period must be positive".into()));
                }
                Ok(Box::new(ZeroFieldModel::new(constants, *period)))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub tol_shoot: f64,
    pub tol_colloc: f64,
    pub max_iters: usize,
    pub speed_margin: f64,
    pub lm_lambda0: f64,
    pub integrate_steps: usize,
    pub n: usize,
    pub dedup_tol_factor: f64,
    pub rng_seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let o = SolverOptions::default();
        Self {
            tol_shoot: o.tol_shoot,
            tol_colloc: o.tol_colloc,
            max_iters: o.max_iters,
            speed_margin: o.speed_margin,
            lm_lambda0: o.lm_lambda0,
            integrate_steps: o.integrate_steps,
            n: o.n,
            dedup_tol_factor: o.dedup_tol_factor,
            rng_seed: o.rng_seed,
        }
    }
}

impl SolverConfig {
    pub fn build(&self) -> SolverOptions {
        SolverOptions {
            tol_shoot: self.tol_shoot,
            tol_colloc: self.tol_colloc,
            max_iters: self.max_iters,
            speed_margin: self.speed_margin,
            lm_lambda0: self.lm_lambda0,
            integrate_steps: self.integrate_steps,
            n: self.n,
            dedup_tol_factor: self.dedup_tol_factor,
            rng_seed: self.rng_seed,
        }
    }
}

fn default_normal() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

fn default_winding() -> u32 {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SeedConfig {
    /// Loop of radius `scale` around a singular trajectory.
    Loop {
        #[serde(default)]
        source_index: usize,
        scale: f64,
        #[serde(default = "default_winding")]
        winding: u32,
        #[serde(default = "default_normal")]
        normal: [f64; 3],
        #[serde(default)]
        n: Option<usize>,
    },
    /// k-fold circular orbit of the Kepler preset.
    Kfold {
        k: u32,
        #[serde(default)]
        n: Option<usize>,
    },
    Constant {
        point: [f64; 3],
        #[serde(default)]
        n: Option<usize>,
    },
}

impl SeedConfig {
    pub fn build(&self, default_n: usize) -> SeedSpec {
        match self {
            SeedConfig::Loop { source_index, scale, winding, normal, n } => {
                SeedSpec::LoopAroundSource {
                    source_index: *source_index,
                    scale: *scale,
                    winding: *winding,
                    normal: vec3(*normal),
                    n: n.unwrap_or(default_n),
                }
            }
            SeedConfig::Kfold { k, n } => SeedSpec::KfoldCircle {
                k: *k,
                n: n.unwrap_or(default_n),
            },
            SeedConfig::Constant { point, n } => SeedSpec::Constant {
                point: vec3(*point),
                n: n.unwrap_or(default_n),
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub x0: [f64; 3],
    #[serde(default)]
    pub p0: [f64; 3],
    #[serde(default)]
    pub t0: f64,
    /// Defaults to one model period past t0.
    #[serde(default)]
    pub t_end: Option<f64>,
    #[serde(default = "default_sim_steps")]
    pub steps: usize,
}

fn default_sim_steps() -> usize {
    10_000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    #[serde(default = "default_probe_times")]
    pub times: Vec<f64>,
    pub points: Vec<[f64; 3]>,
}

fn default_probe_times() -> Vec<f64> {
    vec![0.0]
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AssumptionsConfig {
    /// Outer shell radius; defaults to half the min source separation.
    pub delta: Option<f64>,
    pub rng_seed: u64,
}

impl AssumptionsConfig {
    pub fn build(&self) -> ProbeSpec {
        ProbeSpec {
            delta: self.delta,
            rng_seed: self.rng_seed,
            ..ProbeSpec::default()
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub constants: ConstantsConfig,
    pub model: ModelConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub seeds: Vec<SeedConfig>,
    #[serde(default)]
    pub simulate: Option<SimulateConfig>,
    #[serde(default)]
    pub probe: Option<ProbeConfig>,
    #[serde(default)]
    pub assumptions: AssumptionsConfig,
    #[serde(default)]
    pub output_dir: Option<String>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn build_model(&self) -> Result<Box<dyn ElectromagneticModel>, ConfigError> {
        self.model.build(self.constants.build()?)
    }

    pub fn seed_specs(&self) -> Vec<SeedSpec> {
        self.seeds.iter().map(|s| s.build(self.solver.n)).collect()
    }

    pub fn solver_options(&self) -> SolverOptions {
        self.solver.build()
    }

    /// The document with every default materialized, for reproducibility.
    pub fn resolved_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_kepler_config_parses_with_defaults() {
        let cfg = ScenarioConfig::from_json(
            r#"{"model": {"type": "kepler", "period": 6.283185307179586}}"#,
        )
        .unwrap();
        assert_eq!(cfg.constants.m, 1.0);
        assert_eq!(cfg.solver.n, 128);
        let model = cfg.build_model().unwrap();
        assert_eq!(model.kepler_alpha(), Some(1.0));
        assert!(model.is_autonomous());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ScenarioConfig::from_json(
            r#"{"model": {"type": "kepler", "period": 1.0}, "banana": 3}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("banana"));
    }

    #[test]
    fn superluminal_source_is_a_config_error() {
        let cfg = ScenarioConfig::from_json(
            r#"{
              "constants": {"c": 1.0, "eps0": 0.07957747154594767, "m": 1.0, "q": 1.0},
              "model": {"type": "lienard-wiechert", "period": 6.283185307179586,
                        "sources": [{"charge": -1.0, "cos_coefficients": [[2.0, 0.0, 0.0]],
                                     "sin_coefficients": [[0.0, 2.0, 0.0]]}]}
            }"#,
        )
        .unwrap();
        let err = match cfg.build_model() {
            Err(e) => e,
            Ok(_) => panic!("expected a config error"),
        };
        assert!(err.to_string().contains("superluminal source"), "{err}");
    }

    #[test]
    fn lw_config_builds_an_ensemble() {
        let cfg = ScenarioConfig::from_json(
            r#"{
              "constants": {"c": 10.0, "eps0": 0.07957747154594767, "m": 1.0, "q": 1.0},
              "model": {"type": "lienard-wiechert", "period": 6.283185307179586,
                        "sources": [{"charge": -1.0, "mean": [0.0, 0.0, 0.0],
                                     "cos_coefficients": [[0.5, 0.0, 0.0]],
                                     "sin_coefficients": [[0.0, 0.5, 0.0]]}]},
              "seeds": [{"type": "loop", "scale": 0.5}]
            }"#,
        )
        .unwrap();
        let model = cfg.build_model().unwrap();
        assert_eq!(model.singular_trajectories().len(), 1);
        assert!(!model.is_autonomous());
        assert_eq!(cfg.seed_specs().len(), 1);
    }

    #[test]
    fn resolved_json_round_trips() {
        let cfg = ScenarioConfig::from_json(
            r#"{"model": {"type": "builtin:zero-field", "period": 1.0}}"#,
        )
        .unwrap();
        let resolved = cfg.resolved_json();
        let again = ScenarioConfig::from_json(&resolved).unwrap();
        assert_eq!(again.resolved_json(), resolved);
    }
}
