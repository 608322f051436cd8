//! Run and sweep configuration files.
//!
//! Configs are TOML with a strict schema: unknown keys are errors, so typos
//! in sweep grids fail loudly instead of silently running the wrong
//! condition. A persisted copy of a config reproduces its run bit-exactly.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::envs::{self, EnvKind, RewardVariant};
use crate::error::{Error, Result};
use crate::es::EsConfig;
use crate::variation::{ActionModality, VariationPlan};

/// Complete, serializable description of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub master_seed: u64,
    #[serde(default = "default_replications")]
    pub replications: usize,
    /// Where run artifacts go; sweeps assign this per condition.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub env: EnvConfig,
    #[serde(default)]
    pub policy: PolicyConfig,
    #[serde(default)]
    pub es: EsConfig,
    pub variation: VariationConfig,
}

fn default_replications() -> usize {
    10
}

/// Environment selection and its difficulty knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    pub id: EnvId,
    #[serde(default = "default_reward")]
    pub reward: RewardVariant,
    /// Fall threshold in radians (cart_walker only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
    /// Genotype dimension (static_function only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
}

fn default_reward() -> RewardVariant {
    RewardVariant::V5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvId {
    LinearMover,
    CartWalker,
    NoiseOnly,
    StaticFunction,
}

impl EnvConfig {
    pub fn kind(&self) -> Result<EnvKind> {
        let reject = |field: &str| {
            Err(Error::Config(format!(
                "env field `{field}` does not apply to {:?}",
                self.id
            )))
        };
        match self.id {
            EnvId::LinearMover => {
                if self.theta_max.is_some() {
                    return reject("theta_max");
                }
                if self.dim.is_some() {
                    return reject("dim");
                }
                Ok(EnvKind::LinearMover {
                    max_steps: self.max_steps.unwrap_or(envs::LinearMover::DEFAULT_MAX_STEPS),
                })
            }
            EnvId::CartWalker => {
                if self.dim.is_some() {
                    return reject("dim");
                }
                let theta_max = self.theta_max.unwrap_or(envs::CartWalker::DEFAULT_THETA_MAX);
                if !(theta_max > 0.0 && theta_max < std::f64::consts::FRAC_PI_2) {
                    return Err(Error::Config(format!(
                        "theta_max must lie in (0, pi/2), got {theta_max}"
                    )));
                }
                let max_steps = self.max_steps.unwrap_or(envs::CartWalker::DEFAULT_MAX_STEPS);
                if max_steps == 0 {
                    return Err(Error::Config("max_steps must be >= 1".into()));
                }
                Ok(EnvKind::CartWalker {
                    theta_max,
                    max_steps,
                })
            }
            EnvId::NoiseOnly => {
                if self.theta_max.is_some() {
                    return reject("theta_max");
                }
                if self.dim.is_some() {
                    return reject("dim");
                }
                if self.max_steps.is_some() {
                    return reject("max_steps");
                }
                Ok(EnvKind::NoiseOnly)
            }
            EnvId::StaticFunction => {
                if self.theta_max.is_some() {
                    return reject("theta_max");
                }
                if self.max_steps.is_some() {
                    return reject("max_steps");
                }
                let dim = self
                    .dim
                    .ok_or_else(|| Error::Config("static_function requires `dim`".into()))?;
                if dim == 0 {
                    return Err(Error::Config("dim must be positive".into()));
                }
                Ok(EnvKind::StaticFunction { dim })
            }
        }
    }
}

/// Controller shape and reference-batch size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolicyConfig {
    pub hidden_dim: usize,
    pub normalizer_episodes: usize,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            hidden_dim: 50,
            normalizer_episodes: 10,
        }
    }
}

/// Flat on-disk form of the variation plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariationConfig {
    pub sigma_init: f64,
    pub action_modality: ModalityId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_act: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_act_max: Option<f64>,
    /// Across-generations ramp length; defaults to the planned generation
    /// count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ramp_generations: Option<usize>,
    #[serde(default = "default_episodes")]
    pub episodes_per_eval: usize,
    /// Distribution family of all perturbations; recorded explicitly so
    /// future families stay config-visible. Only "gaussian" is implemented.
    #[serde(default = "default_family")]
    pub perturbation_family: String,
}

fn default_episodes() -> usize {
    1
}

fn default_family() -> String {
    "gaussian".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModalityId {
    Fixed,
    Incremental1,
    Incremental2,
}

impl VariationConfig {
    /// Resolves and validates the plan; `generations` supplies the default
    /// across-generations ramp length.
    pub fn plan(&self, generations: usize) -> Result<VariationPlan> {
        if self.perturbation_family != "gaussian" {
            return Err(Error::Config(format!(
                "unsupported perturbation_family `{}` (only \"gaussian\")",
                self.perturbation_family
            )));
        }
        let require_absent = |value: Option<f64>, field: &str| -> Result<()> {
            if value.is_some() {
                return Err(Error::Config(format!(
                    "`{field}` does not apply to the {:?} modality",
                    self.action_modality
                )));
            }
            Ok(())
        };
        let modality = match self.action_modality {
            ModalityId::Fixed => {
                require_absent(self.sigma_act_max, "sigma_act_max")?;
                if self.ramp_generations.is_some() {
                    return Err(Error::Config(
                        "`ramp_generations` does not apply to the Fixed modality".into(),
                    ));
                }
                let sigma_act = self
                    .sigma_act
                    .ok_or_else(|| Error::Config("fixed modality requires `sigma_act`".into()))?;
                ActionModality::Fixed { sigma_act }
            }
            ModalityId::Incremental1 => {
                require_absent(self.sigma_act, "sigma_act")?;
                if self.ramp_generations.is_some() {
                    return Err(Error::Config(
                        "`ramp_generations` does not apply to the Incremental1 modality".into(),
                    ));
                }
                let sigma_act_max = self.sigma_act_max.ok_or_else(|| {
                    Error::Config("incremental1 modality requires `sigma_act_max`".into())
                })?;
                ActionModality::Incremental1 { sigma_act_max }
            }
            ModalityId::Incremental2 => {
                require_absent(self.sigma_act, "sigma_act")?;
                let sigma_act_max = self.sigma_act_max.ok_or_else(|| {
                    Error::Config("incremental2 modality requires `sigma_act_max`".into())
                })?;
                ActionModality::Incremental2 {
                    sigma_act_max,
                    ramp_generations: self.ramp_generations.unwrap_or(generations),
                }
            }
        };
        let plan = VariationPlan {
            sigma_init: self.sigma_init,
            modality,
            episodes_per_eval: self.episodes_per_eval,
        };
        plan.validate()?;
        Ok(plan)
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path).map_err(|_| Error::NotFound(path.to_path_buf()))?;
        let config: RunConfig = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text =
            toml::to_string_pretty(self).map_err(|e| Error::Config(format!("serialize: {e}")))?;
        fs::write(path, text)?;
        Ok(())
    }

    /// Full cross-field validation; every load goes through this.
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Config("replications must be positive".into()));
        }
        if self.policy.hidden_dim == 0 {
            return Err(Error::Config("policy.hidden_dim must be positive".into()));
        }
        if self.policy.normalizer_episodes == 0 {
            return Err(Error::Config(
                "policy.normalizer_episodes must be positive".into(),
            ));
        }
        self.es.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.env.kind().map(|_| ())?;
        self.variation
            .plan(self.es.generations)
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn output_dir(&self) -> Result<&Path> {
        self.output_dir
            .as_deref()
            .ok_or_else(|| Error::Config("config has no output_dir".into()))
    }
}

/// A grid of conditions run against one base configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub output_dir: PathBuf,
    pub base: RunConfig,
    #[serde(rename = "condition")]
    pub conditions: Vec<SweepCondition>,
}

/// One condition: a name plus the variation plan that replaces the base's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepCondition {
    pub name: String,
    pub variation: VariationConfig,
}

impl SweepConfig {
    pub fn load(path: &Path) -> Result<SweepConfig> {
        let text = fs::read_to_string(path).map_err(|_| Error::NotFound(path.to_path_buf()))?;
        let config: SweepConfig = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.conditions.len() < 2 {
            return Err(Error::Config("a sweep needs at least 2 conditions".into()));
        }
        let mut names = std::collections::HashSet::new();
        for c in &self.conditions {
            if c.name.is_empty() || !c.name.chars().all(|ch| ch.is_alphanumeric() || ch == '_' || ch == '-' || ch == '.') {
                return Err(Error::Config(format!(
                    "condition name `{}` must be non-empty and filesystem-safe",
                    c.name
                )));
            }
            if !names.insert(&c.name) {
                return Err(Error::Config(format!("duplicate condition `{}`", c.name)));
            }
            c.variation
                .plan(self.base.es.generations)
                .map_err(|e| Error::Config(format!("condition `{}`: {e}", c.name)))?;
        }
        // base validation with the output_dir requirement waived
        let mut base = self.base.clone();
        base.output_dir = Some(PathBuf::from("."));
        base.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        master_seed = 7
        replications = 2
        output_dir = "out"

        [env]
        id = "cart_walker"
        reward = "v0"

        [es]
        generations = 5

        [variation]
        sigma_init = 0.1
        action_modality = "fixed"
        sigma_act = 0.01
    "#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let c: RunConfig = toml::from_str(MINIMAL).unwrap();
        c.validate().unwrap();
        assert_eq!(c.es.population_size, 40);
        assert_eq!(c.es.noise_std, 0.05);
        assert_eq!(c.es.weight_decay, 0.005);
        assert_eq!(c.policy.hidden_dim, 50);
        assert_eq!(c.variation.episodes_per_eval, 1);
        assert_eq!(c.variation.perturbation_family, "gaussian");
        assert!(matches!(
            c.env.kind().unwrap(),
            EnvKind::CartWalker {
                theta_max,
                max_steps: 1000
            } if theta_max == 0.7
        ));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL.replace("sigma_init = 0.1", "sigma_init = 0.1\nsgima_act2 = 3.0");
        let err = toml::from_str::<RunConfig>(&text).unwrap_err();
        assert!(err.to_string().contains("sgima_act2"), "{err}");
    }

    #[test]
    fn modality_fields_are_mutually_exclusive() {
        let text = MINIMAL.replace("sigma_act = 0.01", "sigma_act = 0.01\nsigma_act_max = 0.5");
        let c: RunConfig = toml::from_str(&text).unwrap();
        assert!(c.validate().is_err());

        let text = MINIMAL.replace(
            "action_modality = \"fixed\"\n        sigma_act = 0.01",
            "action_modality = \"incremental2\"\n        sigma_act_max = 0.55",
        );
        let c: RunConfig = toml::from_str(&text).unwrap();
        c.validate().unwrap();
        let plan = c.variation.plan(c.es.generations).unwrap();
        assert_eq!(
            plan.modality,
            ActionModality::Incremental2 {
                sigma_act_max: 0.55,
                ramp_generations: 5
            }
        );
    }

    #[test]
    fn static_function_requires_dim() {
        let text = MINIMAL.replace("id = \"cart_walker\"", "id = \"static_function\"");
        let c: RunConfig = toml::from_str(&text).unwrap();
        assert!(c.validate().is_err());
        let text = text.replace("reward = \"v0\"", "reward = \"v5\"\ndim = 20");
        let c: RunConfig = toml::from_str(&text).unwrap();
        c.validate().unwrap();
        assert_eq!(c.env.kind().unwrap(), EnvKind::StaticFunction { dim: 20 });
    }

    #[test]
    fn round_trips_through_toml() {
        let c: RunConfig = toml::from_str(MINIMAL).unwrap();
        let text = toml::to_string_pretty(&c).unwrap();
        let reloaded: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(c, reloaded);
    }

    #[test]
    fn sweep_requires_distinct_conditions() {
        let base: RunConfig = toml::from_str(MINIMAL).unwrap();
        let condition = |name: &str, sigma_act: f64| SweepCondition {
            name: name.into(),
            variation: VariationConfig {
                sigma_init: 0.1,
                action_modality: ModalityId::Fixed,
                sigma_act: Some(sigma_act),
                sigma_act_max: None,
                ramp_generations: None,
                episodes_per_eval: 1,
                perturbation_family: "gaussian".into(),
            },
        };
        let sweep = SweepConfig {
            output_dir: PathBuf::from("sweep_out"),
            base: base.clone(),
            conditions: vec![condition("a", 0.01), condition("a", 0.3)],
        };
        assert!(sweep.validate().is_err());

        let sweep = SweepConfig {
            output_dir: PathBuf::from("sweep_out"),
            base,
            conditions: vec![condition("a", 0.01), condition("b", 0.3)],
        };
        sweep.validate().unwrap();
        // and it survives the TOML round trip with nested sections
        let text = toml::to_string_pretty(&sweep).unwrap();
        let reloaded: SweepConfig = toml::from_str(&text).unwrap();
        assert_eq!(sweep, reloaded);
    }
}
