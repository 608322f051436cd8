//! The experimental condition: perturbation amplitudes, the schedule that
//! drives the action-noise amplitude (constant, ramped within each episode,
//! or ramped across generations), and multi-episode evaluation.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::envs::{Environment, RewardVariant};
use crate::error::{Error, Result};
use crate::policy::{forward, MlpSpec, ObsNormalizer};

/// How the action-noise amplitude evolves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ActionModality {
    /// Constant amplitude.
    Fixed { sigma_act: f64 },
    /// Ramps linearly from 0 at the first step of every episode to the
    /// maximum at the last step.
    Incremental1 { sigma_act_max: f64 },
    /// Ramps linearly across generations, reaching the maximum at
    /// `ramp_generations` and staying there.
    Incremental2 {
        sigma_act_max: f64,
        ramp_generations: usize,
    },
}

/// One experimental condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariationPlan {
    /// Std of the Gaussian offsets applied to the perturbable initial-state
    /// components on reset.
    pub sigma_init: f64,
    pub modality: ActionModality,
    /// Episodes averaged into one fitness estimate.
    pub episodes_per_eval: usize,
}

impl VariationPlan {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_init.is_finite() && self.sigma_init >= 0.0) {
            return Err(Error::invalid(format!(
                "sigma_init must be finite and >= 0, got {}",
                self.sigma_init
            )));
        }
        let amplitude = match self.modality {
            ActionModality::Fixed { sigma_act } => sigma_act,
            ActionModality::Incremental1 { sigma_act_max } => sigma_act_max,
            ActionModality::Incremental2 {
                sigma_act_max,
                ramp_generations,
            } => {
                if ramp_generations == 0 {
                    return Err(Error::invalid("ramp_generations must be positive"));
                }
                sigma_act_max
            }
        };
        if !(amplitude.is_finite() && amplitude >= 0.0) {
            return Err(Error::invalid(format!(
                "action-noise amplitude must be finite and >= 0, got {amplitude}"
            )));
        }
        if self.episodes_per_eval == 0 {
            return Err(Error::invalid("episodes_per_eval must be positive"));
        }
        Ok(())
    }

    /// Action-noise std at step `t` of a `episode_len`-step episode in
    /// generation `g`. Monotone non-decreasing in `t` (within-episode ramp)
    /// and in `g` (across-generations ramp).
    pub fn sigma_act_at(&self, step: usize, episode_len: usize, generation: usize) -> Result<f64> {
        if step >= episode_len {
            return Err(Error::invalid(format!(
                "step {step} outside episode of length {episode_len}"
            )));
        }
        match self.modality {
            ActionModality::Fixed { sigma_act } => Ok(sigma_act),
            ActionModality::Incremental1 { sigma_act_max } => {
                if episode_len < 2 {
                    return Err(Error::invalid(
                        "within-episode ramp needs an episode of at least 2 steps",
                    ));
                }
                Ok(sigma_act_max * step as f64 / (episode_len - 1) as f64)
            }
            ActionModality::Incremental2 {
                sigma_act_max,
                ramp_generations,
            } => Ok(sigma_act_max * (generation as f64 / ramp_generations as f64).min(1.0)),
        }
    }

    /// Largest action-noise std any step of generation `g` can see; this is
    /// what the generation log records as the effective amplitude.
    pub fn sigma_act_ceiling(&self, generation: usize) -> f64 {
        match self.modality {
            ActionModality::Fixed { sigma_act } => sigma_act,
            ActionModality::Incremental1 { sigma_act_max } => sigma_act_max,
            ActionModality::Incremental2 {
                sigma_act_max,
                ramp_generations,
            } => sigma_act_max * (generation as f64 / ramp_generations as f64).min(1.0),
        }
    }
}

/// Per-candidate result of one independent evaluation pass.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationRecord {
    /// Arithmetic mean of the episode returns.
    pub fitness: f64,
    pub episode_returns: Vec<f64>,
    /// Summed progress reward per episode, kept separately so bonus-driven
    /// totals can still be compared on displacement.
    pub episode_progress: Vec<f64>,
}

/// Everything needed to turn a genotype into fitness.
pub struct Evaluator<'a> {
    pub env: &'a mut dyn Environment,
    /// Controller shape and frozen normalizer; `None` for objectives over
    /// the raw genotype.
    pub mlp: Option<(&'a MlpSpec, &'a ObsNormalizer)>,
    pub variant: RewardVariant,
}

/// Runs `episodes_per_eval` episodes and averages their returns.
///
/// Each episode draws its own RNG stream from `rng`, so a candidate's
/// evaluation is a pure function of (genotype, plan, generation, rng state).
pub fn evaluate(
    genotype: &[f64],
    ev: &mut Evaluator,
    plan: &VariationPlan,
    generation: usize,
    rng: &mut ChaCha12Rng,
) -> Result<EvaluationRecord> {
    if let Some(f) = ev.env.genotype_fitness(genotype) {
        let episode_returns = vec![f; plan.episodes_per_eval];
        return Ok(EvaluationRecord {
            fitness: f,
            episode_returns,
            episode_progress: vec![0.0; plan.episodes_per_eval],
        });
    }
    let (spec, normalizer) = ev.mlp.ok_or_else(|| {
        Error::invalid("episodic environments need a controller spec and normalizer")
    })?;

    let mut episode_returns = Vec::with_capacity(plan.episodes_per_eval);
    let mut episode_progress = Vec::with_capacity(plan.episodes_per_eval);
    for _ in 0..plan.episodes_per_eval {
        let mut ep_rng = ChaCha12Rng::seed_from_u64(rng.next_u64());
        let episode_len = ev.env.max_steps();
        let mut obs = ev.env.reset(plan.sigma_init, &mut ep_rng);
        let mut progress = 0.0;
        let mut alive = 0.0;
        for t in 0.. {
            let sigma_act = plan.sigma_act_at(t, episode_len, generation)?;
            let action = forward(spec, genotype, normalizer, &obs)?;
            let r = ev.env.step(&action, sigma_act, &mut ep_rng)?;
            progress += r.progress_reward;
            alive += r.alive_bonus;
            obs = r.observation;
            if r.done {
                break;
            }
        }
        episode_returns.push(ev.variant.total(progress, alive));
        episode_progress.push(progress);
    }
    let fitness = episode_returns.iter().sum::<f64>() / episode_returns.len() as f64;
    Ok(EvaluationRecord {
        fitness,
        episode_returns,
        episode_progress,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{CartWalker, NoiseOnly, StaticFunction};
    use rand::SeedableRng;

    fn fixed(sigma_init: f64, sigma_act: f64, episodes: usize) -> VariationPlan {
        VariationPlan {
            sigma_init,
            modality: ActionModality::Fixed { sigma_act },
            episodes_per_eval: episodes,
        }
    }

    #[test]
    fn schedule_anchors() {
        let p1 = VariationPlan {
            sigma_init: 0.0,
            modality: ActionModality::Incremental1 {
                sigma_act_max: 0.55,
            },
            episodes_per_eval: 1,
        };
        assert_eq!(p1.sigma_act_at(0, 100, 5).unwrap(), 0.0);
        assert_eq!(p1.sigma_act_at(99, 100, 5).unwrap(), 0.55);
        assert!(p1.sigma_act_at(0, 1, 0).is_err());

        let p2 = VariationPlan {
            sigma_init: 0.0,
            modality: ActionModality::Incremental2 {
                sigma_act_max: 0.55,
                ramp_generations: 100,
            },
            episodes_per_eval: 1,
        };
        assert_eq!(p2.sigma_act_at(0, 10, 50).unwrap(), 0.275);
        assert_eq!(p2.sigma_act_at(0, 10, 100).unwrap(), 0.55);
        assert_eq!(p2.sigma_act_at(0, 10, 400).unwrap(), 0.55);

        let pf = fixed(0.0, 0.3, 1);
        assert_eq!(pf.sigma_act_at(7, 10, 3).unwrap(), 0.3);
        assert_eq!(pf.sigma_act_ceiling(123), 0.3);
    }

    #[test]
    fn ramps_are_monotone() {
        let p = VariationPlan {
            sigma_init: 0.0,
            modality: ActionModality::Incremental1 { sigma_act_max: 0.4 },
            episodes_per_eval: 1,
        };
        let mut prev = -1.0;
        for t in 0..50 {
            let s = p.sigma_act_at(t, 50, 0).unwrap();
            assert!(s >= prev);
            prev = s;
        }
    }

    #[test]
    fn validation_rejects_bad_plans() {
        assert!(fixed(-0.1, 0.0, 1).validate().is_err());
        assert!(fixed(0.0, f64::NAN, 1).validate().is_err());
        assert!(fixed(0.0, 0.1, 0).validate().is_err());
        let p = VariationPlan {
            sigma_init: 0.0,
            modality: ActionModality::Incremental2 {
                sigma_act_max: 0.5,
                ramp_generations: 0,
            },
            episodes_per_eval: 1,
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn single_episode_fitness_is_the_episode_return() {
        let mut env = NoiseOnly::new();
        let mut ev = Evaluator {
            env: &mut env,
            mlp: None,
            variant: RewardVariant::V5,
        };
        // noise_only ignores the controller, but the evaluator still needs
        // one for episodic environments
        let spec = MlpSpec::new(1, 2, 1).unwrap();
        let norm = ObsNormalizer::identity(1);
        ev.mlp = Some((&spec, &norm));
        let params = vec![0.0; spec.param_count()];
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let rec = evaluate(&params, &mut ev, &fixed(0.0, 0.0, 1), 0, &mut rng).unwrap();
        assert_eq!(rec.episode_returns.len(), 1);
        assert_eq!(rec.fitness, rec.episode_returns[0]);
    }

    #[test]
    fn deterministic_env_gives_identical_fitness_for_any_episode_count() {
        let spec = MlpSpec::new(4, 8, 1).unwrap();
        let norm = ObsNormalizer::identity(4);
        let params: Vec<f64> = (0..spec.param_count()).map(|i| (i as f64 * 0.37).sin() * 0.1).collect();
        let mut results = Vec::new();
        for episodes in [1usize, 3, 10] {
            let mut env = CartWalker::new(0.7, 200);
            let mut ev = Evaluator {
                env: &mut env,
                mlp: Some((&spec, &norm)),
                variant: RewardVariant::V0,
            };
            let mut rng = ChaCha12Rng::seed_from_u64(5);
            let rec = evaluate(&params, &mut ev, &fixed(0.0, 0.0, episodes), 0, &mut rng).unwrap();
            assert!(rec
                .episode_returns
                .iter()
                .all(|r| *r == rec.episode_returns[0]));
            results.push(rec.fitness);
        }
        assert!(results.iter().all(|f| *f == results[0]));
    }

    #[test]
    fn genotype_objective_bypasses_episodes() {
        let mut env = StaticFunction::new(vec![0.5, -0.5]);
        let mut ev = Evaluator {
            env: &mut env,
            mlp: None,
            variant: RewardVariant::V5,
        };
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let rec = evaluate(&[0.5, -0.5], &mut ev, &fixed(0.0, 0.0, 3), 4, &mut rng).unwrap();
        assert_eq!(rec.fitness, 0.0);
        assert_eq!(rec.episode_returns, vec![0.0; 3]);
    }

    #[test]
    fn averaging_shrinks_estimator_variance_tenfold_on_pure_noise() {
        let spec = MlpSpec::new(1, 2, 1).unwrap();
        let norm = ObsNormalizer::identity(1);
        let params = vec![0.0; spec.param_count()];
        let var_for = |episodes: usize, salt: u64| {
            let repeats = 1000;
            let mut fs = Vec::with_capacity(repeats);
            for k in 0..repeats {
                let mut env = NoiseOnly::new();
                let mut ev = Evaluator {
                    env: &mut env,
                    mlp: Some((&spec, &norm)),
                    variant: RewardVariant::V5,
                };
                let mut rng = ChaCha12Rng::seed_from_u64(salt * 100_000 + k as u64);
                fs.push(
                    evaluate(&params, &mut ev, &fixed(0.0, 0.0, episodes), 0, &mut rng)
                        .unwrap()
                        .fitness,
                );
            }
            let mean = fs.iter().sum::<f64>() / fs.len() as f64;
            fs.iter().map(|f| (f - mean) * (f - mean)).sum::<f64>() / (fs.len() - 1) as f64
        };
        let ratio = var_for(10, 1) / var_for(1, 2);
        assert!((0.07..=0.13).contains(&ratio), "ratio {ratio}");
    }
}
