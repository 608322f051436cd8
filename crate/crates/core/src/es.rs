//! Mirrored-sampling evolution strategy with centered-rank shaping, Adam
//! ascent, and weight decay, instrumented with a per-generation rank
//! disagreement measurement taken from a second, selection-neutral
//! evaluation pass.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::envs::{Environment, RewardVariant};
use crate::error::{Error, Result};
use crate::metrics::{iev_from_double_eval, IevSample};
use crate::policy::{MlpSpec, ObsNormalizer, ParameterVector};
use crate::seeds::{
    derive, STREAM_CENTER_EVAL, STREAM_EVAL_PASS1, STREAM_EVAL_PASS2, STREAM_SAMPLING,
};
use crate::variation::{evaluate, EvaluationRecord, Evaluator, VariationPlan};

/// Optimizer hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EsConfig {
    /// Even population size; candidates come in mirrored pairs.
    pub population_size: usize,
    /// Std of the parameter perturbations.
    pub noise_std: f64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
    pub generations: usize,
    /// When on, every generation is evaluated a second time with
    /// independent episode seeds, used only to measure ranking
    /// disagreement, never for the update.
    pub iev_instrumentation: bool,
    /// Checkpoint every this many generations; 0 keeps only the final
    /// parameters.
    pub checkpoint_interval: usize,
}

impl Default for EsConfig {
    fn default() -> Self {
        EsConfig {
            population_size: 40,
            noise_std: 0.05,
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 0.005,
            generations: 100,
            iev_instrumentation: true,
            checkpoint_interval: 0,
        }
    }
}

impl EsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 || self.population_size % 2 != 0 {
            return Err(Error::invalid(format!(
                "population_size must be even and >= 2, got {}",
                self.population_size
            )));
        }
        for (name, v) in [
            ("noise_std", self.noise_std),
            ("learning_rate", self.learning_rate),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return Err(Error::invalid(format!(
                "weight_decay must be >= 0, got {}",
                self.weight_decay
            )));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::invalid("adam betas must lie in [0, 1)"));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::invalid("adam epsilon must be positive"));
        }
        if self.generations == 0 {
            return Err(Error::invalid("generations must be positive"));
        }
        Ok(())
    }
}

/// Adam accumulators, parameter-shaped.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamState {
    pub fn new(dim: usize) -> Self {
        AdamState {
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

/// One row of the evolution log.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationLog {
    pub generation: usize,
    /// Best candidate fitness of the selection pass.
    pub best_fitness: f64,
    /// Mean candidate fitness of the selection pass.
    pub mean_fitness: f64,
    /// Ranking disagreement between the two passes; present only with
    /// instrumentation on.
    pub iev: Option<f64>,
    pub snr: Option<f64>,
    /// Largest action-noise std any step of this generation could see.
    pub sigma_act_effective: f64,
    /// Fitness of the updated center under the same variation plan.
    pub center_eval_fitness: f64,
}

/// Draws `s / 2` standard-normal parameter perturbations and their
/// negations, ordered `[ε₁, −ε₁, ε₂, −ε₂, …]`; the elementwise sum over the
/// population is exactly zero.
pub fn sample_perturbations(
    dim: usize,
    population_size: usize,
    rng: &mut ChaCha12Rng,
) -> Result<Vec<Vec<f64>>> {
    if population_size < 2 || population_size % 2 != 0 {
        return Err(Error::invalid(format!(
            "mirrored sampling needs an even population, got {population_size}"
        )));
    }
    let mut out = Vec::with_capacity(population_size);
    for _ in 0..population_size / 2 {
        let eps: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let neg = eps.iter().map(|e| -e).collect();
        out.push(eps);
        out.push(neg);
    }
    Ok(out)
}

/// Maps fitness ranks onto the zero-sum utility grid
/// `{k / (s − 1) − 0.5 : k = 0 … s − 1}`; ties broken by index.
pub fn centered_ranks(fitness: &[f64]) -> Result<Vec<f64>> {
    let ranking = crate::metrics::rank_fitness(fitness)?;
    let s = fitness.len();
    Ok(ranking
        .positions()
        .iter()
        .map(|&r| r as f64 / (s - 1) as f64 - 0.5)
        .collect())
}

/// Score-function gradient estimate `g = (1 / (s σ)) Σ_i u_i ε_i`.
pub fn gradient_estimate(
    utilities: &[f64],
    perturbations: &[Vec<f64>],
    noise_std: f64,
) -> Result<Vec<f64>> {
    if utilities.len() != perturbations.len() {
        return Err(Error::invalid(format!(
            "{} utilities for {} perturbations",
            utilities.len(),
            perturbations.len()
        )));
    }
    let dim = perturbations.first().map_or(0, |p| p.len());
    let mut g = vec![0.0; dim];
    for (u, eps) in utilities.iter().zip(perturbations) {
        for (gj, ej) in g.iter_mut().zip(eps) {
            *gj += u * ej;
        }
    }
    let scale = 1.0 / (utilities.len() as f64 * noise_std);
    for gj in &mut g {
        *gj *= scale;
    }
    Ok(g)
}

/// Adds the decoupled decay term: `g_total = g − wd · θ` (pulls parameters
/// toward zero under ascent).
pub fn apply_weight_decay(gradient: &[f64], theta: &[f64], weight_decay: f64) -> Vec<f64> {
    gradient
        .iter()
        .zip(theta)
        .map(|(g, t)| g - weight_decay * t)
        .collect()
}

/// One bias-corrected Adam step, applied as ascent.
pub fn adam_ascend(
    theta: &[f64],
    g_total: &[f64],
    state: &AdamState,
    config: &EsConfig,
) -> (Vec<f64>, AdamState) {
    assert_eq!(theta.len(), g_total.len());
    assert_eq!(theta.len(), state.m.len());
    let t = state.t + 1;
    let mut m = state.m.clone();
    let mut v = state.v.clone();
    let bias1 = 1.0 - config.beta1.powi(t as i32);
    let bias2 = 1.0 - config.beta2.powi(t as i32);
    let mut theta_next = theta.to_vec();
    for i in 0..theta.len() {
        m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g_total[i];
        v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g_total[i] * g_total[i];
        let m_hat = m[i] / bias1;
        let v_hat = v[i] / bias2;
        theta_next[i] += config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
    }
    (theta_next, AdamState { m, v, t })
}

/// Inputs of one evolution run.
pub struct EvolveSetup<'a> {
    /// Genotype length.
    pub dim: usize,
    /// Controller shape and frozen normalizer for episodic environments.
    pub mlp: Option<(&'a MlpSpec, &'a ObsNormalizer)>,
    /// Builds one environment instance per concurrent evaluation; equal
    /// calls must produce identical instances.
    pub env_builder: &'a (dyn Fn() -> Box<dyn Environment> + Sync),
    pub variant: RewardVariant,
    pub plan: &'a VariationPlan,
    pub config: &'a EsConfig,
    /// Seed of this run; all randomness is derived from it by stream.
    pub seed: u64,
}

/// Runs the optimizer for the configured number of generations.
///
/// `on_generation` is called with each finished log row and the updated
/// center, so callers can persist logs and checkpoints incrementally; a
/// propagated error aborts the run after the rows so far have been
/// delivered. Results are bit-identical for a given seed regardless of how
/// many workers evaluate candidates.
pub fn evolve(
    setup: &EvolveSetup,
    mut on_generation: impl FnMut(&GenerationLog, &[f64]) -> Result<()>,
) -> Result<(ParameterVector, Vec<GenerationLog>)> {
    setup.config.validate()?;
    setup.plan.validate()?;
    let cfg = setup.config;
    let s = cfg.population_size;
    let dim = setup.dim;

    let mut theta = vec![0.0f64; dim];
    let mut adam = AdamState::new(dim);
    let mut logs = Vec::with_capacity(cfg.generations);

    for generation in 0..cfg.generations {
        let mut sampling_rng =
            ChaCha12Rng::seed_from_u64(derive(setup.seed, &[STREAM_SAMPLING, generation as u64]));
        let perturbations = sample_perturbations(dim, s, &mut sampling_rng)?;

        let run_pass = |stream: u64| -> Result<Vec<EvaluationRecord>> {
            (0..s)
                .into_par_iter()
                .map(|i| {
                    let candidate: Vec<f64> = theta
                        .iter()
                        .zip(&perturbations[i])
                        .map(|(t, e)| t + cfg.noise_std * e)
                        .collect();
                    let mut env = (setup.env_builder)();
                    let mut ev = Evaluator {
                        env: env.as_mut(),
                        mlp: setup.mlp,
                        variant: setup.variant,
                    };
                    let mut rng = ChaCha12Rng::seed_from_u64(derive(
                        setup.seed,
                        &[stream, generation as u64, i as u64],
                    ));
                    evaluate(&candidate, &mut ev, setup.plan, generation, &mut rng)
                })
                .collect()
        };

        let pass1 = run_pass(STREAM_EVAL_PASS1)?;
        let fitness1: Vec<f64> = pass1.iter().map(|r| r.fitness).collect();

        let sample: Option<IevSample> = if cfg.iev_instrumentation {
            let pass2 = run_pass(STREAM_EVAL_PASS2)?;
            let fitness2: Vec<f64> = pass2.iter().map(|r| r.fitness).collect();
            Some(iev_from_double_eval(&fitness1, &fitness2, generation)?)
        } else {
            None
        };

        let utilities = centered_ranks(&fitness1)?;
        let gradient = gradient_estimate(&utilities, &perturbations, cfg.noise_std)?;
        let g_total = apply_weight_decay(&gradient, &theta, cfg.weight_decay);
        let (theta_next, adam_next) = adam_ascend(&theta, &g_total, &adam, cfg);
        theta = theta_next;
        adam = adam_next;

        let mut env = (setup.env_builder)();
        let mut ev = Evaluator {
            env: env.as_mut(),
            mlp: setup.mlp,
            variant: setup.variant,
        };
        let mut center_rng = ChaCha12Rng::seed_from_u64(derive(
            setup.seed,
            &[STREAM_CENTER_EVAL, generation as u64],
        ));
        let center = evaluate(&theta, &mut ev, setup.plan, generation, &mut center_rng)?;

        let best = fitness1.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mean = fitness1.iter().sum::<f64>() / s as f64;
        let log = GenerationLog {
            generation,
            best_fitness: best,
            mean_fitness: mean,
            iev: sample.map(|x| x.iev),
            snr: sample.map(|x| x.snr),
            sigma_act_effective: setup.plan.sigma_act_ceiling(generation),
            center_eval_fitness: center.fitness,
        };
        on_generation(&log, &theta)?;
        logs.push(log);
    }

    Ok((ParameterVector::new(theta)?, logs))
}
