//! Desk-scale environments with explicit perturbation hooks.
//!
//! All environments sit behind one interface: `reset` places the system in
//! its canonical initial state with each perturbable component offset by an
//! independent Gaussian draw of std `sigma_init`, and `step` perturbs the
//! incoming action per component with std `sigma_act` before clamping it to
//! [−1, 1] and advancing the dynamics. Trajectories are bit-reproducible
//! given the RNG state and the noise amplitudes.

mod cart_walker;
mod linear_mover;
mod noise_only;
mod static_function;

pub use cart_walker::CartWalker;
pub use linear_mover::LinearMover;
pub use noise_only::NoiseOnly;
pub use static_function::StaticFunction;

use rand::RngCore;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeds::{self, STREAM_ENV};

/// Outcome of one environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Vec<f64>,
    /// Forward displacement earned this step.
    pub progress_reward: f64,
    /// 1.0 for every step the agent survives, 0.0 on the step it falls.
    pub alive_bonus: f64,
    pub done: bool,
    pub step_index: usize,
}

/// Which reward the episode total uses: progress only, or progress plus a
/// per-step survival bonus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardVariant {
    /// Progress-only total, suited to evolutionary search.
    V5,
    /// Progress plus 1 per surviving step, the reinforcement-learning style
    /// shaping that creates the stand-still local optimum.
    V0,
}

impl RewardVariant {
    pub fn total(&self, progress_sum: f64, alive_sum: f64) -> f64 {
        match self {
            RewardVariant::V5 => progress_sum,
            RewardVariant::V0 => progress_sum + alive_sum,
        }
    }
}

/// Episode total of a completed trajectory under a reward variant.
pub fn episode_return(trajectory: &[StepResult], variant: RewardVariant) -> f64 {
    let progress: f64 = trajectory.iter().map(|s| s.progress_reward).sum();
    let alive: f64 = trajectory.iter().map(|s| s.alive_bonus).sum();
    variant.total(progress, alive)
}

/// Common episodic interface. One instance serves one evaluation at a time;
/// create an instance per concurrent worker.
pub trait Environment: Send {
    fn obs_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    fn max_steps(&self) -> usize;

    /// Starts a new episode and returns the initial observation.
    fn reset(&mut self, sigma_init: f64, rng: &mut dyn RngCore) -> Vec<f64>;

    /// Advances one tick with the perturbed-and-clamped action.
    /// Stepping a finished or never-started episode is a protocol violation.
    fn step(&mut self, action: &[f64], sigma_act: f64, rng: &mut dyn RngCore)
        -> Result<StepResult>;

    /// Direct genotype fitness for objectives with no episodes; `None` for
    /// stepped environments.
    fn genotype_fitness(&self, _genotype: &[f64]) -> Option<f64> {
        None
    }
}

/// Resolved environment description, ready to instantiate.
#[derive(Debug, Clone, PartialEq)]
pub enum EnvKind {
    LinearMover { max_steps: usize },
    CartWalker { theta_max: f64, max_steps: usize },
    NoiseOnly,
    StaticFunction { dim: usize },
}

impl EnvKind {
    /// Instantiates the environment. The seed only matters for kinds with
    /// randomized construction (the quadratic objective draws its target
    /// from it); equal (kind, seed) always produce identical instances.
    pub fn build(&self, seed: u64) -> Box<dyn Environment> {
        match self {
            EnvKind::LinearMover { max_steps } => Box::new(LinearMover::new(*max_steps)),
            EnvKind::CartWalker {
                theta_max,
                max_steps,
            } => Box::new(CartWalker::new(*theta_max, *max_steps)),
            EnvKind::NoiseOnly => Box::new(NoiseOnly::new()),
            EnvKind::StaticFunction { dim } => Box::new(StaticFunction::from_seed(
                *dim,
                seeds::derive(seed, &[STREAM_ENV]),
            )),
        }
    }

    /// Genotype length when the objective is over the raw parameter vector.
    pub fn genotype_dim(&self) -> Option<usize> {
        match self {
            EnvKind::StaticFunction { dim } => Some(*dim),
            _ => None,
        }
    }
}

/// Gaussian-perturbs each action component with std `sigma_act`, then clamps
/// to [−1, 1].
pub(crate) fn perturbed_action(
    action: &[f64],
    sigma_act: f64,
    rng: &mut dyn RngCore,
) -> Result<Vec<f64>> {
    if let Some(bad) = action.iter().find(|a| !a.is_finite()) {
        return Err(Error::invalid(format!("non-finite action component {bad}")));
    }
    let noise = Normal::new(0.0, sigma_act)
        .map_err(|e| Error::invalid(format!("bad action noise std {sigma_act}: {e}")))?;
    Ok(action
        .iter()
        .map(|&a| (a + noise.sample(rng)).clamp(-1.0, 1.0))
        .collect())
}

/// Offsets `value` by a Gaussian draw of std `sigma`.
pub(crate) fn perturbed_init(value: f64, sigma: f64, rng: &mut dyn RngCore) -> f64 {
    // sigma = 0 is a legal degenerate Normal and keeps rng consumption uniform
    let noise = Normal::new(0.0, sigma).expect("initial-state noise std must be >= 0");
    value + noise.sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn zero_sigma_just_clamps() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let a = perturbed_action(&[0.5, -3.0, 2.0], 0.0, &mut rng).unwrap();
        assert_eq!(a, vec![0.5, -1.0, 1.0]);
    }

    #[test]
    fn action_noise_has_requested_std() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let sigma = 0.3;
        let n = 100_000;
        let mut sum = 0.0;
        let mut sq = 0.0;
        for _ in 0..n {
            // keep the pre-clamp sample observable by centering at 0
            let a = perturbed_action(&[0.0], sigma, &mut rng).unwrap()[0];
            sum += a;
            sq += a * a;
        }
        let mean = sum / n as f64;
        let std = (sq / n as f64 - mean * mean).sqrt();
        assert!(mean.abs() < 0.01, "mean {mean}");
        // clamping at ±1 barely touches a 0.3-std Gaussian
        assert!((std - sigma).abs() < 0.01, "std {std}");
    }

    #[test]
    fn non_finite_actions_are_rejected() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        assert!(perturbed_action(&[f64::NAN], 0.0, &mut rng).is_err());
    }

    #[test]
    fn reward_totals() {
        let traj = vec![
            StepResult {
                observation: vec![],
                progress_reward: 0.5,
                alive_bonus: 1.0,
                done: false,
                step_index: 0,
            },
            StepResult {
                observation: vec![],
                progress_reward: -0.2,
                alive_bonus: 0.0,
                done: true,
                step_index: 1,
            },
        ];
        assert!((episode_return(&traj, RewardVariant::V5) - 0.3).abs() < 1e-15);
        assert!((episode_return(&traj, RewardVariant::V0) - 1.3).abs() < 1e-15);
    }

    #[test]
    fn fall_at_step_ten_with_zero_progress_pays_ten() {
        let mut traj: Vec<StepResult> = (0..10)
            .map(|i| StepResult {
                observation: vec![],
                progress_reward: 0.0,
                alive_bonus: 1.0,
                done: false,
                step_index: i,
            })
            .collect();
        traj.push(StepResult {
            observation: vec![],
            progress_reward: 0.0,
            alive_bonus: 0.0,
            done: true,
            step_index: 10,
        });
        assert_eq!(episode_return(&traj, RewardVariant::V0), 10.0);
        assert_eq!(episode_return(&traj, RewardVariant::V5), 0.0);
    }
}
