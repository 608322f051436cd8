//! Pure-noise objective: the episode is a single step whose progress reward
//! is a standard-normal draw, independent of the policy. Calibrates the
//! noise floor of the rank-displacement metric.

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use super::{Environment, StepResult};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct NoiseOnly {
    active: bool,
}

impl NoiseOnly {
    pub fn new() -> Self {
        NoiseOnly { active: false }
    }
}

impl Environment for NoiseOnly {
    fn obs_dim(&self) -> usize {
        1
    }

    fn action_dim(&self) -> usize {
        1
    }

    fn max_steps(&self) -> usize {
        1
    }

    fn reset(&mut self, _sigma_init: f64, _rng: &mut dyn RngCore) -> Vec<f64> {
        self.active = true;
        vec![0.0]
    }

    fn step(
        &mut self,
        _action: &[f64],
        _sigma_act: f64,
        rng: &mut dyn RngCore,
    ) -> Result<StepResult> {
        if !self.active {
            return Err(Error::Protocol(
                "noise_only stepped outside an active episode".into(),
            ));
        }
        self.active = false;
        Ok(StepResult {
            observation: vec![0.0],
            progress_reward: StandardNormal.sample(rng),
            alive_bonus: 1.0,
            done: true,
            step_index: 0,
        })
    }
}
