//! First-order mover: velocity relaxes toward the commanded action, and the
//! per-step velocity is the progress reward. No fall condition; the optimum
//! is to saturate the action at 1, driving the per-step reward toward 1.
//! Used as a cheap convergence sanity check for the optimizer.

use rand::RngCore;

use super::{perturbed_action, perturbed_init, Environment, StepResult};
use crate::error::{Error, Result};



#[derive(Debug, Clone)]
pub struct LinearMover {
    max_steps: usize,
    x: f64,
    v: f64,
    step_index: usize,
    active: bool,
}

impl LinearMover {
    pub const DEFAULT_MAX_STEPS: usize = 200;

    pub fn new(max_steps: usize) -> Self {
        assert!(max_steps >= 1);
        LinearMover {
            max_steps,
            x: 0.0,
            v: 0.0,
            step_index: 0,
            active: false,
        }
    }
}

impl Environment for LinearMover {
    fn obs_dim(&self) -> usize {
        1
    }

    fn action_dim(&self) -> usize {
        1
    }

    fn max_steps(&self) -> usize {
        self.max_steps
    }

    fn reset(&mut self, sigma_init: f64, rng: &mut dyn RngCore) -> Vec<f64> {
        self.x = 0.0;
        self.v = perturbed_init(0.0, sigma_init, rng);
        self.step_index = 0;
        self.active = true;
        vec![self.v]
    }

    fn step(
        &mut self,
        action: &[f64],
        sigma_act: f64,
        rng: &mut dyn RngCore,
    ) -> Result<StepResult> {
        if !self.active {
            return Err(Error::Protocol(
                "linear_mover stepped outside an active episode".into(),
            ));
        }
        if action.len() != 1 {
            return Err(Error::invalid(format!(
                "linear_mover takes 1 action component, got {}",
                action.len()
            )));
        }
        let a_eff = perturbed_action(action, sigma_act, rng)?[0];
        self.v = 0.9 * self.v + 0.1 * a_eff;
        self.x += self.v;

        let step_index = self.step_index;
        self.step_index += 1;
        let done = self.step_index >= self.max_steps;
        if done {
            self.active = false;
        }
        Ok(StepResult {
            observation: vec![self.v],
            progress_reward: self.v,
            alive_bonus: 1.0,
            done,
            step_index,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{episode_return, RewardVariant};
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn saturated_action_approaches_unit_reward() {
        let mut env = LinearMover::new(LinearMover::DEFAULT_MAX_STEPS);
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        env.reset(0.0, &mut rng);
        let mut traj = Vec::new();
        loop {
            let r = env.step(&[1.0], 0.0, &mut rng).unwrap();
            let done = r.done;
            traj.push(r);
            if done {
                break;
            }
        }
        assert_eq!(traj.len(), LinearMover::DEFAULT_MAX_STEPS);
        let total = episode_return(&traj, RewardVariant::V5);
        assert!(total > 185.0 && total < 200.0, "total {total}");
        assert!((traj.last().unwrap().progress_reward - 1.0).abs() < 1e-6);
        // never falls, so the bonus variant adds exactly one per step
        let with_bonus = episode_return(&traj, RewardVariant::V0);
        assert!((with_bonus - total - 200.0).abs() < 1e-9);
    }

    #[test]
    fn velocity_is_the_perturbable_component() {
        let mut env = LinearMover::new(10);
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let obs = env.reset(0.5, &mut rng);
        assert_ne!(obs[0], 0.0);
        let obs = env.reset(0.0, &mut rng);
        assert_eq!(obs[0], 0.0);
    }
}
