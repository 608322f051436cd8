//! Deterministic quadratic objective over the raw genotype:
//! `fitness(θ) = −‖θ − θ*‖²`, with no episodes. Serves as the exact test
//! bed for the optimizer.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

use super::{Environment, StepResult};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct StaticFunction {
    target: Vec<f64>,
}

impl StaticFunction {
    pub fn new(target: Vec<f64>) -> Self {
        assert!(!target.is_empty());
        StaticFunction { target }
    }

    /// Draws the target uniformly from [−0.5, 0.5]^dim.
    pub fn from_seed(dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        StaticFunction::new((0..dim).map(|_| rng.random_range(-0.5..=0.5)).collect())
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }
}

impl Environment for StaticFunction {
    fn obs_dim(&self) -> usize {
        0
    }

    fn action_dim(&self) -> usize {
        0
    }

    fn max_steps(&self) -> usize {
        1
    }

    fn reset(&mut self, _sigma_init: f64, _rng: &mut dyn RngCore) -> Vec<f64> {
        Vec::new()
    }

    fn step(
        &mut self,
        _action: &[f64],
        _sigma_act: f64,
        _rng: &mut dyn RngCore,
    ) -> Result<StepResult> {
        Err(Error::Protocol(
            "static_function has no episodes; evaluate the genotype directly".into(),
        ))
    }

    fn genotype_fitness(&self, genotype: &[f64]) -> Option<f64> {
        assert_eq!(
            genotype.len(),
            self.target.len(),
            "genotype length does not match the objective dimension"
        );
        Some(
            -genotype
                .iter()
                .zip(&self.target)
                .map(|(p, t)| (p - t) * (p - t))
                .sum::<f64>(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maximum_at_the_target() {
        let env = StaticFunction::new(vec![0.2, -0.3]);
        assert_eq!(env.genotype_fitness(&[0.2, -0.3]), Some(0.0));
        assert!(env.genotype_fitness(&[0.0, 0.0]).unwrap() < 0.0);
    }

    #[test]
    fn seeded_target_is_reproducible_and_bounded() {
        let a = StaticFunction::from_seed(20, 9);
        let b = StaticFunction::from_seed(20, 9);
        assert_eq!(a.target(), b.target());
        assert!(a.target().iter().all(|t| t.abs() <= 0.5));
    }

    #[test]
    fn stepping_is_a_protocol_violation() {
        use rand::SeedableRng;
        let mut env = StaticFunction::new(vec![0.0]);
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(0);
        assert!(env.step(&[], 0.0, &mut rng).is_err());
    }
}
