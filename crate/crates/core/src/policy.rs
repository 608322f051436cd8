//! Fixed-topology feedforward controller over normalized observations.
//!
//! The controller is a 3-layer tanh network: `tanh(W2·tanh(W1·norm(o) + b1)
//! + b2)` with `norm(o) = (o − mean) / std`. The normalizer is a frozen
//! reference batch collected once per run from random rollouts, never
//! updated during evolution, so the mapping from genotype to behavior stays
//! stationary.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::envs::Environment;
use crate::error::{Error, Result};

/// Lower bound applied to every normalizer std entry.
pub const STD_FLOOR: f64 = 1e-2;

/// Shape of the controller network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub obs_dim: usize,
    pub hidden_dim: usize,
    pub action_dim: usize,
}

impl MlpSpec {
    pub fn new(obs_dim: usize, hidden_dim: usize, action_dim: usize) -> Result<Self> {
        if obs_dim == 0 || hidden_dim == 0 || action_dim == 0 {
            return Err(Error::invalid(format!(
                "network dims must be positive, got {obs_dim}/{hidden_dim}/{action_dim}"
            )));
        }
        Ok(MlpSpec {
            obs_dim,
            hidden_dim,
            action_dim,
        })
    }

    /// Flat genotype length: both weight matrices plus both bias vectors.
    pub fn param_count(&self) -> usize {
        self.obs_dim * self.hidden_dim
            + self.hidden_dim
            + self.hidden_dim * self.action_dim
            + self.action_dim
    }
}

/// Flat vector of connection weights; the genotype.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector {
    values: Vec<f64>,
}

impl ParameterVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite parameter {bad}")));
        }
        Ok(ParameterVector { values })
    }

    pub fn zeros(len: usize) -> Self {
        ParameterVector {
            values: vec![0.0; len],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Writes a little-endian u64 length header followed by the values as
    /// little-endian f64.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(&(self.values.len() as u64).to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(
            File::open(path).map_err(|_| Error::NotFound(path.to_path_buf()))?,
        );
        let mut header = [0u8; 8];
        r.read_exact(&mut header)
            .map_err(|_| Error::Format(format!("{}: truncated length header", path.display())))?;
        let n = u64::from_le_bytes(header) as usize;
        let mut values = Vec::with_capacity(n);
        let mut buf = [0u8; 8];
        for _ in 0..n {
            r.read_exact(&mut buf)
                .map_err(|_| Error::Format(format!("{}: truncated payload", path.display())))?;
            values.push(f64::from_le_bytes(buf));
        }
        ParameterVector::new(values)
    }
}

/// Frozen per-dimension observation statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObsNormalizer {
    mean: Vec<f64>,
    std: Vec<f64>,
    reference_count: usize,
}

impl ObsNormalizer {
    /// Normalizer that passes observations through unchanged.
    pub fn identity(dim: usize) -> Self {
        ObsNormalizer {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
            reference_count: 0,
        }
    }

    /// Normalizer from explicit statistics.
    pub fn from_stats(mean: Vec<f64>, std: Vec<f64>) -> Result<Self> {
        if mean.len() != std.len() {
            return Err(Error::invalid(format!(
                "mean has {} entries but std has {}",
                mean.len(),
                std.len()
            )));
        }
        if let Some(bad) = std.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::invalid(format!("std entries must be positive, got {bad}")));
        }
        if let Some(bad) = mean.iter().find(|m| !m.is_finite()) {
            return Err(Error::invalid(format!("non-finite mean entry {bad}")));
        }
        Ok(ObsNormalizer {
            mean,
            std,
            reference_count: 0,
        })
    }

    /// Population statistics of a reference batch, std floored at
    /// [`STD_FLOOR`].
    pub fn from_observations(dim: usize, observations: &[Vec<f64>]) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::invalid("empty reference batch"));
        }
        let count = observations.len() as f64;
        let mut mean = vec![0.0; dim];
        for obs in observations {
            if obs.len() != dim {
                return Err(Error::invalid("observation dimension mismatch"));
            }
            for (m, o) in mean.iter_mut().zip(obs) {
                *m += o;
            }
        }
        for m in &mut mean {
            *m /= count;
        }
        let mut var = vec![0.0; dim];
        for obs in observations {
            for ((v, o), m) in var.iter_mut().zip(obs).zip(&mean) {
                *v += (o - m) * (o - m);
            }
        }
        let std = var
            .iter()
            .map(|v| (v / count).sqrt().max(STD_FLOOR))
            .collect();
        Ok(ObsNormalizer {
            mean,
            std,
            reference_count: observations.len(),
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn std(&self) -> &[f64] {
        &self.std
    }

    pub fn reference_count(&self) -> usize {
        self.reference_count
    }

    fn normalize_component(&self, i: usize, o: f64) -> f64 {
        (o - self.mean[i]) / self.std[i]
    }
}

/// Deterministic forward pass; every output component lies strictly inside
/// (−1, 1).
pub fn forward(
    spec: &MlpSpec,
    params: &[f64],
    normalizer: &ObsNormalizer,
    obs: &[f64],
) -> Result<Vec<f64>> {
    if params.len() != spec.param_count() {
        return Err(Error::invalid(format!(
            "expected {} parameters, got {}",
            spec.param_count(),
            params.len()
        )));
    }
    if obs.len() != spec.obs_dim || normalizer.dim() != spec.obs_dim {
        return Err(Error::invalid(format!(
            "expected {} observation components, got {} (normalizer dim {})",
            spec.obs_dim,
            obs.len(),
            normalizer.dim()
        )));
    }

    // Layout: W1 (hidden x obs, row-major), b1, W2 (action x hidden), b2.
    let (w1, rest) = params.split_at(spec.obs_dim * spec.hidden_dim);
    let (b1, rest) = rest.split_at(spec.hidden_dim);
    let (w2, b2) = rest.split_at(spec.hidden_dim * spec.action_dim);

    let mut hidden = vec![0.0; spec.hidden_dim];
    for (h, (row, bias)) in hidden
        .iter_mut()
        .zip(w1.chunks_exact(spec.obs_dim).zip(b1))
    {
        let mut acc = *bias;
        for (i, (w, o)) in row.iter().zip(obs).enumerate() {
            acc += w * normalizer.normalize_component(i, *o);
        }
        *h = acc.tanh();
    }

    let mut action = vec![0.0; spec.action_dim];
    for (a, (row, bias)) in action
        .iter_mut()
        .zip(w2.chunks_exact(spec.hidden_dim).zip(b2))
    {
        let mut acc = *bias;
        for (w, h) in row.iter().zip(&hidden) {
            acc += w * h;
        }
        *a = acc.tanh();
    }
    Ok(action)
}

/// Collects every observation from `episodes` uniformly-random-action
/// rollouts and freezes the per-dimension statistics.
pub fn build_normalizer(
    env: &mut dyn Environment,
    episodes: usize,
    sigma_init: f64,
    seed: u64,
) -> Result<ObsNormalizer> {
    if episodes == 0 {
        return Err(Error::invalid("need at least one reference episode"));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut observations = Vec::new();
    for _ in 0..episodes {
        let obs = env.reset(sigma_init, &mut rng);
        observations.push(obs);
        loop {
            let action: Vec<f64> = (0..env.action_dim())
                .map(|_| rng.random_range(-1.0..=1.0))
                .collect();
            let r = env.step(&action, 0.0, &mut rng)?;
            observations.push(r.observation.clone());
            if r.done {
                break;
            }
        }
    }
    ObsNormalizer::from_observations(env.obs_dim(), &observations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{CartWalker, LinearMover, NoiseOnly};

    #[test]
    fn parameter_counts() {
        assert_eq!(MlpSpec::new(4, 50, 1).unwrap().param_count(), 301);
        assert_eq!(MlpSpec::new(1, 1, 1).unwrap().param_count(), 4);
        assert_eq!(MlpSpec::new(4, 50, 2).unwrap().param_count(), 352);
        assert!(MlpSpec::new(0, 50, 1).is_err());
    }

    #[test]
    fn zero_parameters_give_zero_actions() {
        let spec = MlpSpec::new(3, 5, 2).unwrap();
        let params = vec![0.0; spec.param_count()];
        let norm = ObsNormalizer::identity(3);
        let a = forward(&spec, &params, &norm, &[0.4, -2.0, 1.0]).unwrap();
        assert_eq!(a, vec![0.0, 0.0]);
    }

    #[test]
    fn hand_evaluated_two_layer_composition() {
        let spec = MlpSpec::new(1, 1, 1).unwrap();
        // w1 = 1, b1 = 0, w2 = 1, b2 = 0
        let params = vec![1.0, 0.0, 1.0, 0.0];
        let norm = ObsNormalizer::identity(1);
        let a = forward(&spec, &params, &norm, &[0.5]).unwrap();
        let expected = 0.5f64.tanh().tanh();
        assert!((a[0] - expected).abs() < 1e-15);
        assert!((a[0] - 0.4319).abs() < 5e-4);
    }

    #[test]
    fn outputs_stay_inside_the_unit_box() {
        let spec = MlpSpec::new(2, 4, 3).unwrap();
        let params: Vec<f64> = (0..spec.param_count()).map(|i| (i as f64) * 17.3 - 40.0).collect();
        let norm = ObsNormalizer::identity(2);
        let a = forward(&spec, &params, &norm, &[1e6, -1e6]).unwrap();
        assert!(a.iter().all(|v| v.abs() <= 1.0 && v.is_finite()));
    }

    #[test]
    fn dimension_mismatches_are_rejected() {
        let spec = MlpSpec::new(2, 2, 1).unwrap();
        let norm = ObsNormalizer::identity(2);
        assert!(forward(&spec, &[0.0; 3], &norm, &[0.0, 0.0]).is_err());
        assert!(forward(&spec, &vec![0.0; spec.param_count()], &norm, &[0.0]).is_err());
    }

    #[test]
    fn constant_observations_hit_the_std_floor() {
        let mut env = NoiseOnly::new();
        let norm = build_normalizer(&mut env, 3, 0.0, 0).unwrap();
        assert_eq!(norm.mean(), &[0.0]);
        assert_eq!(norm.std(), &[STD_FLOOR]);
    }

    #[test]
    fn two_point_reference_batch_statistics() {
        let obs = vec![vec![0.0], vec![2.0], vec![0.0], vec![2.0]];
        let norm = ObsNormalizer::from_observations(1, &obs).unwrap();
        assert_eq!(norm.mean(), &[1.0]);
        assert_eq!(norm.std(), &[1.0]);
        assert_eq!(norm.reference_count(), 4);
    }

    #[test]
    fn normalizer_is_seed_deterministic() {
        let build = || {
            let mut env = CartWalker::new(0.7, 100);
            build_normalizer(&mut env, 5, 0.1, 33).unwrap()
        };
        assert_eq!(build(), build());
        let mut env = LinearMover::new(50);
        let a = build_normalizer(&mut env, 5, 0.1, 33).unwrap();
        let b = build_normalizer(&mut env, 5, 0.1, 34).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn parameter_vector_round_trips_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("theta.params");
        let p = ParameterVector::new(vec![0.25, -1.5, 3.75e-9, 0.0]).unwrap();
        p.save(&path).unwrap();
        assert_eq!(ParameterVector::load(&path).unwrap(), p);
        // header + 4 little-endian doubles
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 8 + 4 * 8);
    }

    #[test]
    fn non_finite_parameters_are_rejected() {
        assert!(ParameterVector::new(vec![1.0, f64::NAN]).is_err());
    }
}
