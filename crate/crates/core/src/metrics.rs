//! Rank-displacement diagnostics for noisy fitness measures.
//!
//! When candidates are evaluated twice under independent environmental
//! conditions, the amount by which their fitness rankings disagree measures
//! how much of the ranking is driven by the environment rather than by the
//! candidates themselves. The impact value is the mean absolute rank
//! displacement, normalized to [0, 1]:
//!
//! ```text
//! impact = ( Σ_i |r1_i − r2_i| / (s − 1) ) / s
//! ```
//!
//! Two identical rankings give 0. Two unrelated random rankings give
//! (s + 1) / (3 s) in expectation, which approaches 1/3 as the population
//! grows; the signal-to-noise ratio rescales the impact against that
//! baseline: `snr = (0.333 − impact) / 0.333`.

use crate::error::{Error, Result};

/// Noise baseline of the rank-displacement statistic for large populations.
pub const SNR_BASELINE: f64 = 0.333;

/// A fitness ranking of a population: `positions[i]` is the rank of
/// individual `i`, with 0 the lowest fitness and `s − 1` the highest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ranking {
    positions: Vec<usize>,
}

impl Ranking {
    /// Builds a ranking, rejecting anything that is not a permutation of
    /// `{0, …, s − 1}` with `s ≥ 2`.
    pub fn new(positions: Vec<usize>) -> Result<Self> {
        let s = positions.len();
        if s < 2 {
            return Err(Error::invalid(format!(
                "ranking needs at least 2 individuals, got {s}"
            )));
        }
        let mut seen = vec![false; s];
        for &p in &positions {
            if p >= s || seen[p] {
                return Err(Error::invalid(format!(
                    "positions are not a permutation of 0..{s}"
                )));
            }
            seen[p] = true;
        }
        Ok(Ranking { positions })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction requires s >= 2
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }
}

/// Ranks fitness values ascending: rank 0 is the worst individual.
/// Ties are broken deterministically, the lower index taking the lower rank.
pub fn rank_fitness(fitness: &[f64]) -> Result<Ranking> {
    let s = fitness.len();
    if s < 2 {
        return Err(Error::invalid(format!(
            "ranking needs at least 2 fitness values, got {s}"
        )));
    }
    if let Some(bad) = fitness.iter().find(|f| !f.is_finite()) {
        return Err(Error::invalid(format!("non-finite fitness value {bad}")));
    }
    let mut order: Vec<usize> = (0..s).collect();
    // Finite values only, so the comparison is total; index tiebreak is
    // implicit in the stable sort.
    order.sort_by(|&a, &b| fitness[a].partial_cmp(&fitness[b]).unwrap());
    let mut positions = vec![0usize; s];
    for (rank, &individual) in order.iter().enumerate() {
        positions[individual] = rank;
    }
    Ok(Ranking { positions })
}

/// Mean absolute rank displacement between two rankings, in [0, 1].
pub fn iev(r1: &Ranking, r2: &Ranking) -> Result<f64> {
    let s = r1.len();
    if s != r2.len() {
        return Err(Error::invalid(format!(
            "ranking length mismatch: {} vs {}",
            s,
            r2.len()
        )));
    }
    let total: f64 = r1
        .positions
        .iter()
        .zip(&r2.positions)
        .map(|(&a, &b)| a.abs_diff(b) as f64 / (s - 1) as f64)
        .sum();
    Ok(total / s as f64)
}

/// Signal-to-noise ratio of a fitness measure given its impact value.
///
/// Uses the fixed 0.333 baseline; impact above the baseline yields a
/// negative ratio and is deliberately not clamped.
pub fn snr(iev_value: f64) -> f64 {
    (SNR_BASELINE - iev_value) / SNR_BASELINE
}

/// Variant of [`snr`] against the exact small-population baseline
/// `(s + 1) / (3 s)` instead of the literal 0.333. Not used by the
/// pipeline; provided for exact small-`s` analysis.
pub fn snr_exact(iev_value: f64, population: usize) -> f64 {
    let b = (population as f64 + 1.0) / (3.0 * population as f64);
    (b - iev_value) / b
}

/// One per-generation measurement of ranking disagreement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IevSample {
    pub iev: f64,
    pub snr: f64,
    pub generation: usize,
}

/// Ranks two independent fitness evaluations of the same population and
/// measures their disagreement.
pub fn iev_from_double_eval(
    fitness1: &[f64],
    fitness2: &[f64],
    generation: usize,
) -> Result<IevSample> {
    if fitness1.len() != fitness2.len() {
        return Err(Error::invalid(format!(
            "fitness length mismatch: {} vs {}",
            fitness1.len(),
            fitness2.len()
        )));
    }
    let r1 = rank_fitness(fitness1)?;
    let r2 = rank_fitness(fitness2)?;
    let value = iev(&r1, &r2)?;
    Ok(IevSample {
        iev: value,
        snr: snr(value),
        generation,
    })
}

/// Arithmetic mean of the impact values of a non-empty sample sequence.
pub fn mean_iev(samples: &[IevSample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::invalid("mean of an empty impact sequence"));
    }
    Ok(samples.iter().map(|s| s.iev).sum::<f64>() / samples.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ranking(p: &[usize]) -> Ranking {
        Ranking::new(p.to_vec()).unwrap()
    }

    #[test]
    fn ranks_ascending() {
        let r = rank_fitness(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!(r.positions(), &[2, 0, 1]);
    }

    #[test]
    fn ties_broken_by_index() {
        let r = rank_fitness(&[5.0, 5.0, 1.0]).unwrap();
        assert_eq!(r.positions(), &[1, 2, 0]);
    }

    #[test]
    fn rejects_tiny_and_non_finite_input() {
        assert!(rank_fitness(&[7.5]).is_err());
        assert!(rank_fitness(&[1.0, f64::NAN]).is_err());
        assert!(rank_fitness(&[1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn rank_invariant_under_increasing_transform() {
        let f = [0.3, -1.2, 7.0, 2.5];
        let scaled: Vec<f64> = f.iter().map(|x| 10.0 * x + 100.0).collect();
        assert_eq!(rank_fitness(&f).unwrap(), rank_fitness(&scaled).unwrap());
    }

    #[test]
    fn identical_rankings_have_zero_impact() {
        let r = ranking(&[0, 1, 2, 3]);
        assert_eq!(iev(&r, &r).unwrap(), 0.0);
    }

    #[test]
    fn full_reversal_of_a_pair_is_one() {
        let a = ranking(&[0, 1]);
        let b = ranking(&[1, 0]);
        assert_eq!(iev(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn four_way_reversal_is_two_thirds() {
        let a = ranking(&[0, 1, 2, 3]);
        let b = ranking(&[3, 2, 1, 0]);
        let v = iev(&a, &b).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let a = ranking(&[0, 1]);
        let b = ranking(&[0, 1, 2]);
        assert!(iev(&a, &b).is_err());
    }

    #[test]
    fn snr_anchors() {
        assert_eq!(snr(0.0), 1.0);
        assert_eq!(snr(0.333), 0.0);
        assert!((snr(0.24975) - 0.25).abs() < 1e-12);
        // above the baseline the ratio goes negative, unclamped
        assert!(snr(0.5) < 0.0);
    }

    #[test]
    fn snr_exact_uses_small_population_baseline() {
        // s = 5 baseline is 0.4
        assert_eq!(snr_exact(0.4, 5), 0.0);
        assert_eq!(snr_exact(0.0, 5), 1.0);
    }

    #[test]
    fn double_eval_composes() {
        let s = iev_from_double_eval(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 3.0, 4.0], 7).unwrap();
        assert_eq!(s.iev, 0.0);
        assert_eq!(s.snr, 1.0);
        assert_eq!(s.generation, 7);

        let s = iev_from_double_eval(&[1.0, 2.0], &[2.0, 1.0], 0).unwrap();
        assert_eq!(s.iev, 1.0);
    }

    #[test]
    fn double_eval_sample_links_snr_to_iev() {
        let s = iev_from_double_eval(&[3.0, 1.0, 2.0], &[1.0, 3.0, 2.0], 0).unwrap();
        assert!((s.snr - (SNR_BASELINE - s.iev) / SNR_BASELINE).abs() < 1e-12);
    }

    #[test]
    fn random_normal_pairs_sit_at_the_noise_floor() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(0xB0B);
        let s = 100;
        let repeats = 1000;
        let mut acc = 0.0;
        for g in 0..repeats {
            let f1: Vec<f64> = (0..s).map(|_| StandardNormal.sample(&mut rng)).collect();
            let f2: Vec<f64> = (0..s).map(|_| StandardNormal.sample(&mut rng)).collect();
            acc += iev_from_double_eval(&f1, &f2, g).unwrap().iev;
        }
        let mean = acc / repeats as f64;
        // expectation (s + 1) / (3 s) = 0.3367
        assert!((mean - 0.3367).abs() < 0.005, "mean impact {mean}");
    }

    #[test]
    fn mean_iev_examples() {
        let mk = |v: f64| IevSample {
            iev: v,
            snr: snr(v),
            generation: 0,
        };
        let xs = [mk(0.1), mk(0.2), mk(0.3)];
        assert!((mean_iev(&xs).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(mean_iev(&[mk(0.0)]).unwrap(), 0.0);
        let constant: Vec<IevSample> = (0..500).map(|_| mk(0.25)).collect();
        assert!((mean_iev(&constant).unwrap() - 0.25).abs() < 1e-12);
        assert!(mean_iev(&[]).is_err());
    }
}
