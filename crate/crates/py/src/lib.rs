//! Python bindings: the rank-displacement metrics, the nonparametric test
//! backend, the controller forward pass, and the experiment runners.

use std::path::{Path, PathBuf};

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use ievlab::config::{RunConfig, SweepConfig};
use ievlab::harness::{self, PostevalProtocol};
use ievlab::metrics;
use ievlab::policy::{forward as mlp_forward_impl, MlpSpec, ObsNormalizer};
use ievlab::stats;

fn value_err(e: ievlab::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Ranks fitness ascending; position i is individual i's rank, 0 = worst.
#[pyfunction]
fn rank_fitness(fitness: Vec<f64>) -> PyResult<Vec<usize>> {
    Ok(metrics::rank_fitness(&fitness)
        .map_err(value_err)?
        .positions()
        .to_vec())
}

/// Mean absolute rank displacement between two rankings, in [0, 1].
#[pyfunction]
fn iev(r1: Vec<usize>, r2: Vec<usize>) -> PyResult<f64> {
    let r1 = metrics::Ranking::new(r1).map_err(value_err)?;
    let r2 = metrics::Ranking::new(r2).map_err(value_err)?;
    metrics::iev(&r1, &r2).map_err(value_err)
}

/// Signal-to-noise ratio against the 0.333 noise baseline.
#[pyfunction]
fn snr(iev_value: f64) -> f64 {
    metrics::snr(iev_value)
}

/// Signal-to-noise ratio against the exact (s + 1) / (3 s) baseline.
#[pyfunction]
fn snr_exact(iev_value: f64, population: usize) -> f64 {
    metrics::snr_exact(iev_value, population)
}

/// Ranks two independent evaluations of one population and returns
/// (iev, snr).
#[pyfunction]
fn iev_from_double_eval(fitness1: Vec<f64>, fitness2: Vec<f64>) -> PyResult<(f64, f64)> {
    let s = metrics::iev_from_double_eval(&fitness1, &fitness2, 0).map_err(value_err)?;
    Ok((s.iev, s.snr))
}

/// Kruskal-Wallis H test; returns (h, df, p, tie_correction).
#[pyfunction]
fn kruskal_wallis(groups: Vec<Vec<f64>>) -> PyResult<(f64, usize, f64, f64)> {
    let r = stats::kruskal_wallis(&groups).map_err(value_err)?;
    Ok((r.h, r.df, r.p, r.tie_correction))
}

/// Chi-square upper-tail probability at `df` degrees of freedom.
#[pyfunction]
fn chi2_sf(x: f64, df: usize) -> f64 {
    stats::chi2_sf(x, df)
}

/// Returns (mean, std, median, iqr) of a non-empty sample.
#[pyfunction]
fn summarize(values: Vec<f64>) -> PyResult<(f64, f64, f64, f64)> {
    let s = stats::summarize(&values).map_err(value_err)?;
    Ok((s.mean, s.std, s.median, s.iqr))
}

/// Zero-sum centered-rank utilities in [−0.5, 0.5].
#[pyfunction]
fn centered_ranks(fitness: Vec<f64>) -> PyResult<Vec<f64>> {
    ievlab::es::centered_ranks(&fitness).map_err(value_err)
}

/// Flat parameter count of the tanh controller.
#[pyfunction]
fn mlp_param_count(obs_dim: usize, hidden_dim: usize, action_dim: usize) -> PyResult<usize> {
    Ok(MlpSpec::new(obs_dim, hidden_dim, action_dim)
        .map_err(value_err)?
        .param_count())
}

/// Forward pass of the tanh controller. `mean`/`std` default to the
/// identity normalizer.
#[pyfunction]
#[pyo3(signature = (obs_dim, hidden_dim, action_dim, params, obs, mean=None, std=None))]
#[allow(clippy::too_many_arguments)]
fn mlp_forward(
    obs_dim: usize,
    hidden_dim: usize,
    action_dim: usize,
    params: Vec<f64>,
    obs: Vec<f64>,
    mean: Option<Vec<f64>>,
    std: Option<Vec<f64>>,
) -> PyResult<Vec<f64>> {
    let spec = MlpSpec::new(obs_dim, hidden_dim, action_dim).map_err(value_err)?;
    let normalizer = match (mean, std) {
        (None, None) => ObsNormalizer::identity(obs_dim),
        (mean, std) => {
            let mean = mean.unwrap_or_else(|| vec![0.0; obs_dim]);
            let std = std.unwrap_or_else(|| vec![1.0; obs_dim]);
            ObsNormalizer::from_stats(mean, std).map_err(value_err)?
        }
    };
    mlp_forward_impl(&spec, &params, &normalizer, &obs).map_err(value_err)
}

/// Runs the evolution experiment described by a config file; returns the
/// run directory.
#[pyfunction]
#[pyo3(signature = (config_path, seed=None))]
fn run_evolve(config_path: PathBuf, seed: Option<u64>) -> PyResult<String> {
    let mut config = RunConfig::load(&config_path).map_err(value_err)?;
    if let Some(seed) = seed {
        config.master_seed = seed;
    }
    let outcome = harness::cmd_evolve(&config).map_err(value_err)?;
    Ok(outcome.run_dir.display().to_string())
}

/// Post-evaluates a finished run; `protocol` is "A" or "B". Returns the
/// report CSV path.
#[pyfunction]
#[pyo3(signature = (run_dir, protocol, sigma_init_override=None))]
fn run_posteval(
    run_dir: PathBuf,
    protocol: &str,
    sigma_init_override: Option<f64>,
) -> PyResult<String> {
    let protocol = match protocol {
        "A" | "a" => PostevalProtocol::A,
        "B" | "b" => PostevalProtocol::B,
        other => return Err(PyValueError::new_err(format!("unknown protocol {other:?}"))),
    };
    let outcome =
        harness::cmd_posteval(&run_dir, protocol, sigma_init_override).map_err(value_err)?;
    Ok(outcome.csv.display().to_string())
}

/// Ranking-disagreement report from a run directory or a fitness-pair CSV;
/// returns the pooled mean impact.
#[pyfunction]
fn run_iev_report(input: PathBuf) -> PyResult<f64> {
    let outcome = harness::cmd_iev_report(Path::new(&input), None).map_err(value_err)?;
    Ok(outcome.pooled_mean_iev)
}

/// Runs a condition sweep; returns (sweep_dir, h, df, p).
#[pyfunction]
fn run_sweep(config_path: PathBuf) -> PyResult<(String, f64, usize, f64)> {
    let config = SweepConfig::load(&config_path).map_err(value_err)?;
    let outcome = harness::cmd_sweep(&config).map_err(value_err)?;
    Ok((
        outcome.sweep_dir.display().to_string(),
        outcome.kw.h,
        outcome.kw.df,
        outcome.kw.p,
    ))
}

#[pymodule]
fn ievlab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(rank_fitness, m)?)?;
    m.add_function(wrap_pyfunction!(iev, m)?)?;
    m.add_function(wrap_pyfunction!(snr, m)?)?;
    m.add_function(wrap_pyfunction!(snr_exact, m)?)?;
    m.add_function(wrap_pyfunction!(iev_from_double_eval, m)?)?;
    m.add_function(wrap_pyfunction!(kruskal_wallis, m)?)?;
    m.add_function(wrap_pyfunction!(chi2_sf, m)?)?;
    m.add_function(wrap_pyfunction!(summarize, m)?)?;
    m.add_function(wrap_pyfunction!(centered_ranks, m)?)?;
    m.add_function(wrap_pyfunction!(mlp_param_count, m)?)?;
    m.add_function(wrap_pyfunction!(mlp_forward, m)?)?;
    m.add_function(wrap_pyfunction!(run_evolve, m)?)?;
    m.add_function(wrap_pyfunction!(run_posteval, m)?)?;
    m.add_function(wrap_pyfunction!(run_iev_report, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    Ok(())
}
