//! The `evolve` command: replicated evolution runs with streamed logs,
//! checkpoints, and a cross-replication summary.

use std::fs;
use std::path::PathBuf;

use super::csvio::{fmt_f64, fmt_opt, CsvWriter};
use super::{
    checkpoint_path, final_params_path, gen_log_path, policy_meta_path, write_atomic, PolicyMeta,
    CONFIG_FILE, GEN_LOG_HEADER,
};
use crate::config::RunConfig;
use crate::envs::EnvKind;
use crate::error::{Error, Result};
use crate::es::{evolve, EvolveSetup, GenerationLog};
use crate::policy::{build_normalizer, MlpSpec, ObsNormalizer, ParameterVector};
use crate::seeds::{derive, STREAM_NORMALIZER, STREAM_REPLICATION};
use crate::stats::summarize;

pub const FINAL_FITNESS_FILE: &str = "final_fitness.csv";
pub const SUMMARY_FILE: &str = "summary.csv";

#[derive(Debug, Clone)]
pub struct EvolveOutcome {
    pub run_dir: PathBuf,
    /// Best center-evaluation fitness reached by each replication.
    pub final_best: Vec<f64>,
}

/// Per-replication genotype interpretation, shared with post-evaluation.
pub(super) struct RepPolicy {
    pub dim: usize,
    pub mlp: Option<(MlpSpec, ObsNormalizer)>,
}

impl RepPolicy {
    pub fn meta(&self) -> PolicyMeta {
        match &self.mlp {
            Some((spec, normalizer)) => PolicyMeta::Mlp {
                spec: *spec,
                normalizer: normalizer.clone(),
            },
            None => PolicyMeta::Raw { dim: self.dim },
        }
    }
}

/// Resolves the genotype length and, for episodic environments, builds the
/// controller spec and the frozen reference-batch normalizer.
pub(super) fn resolve_policy(
    config: &RunConfig,
    kind: &EnvKind,
    rep_seed: u64,
    sigma_init: f64,
) -> Result<RepPolicy> {
    if let Some(dim) = kind.genotype_dim() {
        return Ok(RepPolicy { dim, mlp: None });
    }
    let mut probe = kind.build(rep_seed);
    let spec = MlpSpec::new(probe.obs_dim(), config.policy.hidden_dim, probe.action_dim())?;
    let normalizer = build_normalizer(
        probe.as_mut(),
        config.policy.normalizer_episodes,
        sigma_init,
        derive(rep_seed, &[STREAM_NORMALIZER]),
    )?;
    Ok(RepPolicy {
        dim: spec.param_count(),
        mlp: Some((spec, normalizer)),
    })
}

/// Runs every replication of `config`, persisting logs and checkpoints as
/// they are produced; an evaluation error aborts the run with the partial
/// log already on disk.
pub fn cmd_evolve(config: &RunConfig) -> Result<EvolveOutcome> {
    config.validate()?;
    let run_dir = config.output_dir()?.to_path_buf();
    fs::create_dir_all(&run_dir)?;
    write_atomic(
        &run_dir.join(CONFIG_FILE),
        &toml::to_string_pretty(config).map_err(|e| Error::Config(format!("serialize: {e}")))?,
    )?;

    let kind = config.env.kind()?;
    let plan = config.variation.plan(config.es.generations)?;
    let mut final_best = Vec::with_capacity(config.replications);

    for rep in 0..config.replications {
        let rep_seed = derive(config.master_seed, &[STREAM_REPLICATION, rep as u64]);
        let policy = resolve_policy(config, &kind, rep_seed, plan.sigma_init)?;
        policy.meta().save(&policy_meta_path(&run_dir, rep))?;

        let builder = {
            let kind = kind.clone();
            move || kind.build(rep_seed)
        };
        let setup = EvolveSetup {
            dim: policy.dim,
            mlp: policy.mlp.as_ref().map(|(s, n)| (s, n)),
            env_builder: &builder,
            variant: config.env.reward,
            plan: &plan,
            config: &config.es,
            seed: rep_seed,
        };

        let mut log_writer = CsvWriter::create(&gen_log_path(&run_dir, rep), GEN_LOG_HEADER)?;
        let interval = config.es.checkpoint_interval;
        let write_generation = |log: &GenerationLog, theta: &[f64]| -> Result<()> {
            log_writer.row(&[
                log.generation.to_string(),
                fmt_f64(log.best_fitness),
                fmt_f64(log.mean_fitness),
                fmt_opt(log.iev),
                fmt_opt(log.snr),
                fmt_f64(log.sigma_act_effective),
                fmt_f64(log.center_eval_fitness),
            ])?;
            if interval > 0 && (log.generation + 1) % interval == 0 {
                ParameterVector::new(theta.to_vec())?
                    .save(&checkpoint_path(&run_dir, rep, log.generation))?;
            }
            Ok(())
        };

        let (theta, logs) = evolve(&setup, write_generation)?;
        log_writer.finalize()?;
        theta.save(&final_params_path(&run_dir, rep))?;
        let best = logs
            .iter()
            .map(|l| l.center_eval_fitness)
            .fold(f64::NEG_INFINITY, f64::max);
        final_best.push(best);
    }

    let mut fitness_csv = CsvWriter::create(
        &run_dir.join(FINAL_FITNESS_FILE),
        "replication,final_best_fitness",
    )?;
    for (rep, best) in final_best.iter().enumerate() {
        fitness_csv.row(&[rep.to_string(), fmt_f64(*best)])?;
    }
    fitness_csv.finalize()?;

    let summary = summarize(&final_best)?;
    let mut summary_csv = CsvWriter::create(
        &run_dir.join(SUMMARY_FILE),
        "replications,median_final_best,iqr_final_best",
    )?;
    summary_csv.row(&[
        final_best.len().to_string(),
        fmt_f64(summary.median),
        fmt_f64(summary.iqr),
    ])?;
    summary_csv.finalize()?;

    Ok(EvolveOutcome {
        run_dir,
        final_best,
    })
}
