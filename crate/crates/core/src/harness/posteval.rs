//! Post-evaluation of evolved agents.
//!
//! Protocol A measures performance under mild, fixed noise: 10 episodes
//! with initial-state std 0.03 and action std 0.01. Protocol B sweeps the
//! robustness curve: 10 action-noise levels from 0.01 to 0.55, 10 episodes
//! each (100 episodes total). The initial-state std defaults to 0.03 and
//! can be overridden; the value used is recorded in every output row.

use std::path::{Path, PathBuf};

use rand_chacha::ChaCha12Rng;

use super::csvio::{fmt_f64, CsvWriter};
use super::{final_params_path, policy_meta_path, PolicyMeta, CONFIG_FILE};
use crate::config::RunConfig;
use crate::envs::EnvKind;
use crate::error::{Error, Result};
use crate::policy::ParameterVector;
use crate::seeds::{derive, STREAM_POSTEVAL};
use crate::variation::{evaluate, ActionModality, Evaluator, VariationPlan};

pub const POSTEVAL_A_FILE: &str = "posteval_A.csv";
pub const POSTEVAL_A_MEAN_FILE: &str = "posteval_A_mean.csv";
pub const POSTEVAL_B_FILE: &str = "posteval_B.csv";

/// Action-noise levels of the robustness sweep.
pub const PROTOCOL_B_LEVELS: [f64; 10] =
    [0.01, 0.07, 0.13, 0.19, 0.25, 0.31, 0.37, 0.43, 0.49, 0.55];
pub const PROTOCOL_EPISODES: usize = 10;
pub const PROTOCOL_A_SIGMA_ACT: f64 = 0.01;
pub const DEFAULT_POSTEVAL_SIGMA_INIT: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PostevalProtocol {
    A,
    B,
}

#[derive(Debug, Clone)]
pub struct PostevalOutcome {
    pub csv: PathBuf,
    /// Per-replication means; written by protocol A only.
    pub mean_csv: Option<PathBuf>,
}

struct Agent {
    params: ParameterVector,
    meta: PolicyMeta,
}

fn load_agent(run_dir: &Path, rep: usize) -> Result<Agent> {
    let params = ParameterVector::load(&final_params_path(run_dir, rep))?;
    let meta = PolicyMeta::load(&policy_meta_path(run_dir, rep))?;
    Ok(Agent { params, meta })
}

/// Evaluates the final checkpoint of every replication under the protocol
/// and writes the report CSV(s) into the run directory.
pub fn cmd_posteval(
    run_dir: &Path,
    protocol: PostevalProtocol,
    sigma_init_override: Option<f64>,
) -> Result<PostevalOutcome> {
    let config = RunConfig::load(&run_dir.join(CONFIG_FILE))?;
    let kind = config.env.kind()?;
    if matches!(kind, EnvKind::StaticFunction { .. }) {
        return Err(Error::invalid(
            "post-evaluation needs an episodic environment",
        ));
    }
    let sigma_init = sigma_init_override.unwrap_or(DEFAULT_POSTEVAL_SIGMA_INIT);
    if !(sigma_init.is_finite() && sigma_init >= 0.0) {
        return Err(Error::invalid(format!(
            "sigma_init override must be finite and >= 0, got {sigma_init}"
        )));
    }

    match protocol {
        PostevalProtocol::A => protocol_a(run_dir, &config, &kind, sigma_init),
        PostevalProtocol::B => protocol_b(run_dir, &config, &kind, sigma_init),
    }
}

/// One episode under a fixed action-noise std; returns (fitness, progress).
fn run_episode(
    config: &RunConfig,
    kind: &EnvKind,
    agent: &Agent,
    sigma_init: f64,
    sigma_act: f64,
    rng: &mut ChaCha12Rng,
) -> Result<(f64, f64)> {
    let (spec, normalizer) = match &agent.meta {
        PolicyMeta::Mlp { spec, normalizer } => (spec, normalizer),
        PolicyMeta::Raw { .. } => {
            return Err(Error::invalid(
                "post-evaluation needs a controller policy, found a raw genotype",
            ))
        }
    };
    let plan = VariationPlan {
        sigma_init,
        modality: ActionModality::Fixed { sigma_act },
        episodes_per_eval: 1,
    };
    let mut env = kind.build(0);
    let mut ev = Evaluator {
        env: env.as_mut(),
        mlp: Some((spec, normalizer)),
        variant: config.env.reward,
    };
    let record = evaluate(agent.params.values(), &mut ev, &plan, 0, rng)?;
    Ok((record.fitness, record.episode_progress[0]))
}

fn protocol_a(
    run_dir: &Path,
    config: &RunConfig,
    kind: &EnvKind,
    sigma_init: f64,
) -> Result<PostevalOutcome> {
    let mut episodes_csv = CsvWriter::create(
        &run_dir.join(POSTEVAL_A_FILE),
        "replication,sigma_init,sigma_act,episode,fitness,progress",
    )?;
    let mut mean_csv = CsvWriter::create(
        &run_dir.join(POSTEVAL_A_MEAN_FILE),
        "replication,sigma_init,sigma_act,mean_fitness,mean_progress",
    )?;
    for rep in 0..config.replications {
        let agent = load_agent(run_dir, rep)?;
        let mut fitness_sum = 0.0;
        let mut progress_sum = 0.0;
        for episode in 0..PROTOCOL_EPISODES {
            let mut rng = seeded_rng(config, 0, rep, 0, episode);
            let (fitness, progress) = run_episode(
                config,
                kind,
                &agent,
                sigma_init,
                PROTOCOL_A_SIGMA_ACT,
                &mut rng,
            )?;
            fitness_sum += fitness;
            progress_sum += progress;
            episodes_csv.row(&[
                rep.to_string(),
                fmt_f64(sigma_init),
                fmt_f64(PROTOCOL_A_SIGMA_ACT),
                episode.to_string(),
                fmt_f64(fitness),
                fmt_f64(progress),
            ])?;
        }
        let n = PROTOCOL_EPISODES as f64;
        mean_csv.row(&[
            rep.to_string(),
            fmt_f64(sigma_init),
            fmt_f64(PROTOCOL_A_SIGMA_ACT),
            fmt_f64(fitness_sum / n),
            fmt_f64(progress_sum / n),
        ])?;
    }
    Ok(PostevalOutcome {
        csv: episodes_csv.finalize()?,
        mean_csv: Some(mean_csv.finalize()?),
    })
}

fn protocol_b(
    run_dir: &Path,
    config: &RunConfig,
    kind: &EnvKind,
    sigma_init: f64,
) -> Result<PostevalOutcome> {
    let mut csv = CsvWriter::create(
        &run_dir.join(POSTEVAL_B_FILE),
        "replication,sigma_init,sigma_act,mean_fitness,mean_progress",
    )?;
    for rep in 0..config.replications {
        let agent = load_agent(run_dir, rep)?;
        for (level, &sigma_act) in PROTOCOL_B_LEVELS.iter().enumerate() {
            let mut fitness_sum = 0.0;
            let mut progress_sum = 0.0;
            for episode in 0..PROTOCOL_EPISODES {
                let mut rng = seeded_rng(config, 1, rep, level, episode);
                let (fitness, progress) =
                    run_episode(config, kind, &agent, sigma_init, sigma_act, &mut rng)?;
                fitness_sum += fitness;
                progress_sum += progress;
            }
            let n = PROTOCOL_EPISODES as f64;
            csv.row(&[
                rep.to_string(),
                fmt_f64(sigma_init),
                fmt_f64(sigma_act),
                fmt_f64(fitness_sum / n),
                fmt_f64(progress_sum / n),
            ])?;
        }
    }
    Ok(PostevalOutcome {
        csv: csv.finalize()?,
        mean_csv: None,
    })
}

fn seeded_rng(
    config: &RunConfig,
    protocol_tag: u64,
    rep: usize,
    level: usize,
    episode: usize,
) -> ChaCha12Rng {
    use rand::SeedableRng;
    ChaCha12Rng::seed_from_u64(derive(
        config.master_seed,
        &[
            STREAM_POSTEVAL,
            protocol_tag,
            rep as u64,
            level as u64,
            episode as u64,
        ],
    ))
}
