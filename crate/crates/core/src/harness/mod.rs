//! Experiment orchestration: evolution runs, post-evaluation protocols,
//! ranking-disagreement reports, condition sweeps, and plot-data export.
//!
//! Every artifact is a write-once CSV with a fixed header, or a TOML/JSON
//! sidecar. Reruns of the same config produce byte-identical files for any
//! worker count.

pub mod csvio;
mod evolve;
mod plotdata;
mod posteval;
mod report;
mod sweep;

pub use evolve::{cmd_evolve, EvolveOutcome, FINAL_FITNESS_FILE, SUMMARY_FILE};
pub use plotdata::{
    cmd_plotdata, IEV_BAR_FILE, IEV_SERIES_FILE, PERFORMANCE_BOX_FILE, ROBUSTNESS_CURVE_FILE,
};
pub use posteval::{
    cmd_posteval, PostevalOutcome, PostevalProtocol, DEFAULT_POSTEVAL_SIGMA_INIT, POSTEVAL_A_FILE,
    POSTEVAL_A_MEAN_FILE, POSTEVAL_B_FILE, PROTOCOL_A_SIGMA_ACT, PROTOCOL_B_LEVELS,
    PROTOCOL_EPISODES,
};
pub use report::{cmd_iev_report, IevReportOutcome, IEV_REPORT_FILE, IEV_REPORT_MEAN_FILE};
pub use sweep::{cmd_sweep, SweepOutcome, SWEEP_KW_FILE, SWEEP_RESULTS_FILE};

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::{MlpSpec, ObsNormalizer};

pub const CONFIG_FILE: &str = "config.toml";
pub const GEN_LOG_HEADER: &str =
    "generation,best_fitness,mean_fitness,iev,snr,sigma_act_effective,center_eval_fitness";

pub fn gen_log_path(run_dir: &Path, rep: usize) -> PathBuf {
    run_dir.join(format!("gen_log_rep{rep:02}.csv"))
}

pub fn final_params_path(run_dir: &Path, rep: usize) -> PathBuf {
    run_dir.join(format!("final_rep{rep:02}.params"))
}

pub fn checkpoint_path(run_dir: &Path, rep: usize, generation: usize) -> PathBuf {
    run_dir.join(format!("checkpoint_rep{rep:02}_gen{generation:05}.params"))
}

pub fn policy_meta_path(run_dir: &Path, rep: usize) -> PathBuf {
    run_dir.join(format!("policy_meta_rep{rep:02}.json"))
}

/// Sidecar describing how to interpret a saved parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicyMeta {
    Mlp {
        spec: MlpSpec,
        normalizer: ObsNormalizer,
    },
    Raw {
        dim: usize,
    },
}

impl PolicyMeta {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Format(format!("serialize policy metadata: {e}")))?;
        write_atomic(path, &text)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|_| Error::NotFound(path.to_path_buf()))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }
}

/// Write-once text file: temp sibling plus rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// One parsed generation-log row.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct GenLogRow {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub iev: Option<f64>,
    pub snr: Option<f64>,
    pub sigma_act_effective: f64,
    pub center_eval_fitness: f64,
}

pub fn read_gen_log(path: &Path) -> Result<Vec<GenLogRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => Error::NotFound(path.to_path_buf()),
        _ => Error::Format(format!("{}: {e}", path.display())),
    })?;
    let header = reader
        .headers()
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    if header.iter().collect::<Vec<_>>().join(",") != GEN_LOG_HEADER {
        return Err(Error::Format(format!(
            "{}: unexpected generation-log header",
            path.display()
        )));
    }
    reader
        .deserialize()
        .map(|r| r.map_err(|e| Error::Format(format!("{}: {e}", path.display()))))
        .collect()
}
