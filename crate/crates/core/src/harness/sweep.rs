//! The `sweep` command: a cross-product of conditions and replications,
//! a long-format results table, and a Kruskal-Wallis comparison of the
//! conditions' final fitness.

use std::fs;
use std::path::PathBuf;

use super::csvio::{fmt_f64, fmt_opt, CsvWriter};
use super::{cmd_evolve, gen_log_path, read_gen_log, write_atomic};
use crate::config::SweepConfig;
use crate::error::{Error, Result};
use crate::seeds::{derive, STREAM_CONDITION};
use crate::stats::{kruskal_wallis, KwResult};

pub const SWEEP_RESULTS_FILE: &str = "sweep_results.csv";
pub const SWEEP_KW_FILE: &str = "sweep_kw.csv";
pub const SWEEP_CONFIG_FILE: &str = "sweep_config.toml";

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub sweep_dir: PathBuf,
    pub results_csv: PathBuf,
    pub kw_csv: PathBuf,
    /// Final-fitness comparison across conditions.
    pub kw: KwResult,
}

pub fn cmd_sweep(config: &SweepConfig) -> Result<SweepOutcome> {
    config.validate()?;
    let sweep_dir = config.output_dir.clone();
    fs::create_dir_all(&sweep_dir)?;
    write_atomic(
        &sweep_dir.join(SWEEP_CONFIG_FILE),
        &toml::to_string_pretty(config).map_err(|e| Error::Config(format!("serialize: {e}")))?,
    )?;

    // condition name -> per-replication (final fitness, mean impact)
    let mut results: Vec<(String, Vec<(f64, Option<f64>)>)> = Vec::new();
    for (index, condition) in config.conditions.iter().enumerate() {
        let mut run = config.base.clone();
        run.master_seed = derive(config.base.master_seed, &[STREAM_CONDITION, index as u64]);
        run.output_dir = Some(sweep_dir.join(&condition.name));
        run.variation = condition.variation.clone();
        run.validate()?;
        let outcome = cmd_evolve(&run)?;

        let mut per_rep = Vec::with_capacity(run.replications);
        for (rep, &final_fitness) in outcome.final_best.iter().enumerate() {
            let rows = read_gen_log(&gen_log_path(&outcome.run_dir, rep))?;
            let ievs: Vec<f64> = rows.iter().filter_map(|r| r.iev).collect();
            let mean_iev = if ievs.is_empty() {
                None
            } else {
                Some(ievs.iter().sum::<f64>() / ievs.len() as f64)
            };
            per_rep.push((final_fitness, mean_iev));
        }
        results.push((condition.name.clone(), per_rep));
    }

    let mut results_csv = CsvWriter::create(
        &sweep_dir.join(SWEEP_RESULTS_FILE),
        "condition,replication,final_fitness,mean_iev",
    )?;
    for (name, per_rep) in &results {
        for (rep, (fitness, mean_iev)) in per_rep.iter().enumerate() {
            results_csv.row(&[
                name.clone(),
                rep.to_string(),
                fmt_f64(*fitness),
                fmt_opt(*mean_iev),
            ])?;
        }
    }

    let groups: Vec<Vec<f64>> = results
        .iter()
        .map(|(_, per_rep)| per_rep.iter().map(|(f, _)| *f).collect())
        .collect();
    let kw = kruskal_wallis(&groups)?;
    let mut kw_csv = CsvWriter::create(
        &sweep_dir.join(SWEEP_KW_FILE),
        "conditions,group_sizes,h,df,p",
    )?;
    kw_csv.row(&[
        results
            .iter()
            .map(|(name, _)| name.as_str())
            .collect::<Vec<_>>()
            .join(";"),
        groups
            .iter()
            .map(|g| g.len().to_string())
            .collect::<Vec<_>>()
            .join(";"),
        fmt_f64(kw.h),
        kw.df.to_string(),
        fmt_f64(kw.p),
    ])?;

    Ok(SweepOutcome {
        results_csv: results_csv.finalize()?,
        kw_csv: kw_csv.finalize()?,
        sweep_dir,
        kw,
    })
}
