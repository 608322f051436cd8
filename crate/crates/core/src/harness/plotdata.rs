//! The `plot-data` command: tidy CSVs for external plotting, pooled from
//! one or more run directories. The condition id is the run directory's
//! base name.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::csvio::{fmt_f64, CsvWriter};
use super::evolve::FINAL_FITNESS_FILE;
use super::posteval::POSTEVAL_B_FILE;
use super::{gen_log_path, read_gen_log, GenLogRow, CONFIG_FILE};
use crate::config::RunConfig;
use crate::error::{Error, Result};

pub const IEV_BAR_FILE: &str = "iev_bar.csv";
pub const IEV_SERIES_FILE: &str = "iev_series.csv";
pub const PERFORMANCE_BOX_FILE: &str = "performance_box.csv";
pub const ROBUSTNESS_CURVE_FILE: &str = "robustness_curve.csv";

#[derive(Debug, Deserialize)]
struct FinalFitnessRow {
    replication: usize,
    final_best_fitness: f64,
}

#[derive(Debug, Deserialize)]
struct PostevalBRow {
    #[allow(dead_code)]
    replication: usize,
    #[allow(dead_code)]
    sigma_init: f64,
    sigma_act: f64,
    mean_fitness: f64,
    #[allow(dead_code)]
    mean_progress: f64,
}

/// Emits the four plot-ready files into `out_dir`.
pub fn cmd_plotdata(run_dirs: &[PathBuf], out_dir: &Path) -> Result<Vec<PathBuf>> {
    if run_dirs.is_empty() {
        return Err(Error::invalid("plot-data needs at least one run directory"));
    }
    let mut bar = CsvWriter::create(&out_dir.join(IEV_BAR_FILE), "condition,mean_iev")?;
    let mut series = CsvWriter::create(
        &out_dir.join(IEV_SERIES_FILE),
        "condition,generation,iev",
    )?;
    let mut boxes = CsvWriter::create(
        &out_dir.join(PERFORMANCE_BOX_FILE),
        "condition,replication,fitness",
    )?;
    let mut robustness = CsvWriter::create(
        &out_dir.join(ROBUSTNESS_CURVE_FILE),
        "condition,sigma_act,mean_return",
    )?;

    for run_dir in run_dirs {
        let condition = run_dir
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| Error::invalid(format!("bad run directory {}", run_dir.display())))?
            .to_string();
        let config = RunConfig::load(&run_dir.join(CONFIG_FILE))?;

        let mut logs: Vec<Vec<GenLogRow>> = Vec::new();
        for rep in 0..config.replications {
            logs.push(read_gen_log(&gen_log_path(run_dir, rep))?);
        }

        // impact per generation, averaged across replications that have data
        let mut per_generation: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        let mut all = Vec::new();
        for rows in &logs {
            for row in rows {
                if let Some(iev) = row.iev {
                    per_generation.entry(row.generation).or_default().push(iev);
                    all.push(iev);
                }
            }
        }
        if !all.is_empty() {
            bar.row(&[
                condition.clone(),
                fmt_f64(all.iter().sum::<f64>() / all.len() as f64),
            ])?;
            for (generation, values) in &per_generation {
                series.row(&[
                    condition.clone(),
                    generation.to_string(),
                    fmt_f64(values.iter().sum::<f64>() / values.len() as f64),
                ])?;
            }
        }

        for row in read_final_fitness(&run_dir.join(FINAL_FITNESS_FILE))? {
            boxes.row(&[
                condition.clone(),
                row.replication.to_string(),
                fmt_f64(row.final_best_fitness),
            ])?;
        }

        // robustness rows exist only after a protocol-B post-evaluation
        let posteval_b = run_dir.join(POSTEVAL_B_FILE);
        if posteval_b.exists() {
            let mut per_sigma: BTreeMap<String, (f64, usize)> = BTreeMap::new();
            let mut order: Vec<String> = Vec::new();
            for row in read_posteval_b(&posteval_b)? {
                let key = fmt_f64(row.sigma_act);
                if !per_sigma.contains_key(&key) {
                    order.push(key.clone());
                }
                let entry = per_sigma.entry(key).or_insert((0.0, 0));
                entry.0 += row.mean_fitness;
                entry.1 += 1;
            }
            for key in order {
                let (sum, count) = per_sigma[&key];
                robustness.row(&[
                    condition.clone(),
                    key,
                    fmt_f64(sum / count as f64),
                ])?;
            }
        }
    }

    Ok(vec![
        bar.finalize()?,
        series.finalize()?,
        boxes.finalize()?,
        robustness.finalize()?,
    ])
}

fn read_final_fitness(path: &Path) -> Result<Vec<FinalFitnessRow>> {
    read_csv(path)
}

fn read_posteval_b(path: &Path) -> Result<Vec<PostevalBRow>> {
    read_csv(path)
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => Error::NotFound(path.to_path_buf()),
        _ => Error::Format(format!("{}: {e}", path.display())),
    })?;
    reader
        .deserialize()
        .map(|r| r.map_err(|e| Error::Format(format!("{}: {e}", path.display()))))
        .collect()
}
