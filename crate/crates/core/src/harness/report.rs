//! The `iev-report` command: per-generation ranking-disagreement series and
//! over-generations means, from a run directory's logs or from an external
//! two-evaluations-per-generation fitness file.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::csvio::{fmt_f64, CsvWriter};
use super::{gen_log_path, read_gen_log, CONFIG_FILE};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::metrics::{iev_from_double_eval, IevSample};

pub const IEV_REPORT_FILE: &str = "iev_report.csv";
pub const IEV_REPORT_MEAN_FILE: &str = "iev_report_mean.csv";

#[derive(Debug, Clone)]
pub struct IevReportOutcome {
    pub series_csv: PathBuf,
    pub mean_csv: PathBuf,
    /// Mean impact across every series row.
    pub pooled_mean_iev: f64,
}

/// External format: one row per individual per generation, two independent
/// fitness columns.
#[derive(Debug, Deserialize)]
struct FitnessPairRow {
    generation: usize,
    fitness1: f64,
    fitness2: f64,
}

/// `input` is either a run directory (series taken from its generation
/// logs) or a fitness-pair CSV (series computed here). Reports land in
/// `out_dir`, defaulting to the run directory or the input file's parent.
pub fn cmd_iev_report(input: &Path, out_dir: Option<&Path>) -> Result<IevReportOutcome> {
    let (series, default_out): (Vec<(String, Vec<IevSample>)>, PathBuf) = if input.is_dir() {
        (series_from_run_dir(input)?, input.to_path_buf())
    } else {
        let parent = input.parent().unwrap_or(Path::new(".")).to_path_buf();
        (
            vec![("external".into(), series_from_fitness_pairs(input)?)],
            parent,
        )
    };
    let out = out_dir.unwrap_or(&default_out);

    let mut series_csv = CsvWriter::create(
        &out.join(IEV_REPORT_FILE),
        "scope,generation,iev,snr",
    )?;
    let mut mean_csv = CsvWriter::create(
        &out.join(IEV_REPORT_MEAN_FILE),
        "scope,mean_iev,mean_snr",
    )?;
    let mut pooled_iev = 0.0;
    let mut pooled_snr = 0.0;
    let mut pooled_n = 0usize;
    for (scope, samples) in &series {
        let mut iev_sum = 0.0;
        let mut snr_sum = 0.0;
        for s in samples {
            series_csv.row(&[
                scope.clone(),
                s.generation.to_string(),
                fmt_f64(s.iev),
                fmt_f64(s.snr),
            ])?;
            iev_sum += s.iev;
            snr_sum += s.snr;
        }
        let n = samples.len() as f64;
        mean_csv.row(&[scope.clone(), fmt_f64(iev_sum / n), fmt_f64(snr_sum / n)])?;
        pooled_iev += iev_sum;
        pooled_snr += snr_sum;
        pooled_n += samples.len();
    }
    let pooled_mean_iev = pooled_iev / pooled_n as f64;
    mean_csv.row(&[
        "pooled".into(),
        fmt_f64(pooled_mean_iev),
        fmt_f64(pooled_snr / pooled_n as f64),
    ])?;

    Ok(IevReportOutcome {
        series_csv: series_csv.finalize()?,
        mean_csv: mean_csv.finalize()?,
        pooled_mean_iev,
    })
}

fn series_from_run_dir(run_dir: &Path) -> Result<Vec<(String, Vec<IevSample>)>> {
    let config = RunConfig::load(&run_dir.join(CONFIG_FILE))?;
    let mut series = Vec::new();
    for rep in 0..config.replications {
        let rows = read_gen_log(&gen_log_path(run_dir, rep))?;
        let mut samples = Vec::with_capacity(rows.len());
        for row in rows {
            match (row.iev, row.snr) {
                (Some(iev), Some(snr)) => samples.push(IevSample {
                    iev,
                    snr,
                    generation: row.generation,
                }),
                _ => {
                    return Err(Error::Format(format!(
                        "replication {rep} has no instrumentation data (generation {})",
                        row.generation
                    )))
                }
            }
        }
        if samples.is_empty() {
            return Err(Error::Format(format!("replication {rep} log is empty")));
        }
        series.push((format!("rep{rep:02}"), samples));
    }
    Ok(series)
}

fn series_from_fitness_pairs(path: &Path) -> Result<Vec<IevSample>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => Error::NotFound(path.to_path_buf()),
        _ => Error::Format(format!("{}: {e}", path.display())),
    })?;
    let header = reader
        .headers()
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    if header.iter().collect::<Vec<_>>().join(",") != "generation,fitness1,fitness2" {
        return Err(Error::Format(format!(
            "{}: expected header generation,fitness1,fitness2",
            path.display()
        )));
    }
    let mut by_generation: std::collections::BTreeMap<usize, (Vec<f64>, Vec<f64>)> =
        std::collections::BTreeMap::new();
    for row in reader.deserialize() {
        let row: FitnessPairRow =
            row.map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        let entry = by_generation.entry(row.generation).or_default();
        entry.0.push(row.fitness1);
        entry.1.push(row.fitness2);
    }
    if by_generation.is_empty() {
        return Err(Error::Format(format!("{}: no data rows", path.display())));
    }
    by_generation
        .into_iter()
        .map(|(generation, (f1, f2))| iev_from_double_eval(&f1, &f2, generation))
        .collect()
}
