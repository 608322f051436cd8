//! Write-once CSV files.
//!
//! Rows go to a `.tmp` sibling and the file appears under its final name in
//! a single rename, so consumers never observe a half-written file. On an
//! aborted run the drop handler still promotes whatever rows were delivered,
//! which is how partial logs survive evaluation errors.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::Result;

pub struct CsvWriter {
    tmp_path: PathBuf,
    final_path: PathBuf,
    writer: Option<BufWriter<File>>,
}

impl CsvWriter {
    pub fn create(path: &Path, header: &str) -> Result<Self> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let tmp_path = path.with_extension("csv.tmp");
        let mut writer = BufWriter::new(File::create(&tmp_path)?);
        writeln!(writer, "{header}")?;
        Ok(CsvWriter {
            tmp_path,
            final_path: path.to_path_buf(),
            writer: Some(writer),
        })
    }

    pub fn row(&mut self, fields: &[String]) -> Result<()> {
        let writer = self.writer.as_mut().expect("writer already finalized");
        writeln!(writer, "{}", fields.join(","))?;
        Ok(())
    }

    pub fn finalize(mut self) -> Result<PathBuf> {
        self.promote()?;
        Ok(self.final_path.clone())
    }

    fn promote(&mut self) -> std::io::Result<()> {
        if let Some(mut writer) = self.writer.take() {
            writer.flush()?;
            drop(writer);
            fs::rename(&self.tmp_path, &self.final_path)?;
        }
        Ok(())
    }
}

impl Drop for CsvWriter {
    fn drop(&mut self) {
        let _ = self.promote();
    }
}

/// Shortest round-trip decimal form; stable across runs and worker counts.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Optional cell: empty when absent.
pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}
