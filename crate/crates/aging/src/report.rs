//! Run reports and CSV tables.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

/// Version of the CSV column layouts, part of every CSV file name.
pub const CSV_SCHEMA: &str = "v1";

/// Everything a command produced, with the inputs needed to reproduce it.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    pub version: &'static str,
    /// Resolved configuration(s).
    pub config: Value,
    pub assumptions: Vec<String>,
    pub units: String,
    pub results: Value,
    pub diagnostics: Value,
    pub wall_clock_seconds: f64,
}

/// Wall-clock timer for a report.
pub struct Stopwatch(Instant);

impl Stopwatch {
    pub fn start() -> Self {
        Stopwatch(Instant::now())
    }

    pub fn seconds(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

impl RunReport {
    pub fn new(command: &str, config: Value, assumptions: Vec<String>, units: &str) -> Self {
        RunReport {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION"),
            config,
            assumptions,
            units: units.to_string(),
            results: Value::Null,
            diagnostics: Value::Null,
            wall_clock_seconds: 0.0,
        }
    }
}

/// Collects output files and writes them together at the end of a run.
#[derive(Default)]
pub struct OutputSet {
    files: Vec<(String, Vec<u8>)>,
}

impl OutputSet {
    pub fn csv<T: Serialize>(&mut self, stem: &str, rows: &[T]) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().context("finishing CSV")?;
        self.files.push((format!("{stem}_{CSV_SCHEMA}.csv"), bytes));
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.files.push((name.to_string(), bytes));
        Ok(())
    }

    /// Write every file into `dir`, creating it if needed.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut out = Vec::new();
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
            out.push(path);
        }
        Ok(out)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        slot: usize,
        se: f64,
    }

    #[test]
    fn csv_header_and_versioned_name() {
        let mut o = OutputSet::default();
        o.csv("slots", &[Row { slot: 1, se: 0.0 }, Row { slot: 2, se: 1.5 }]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let paths = o.write(dir.path()).unwrap();
        assert!(paths[0].ends_with("slots_v1.csv"));
        let text = fs::read_to_string(&paths[0]).unwrap();
        assert_eq!(text, "slot,se\n1,0.0\n2,1.5\n");
    }
}
