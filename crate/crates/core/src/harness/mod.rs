//! Experiment presets, replication and CSV/SVG output.
//!
//! Every preset takes a parameter struct with desk-scale and paper-scale
//! defaults, runs its replications on a dedicated thread pool and returns a
//! [`PresetOutput`]: one or more CSV tables, an optional chart and a list of
//! pass/fail checks. Replication `r` always draws from the stream keyed by
//! `(seed, preset, r, ...)`, so results do not depend on the worker count.

mod studies;
pub mod svg;

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{invalid, Result};

pub use studies::*;

/// Runs `f(0..reps)` on a pool of `workers` threads and returns the results in
/// replication order.
pub fn replicate<T, F>(workers: usize, reps: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| invalid(format!("thread pool: {e}")))?;
    pool.install(|| (0..reps).into_par_iter().map(&f).collect())
}

/// Available parallelism, at least 1.
pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Overwrites fields of `base` with the keys of a JSON object.
pub fn apply_overrides<T: Serialize + DeserializeOwned>(base: &T, overrides: &serde_json::Value) -> Result<T> {
    let mut value = serde_json::to_value(base)?;
    let (Some(target), Some(src)) = (value.as_object_mut(), overrides.as_object()) else {
        return Err(invalid("overrides must be a JSON object"));
    };
    for (key, v) in src {
        if !target.contains_key(key) {
            return Err(invalid(format!("unknown parameter `{key}`")));
        }
        target.insert(key.clone(), v.clone());
    }
    Ok(serde_json::from_value(value)?)
}

/// A CSV table with a header row.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i].as_str()).collect())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| invalid(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| invalid(format!("csv: {e}")))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()?)?;
        Ok(())
    }
}

/// Formats a cell value.
pub fn cell<T: ToString>(v: T) -> String {
    v.to_string()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PresetOutput {
    pub name: &'static str,
    pub tables: Vec<(String, Table)>,
    pub chart: Option<(String, svg::Chart)>,
    pub checks: Vec<Check>,
}

impl PresetOutput {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn table(&self, file: &str) -> Option<&Table> {
        self.tables.iter().find(|(f, _)| f == file).map(|(_, t)| t)
    }

    /// Writes every table and the chart into `dir`; returns the written paths.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut paths = Vec::new();
        for (file, table) in &self.tables {
            let p = dir.join(file);
            table.write(&p)?;
            paths.push(p);
        }
        if let Some((file, chart)) = &self.chart {
            let p = dir.join(file);
            fs::write(&p, chart.render())?;
            paths.push(p);
        }
        Ok(paths)
    }
}
