//! Run directory, manifest and summary files.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::RunConfig;

/// Output directory that records every file written to it.
pub struct RunDir {
    dir: PathBuf,
    outputs: Vec<String>,
}

impl RunDir {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            outputs: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    /// Open `name` for writing and record it.
    pub fn file(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.path(name);
        let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        self.outputs.push(name.to_string());
        Ok(BufWriter::new(f))
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut f = self.file(name)?;
        serde_json::to_writer_pretty(&mut f, value)?;
        std::io::Write::write_all(&mut f, b"\n")?;
        Ok(())
    }
}

#[derive(Serialize)]
pub struct Failure {
    pub category: &'static str,
    pub message: String,
}

#[derive(Serialize)]
pub struct Manifest<'a> {
    pub command: &'a str,
    pub version: &'a str,
    pub seed: Option<u64>,
    /// Fully resolved configuration; re-running with it reproduces the run.
    /// Absent when the configuration itself was invalid.
    pub config: Option<&'a RunConfig>,
    pub started_unix: u64,
    pub wall_time_s: f64,
    /// `complete`, `failed`, or `partial` when the command failed after
    /// writing output.
    pub status: &'a str,
    pub outputs: Vec<String>,
    pub error: Option<Failure>,
}

pub struct Clock {
    started: SystemTime,
    timer: Instant,
}

impl Clock {
    pub fn start() -> Self {
        Self {
            started: SystemTime::now(),
            timer: Instant::now(),
        }
    }

    pub fn started_unix(&self) -> u64 {
        self.started.duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
    }

    pub fn elapsed(&self) -> f64 {
        self.timer.elapsed().as_secs_f64()
    }
}

/// Serialize floats that may be non-finite as JSON null.
pub fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}
