//! Seeded experiment runner behind the `onebit-mean` binary.
//!
//! A run sweeps a grid (over `n`, `d` or the corruption level), repeats each
//! point `trials` times and writes one CSV row per (point, estimator).
//! Trial `t` at grid index `g` draws from its own `(seed, g, t)` stream, so
//! the output does not depend on how trials are scheduled across threads.

mod config;
mod output;
mod run;

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

pub use config::{
    CovarianceKind, Design, EpsilonRule, EstimatorKind, EstimatorSpec, ExperimentConfig, HeldOutRule, Point,
    Scenario, SizeRule, SweepAxis,
};
pub use output::{loglog_slope, manifest_path, read_csv, write_csv, Manifest, CSV_HEADER};
pub use run::{run, run_with_threads, ResultRow};

use crate::error::{Error, Result};

/// Runs `cfg` and writes the CSV at `out` plus its manifest beside it.
/// The CSV is created before the run starts so a bad path fails fast.
pub fn run_to_files(cfg: &ExperimentConfig, out: &Path, threads: Option<usize>) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let file = File::create(out).map_err(|e| Error::Config(format!("cannot write {}: {e}", out.display())))?;
    let started = SystemTime::now();
    let clock = Instant::now();
    let rows = run_with_threads(cfg, threads)?;
    write_csv(&rows, BufWriter::new(file))?;
    let mut echo = cfg.clone();
    echo.output = Some(out.to_path_buf());
    let mut manifest = Manifest::new(&echo, rows.len(), threads);
    manifest.started_unix = started.duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64());
    manifest.wall_clock_seconds = clock.elapsed().as_secs_f64();
    manifest.write(&manifest_path(out))?;
    Ok(rows)
}
