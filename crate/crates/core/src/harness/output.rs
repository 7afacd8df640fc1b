//! CSV rows, the JSON run manifest and a log-log slope fit.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ExperimentConfig;
use super::run::ResultRow;
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 7] = ["scenario", "sweep", "estimator", "mean_error", "std_error", "trials", "seed"];

/// Floats use the shortest representation that round-trips, so equal rows
/// give equal bytes.
pub fn write_csv<W: Write>(rows: &[ResultRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.scenario.clone(),
            r.sweep.to_string(),
            r.estimator.clone(),
            r.mean_error.to_string(),
            r.std_error.to_string(),
            r.trials.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path)?;
    if r.headers()? != CSV_HEADER.as_slice() {
        return Err(Error::Shape(format!("{} does not carry the result header", path.display())));
    }
    r.deserialize().map(|row| Ok(row?)).collect()
}

/// `fig1.csv` -> `fig1.manifest.json`.
pub fn manifest_path(csv: &Path) -> PathBuf {
    csv.with_extension("manifest.json")
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub name: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub rows: usize,
    pub threads: Option<usize>,
    /// Start of the run, seconds since the Unix epoch.
    pub started_unix: f64,
    pub wall_clock_seconds: f64,
    pub config: &'a ExperimentConfig,
}

impl<'a> Manifest<'a> {
    pub fn new(config: &'a ExperimentConfig, rows: usize, threads: Option<usize>) -> Self {
        Self {
            name: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            seed: config.seed,
            rows,
            threads,
            started_unix: 0.0,
            wall_clock_seconds: 0.0,
            config,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = File::create(path)?;
        serde_json::to_writer_pretty(&mut f, self)?;
        writeln!(f)?;
        Ok(())
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::Empty("need two points for a slope"));
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::param("xs/ys", "log-log fit needs positive finite values"));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let m = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / m, ly.iter().sum::<f64>() / m);
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::param("xs", "all x values coincide"));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}
