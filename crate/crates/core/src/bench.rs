//! Elapsed-time comparison of the selection engines on synthetic data.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{synthetic_uniform, RNG_NAME};
use crate::error::{Error, Result};
use crate::parallel;
use crate::selector::{run, Mode, SelectionReport};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub n_instances: usize,
    pub n_features: usize,
    pub n_responses: usize,
    pub t: usize,
    pub seed: u64,
    pub engines: Vec<Mode>,
    /// Runs per engine; timings are averaged per iteration.
    pub repeat: usize,
    pub threads: usize,
}

impl BenchConfig {
    /// The synthetic shape used in the original timing study.
    pub fn full_scale(seed: u64) -> Self {
        Self {
            n_instances: 5000,
            n_features: 700,
            n_responses: 50,
            t: 50,
            seed,
            engines: Mode::ALL.to_vec(),
            repeat: 1,
            threads: 1,
        }
    }
}

/// One engine, one iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRecord {
    pub engine: Mode,
    /// 1-based.
    pub iteration: usize,
    pub cumulative_seconds: f64,
    pub n_instances: usize,
    pub n: usize,
    pub m: usize,
    pub t: usize,
    pub seed: u64,
    pub threads: usize,
    pub rng_name: String,
    pub host_note: String,
}

/// A CSV row as written by [`emit_csv`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub engine: String,
    pub iteration: usize,
    pub cumulative_seconds: f64,
    #[serde(rename = "N")]
    pub n_instances: usize,
    pub n: usize,
    pub m: usize,
    pub t: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub rng_name: String,
    pub host_note: String,
    pub threads: usize,
    pub repeat: usize,
}

pub fn host_note() -> String {
    format!(
        "{}-{}, {} hardware threads",
        std::env::consts::OS,
        std::env::consts::ARCH,
        std::thread::available_parallelism().map_or(1, |n| n.get())
    )
}

/// Raw cumulative timings: for each engine, one series per repetition.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRuns {
    pub runs: Vec<(Mode, Vec<Vec<f64>>)>,
}

/// Runs every engine on one shared dataset and returns per-iteration
/// cumulative times averaged over repetitions, after checking that the
/// engines select the same features.
pub fn run_bench(config: &BenchConfig) -> Result<Vec<BenchRecord>> {
    Ok(aggregate(config, &run_bench_raw(config)?))
}

pub fn run_bench_raw(config: &BenchConfig) -> Result<BenchRuns> {
    if config.engines.is_empty() {
        return Err(Error::InvalidArgument("no engines requested".into()));
    }
    if config.repeat == 0 {
        return Err(Error::InvalidArgument("repeat must be at least 1".into()));
    }
    if config.t > config.n_features {
        return Err(Error::TooManyFeatures {
            t: config.t,
            n: config.n_features,
        });
    }
    let data = synthetic_uniform(
        config.n_instances,
        config.n_features,
        config.n_responses,
        config.seed,
    )?;

    let mut reference: Option<(Mode, Vec<usize>)> = None;
    let mut runs = Vec::with_capacity(config.engines.len());
    // Engines run one after another so their timings do not interfere.
    for &engine in &config.engines {
        let mut series = Vec::with_capacity(config.repeat);
        for _ in 0..config.repeat {
            let report =
                parallel::install(Some(config.threads), || run(&data, config.t, Some(engine)))??;
            check_agreement(&mut reference, engine, &report)?;
            series.push(report.cumulative_seconds());
        }
        runs.push((engine, series));
    }
    Ok(BenchRuns { runs })
}

/// Per-iteration mean of the cumulative timings.
pub fn aggregate(config: &BenchConfig, raw: &BenchRuns) -> Vec<BenchRecord> {
    let host = host_note();
    let mut records = Vec::new();
    for (engine, series) in &raw.runs {
        let len = series.iter().map(Vec::len).min().unwrap_or(0);
        for i in 0..len {
            let mean = series.iter().map(|s| s[i]).sum::<f64>() / series.len() as f64;
            records.push(BenchRecord {
                engine: *engine,
                iteration: i + 1,
                cumulative_seconds: mean,
                n_instances: config.n_instances,
                n: config.n_features,
                m: config.n_responses,
                t: config.t,
                seed: config.seed,
                threads: config.threads,
                rng_name: RNG_NAME.to_owned(),
                host_note: host.clone(),
            });
        }
    }
    records
}

fn check_agreement(
    reference: &mut Option<(Mode, Vec<usize>)>,
    engine: Mode,
    report: &SelectionReport,
) -> Result<()> {
    let indices = report.indices();
    match reference {
        None => {
            *reference = Some((engine, indices));
            Ok(())
        }
        Some((ref_engine, ref_indices)) => {
            match ref_indices.iter().zip(&indices).position(|(a, b)| a != b) {
                None => Ok(()),
                Some(i) => Err(Error::EngineDisagreement {
                    iteration: i + 1,
                    detail: format!(
                        "{ref_engine} chose feature {} but {engine} chose feature {}",
                        ref_indices[i], indices[i]
                    ),
                }),
            }
        }
    }
}

/// Final cumulative time per engine.
pub fn totals(records: &[BenchRecord]) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    for r in records {
        let e = out.entry(r.engine.to_string()).or_insert(0.0_f64);
        *e = e.max(r.cumulative_seconds);
    }
    out
}

/// First iteration from which `fast` stays strictly below `slow` in
/// cumulative time, if any.
pub fn crossover(records: &[BenchRecord], fast: Mode, slow: Mode) -> Option<usize> {
    let series = |mode| -> Vec<f64> {
        let mut rows: Vec<&BenchRecord> = records.iter().filter(|r| r.engine == mode).collect();
        rows.sort_by_key(|r| r.iteration);
        rows.iter().map(|r| r.cumulative_seconds).collect()
    };
    let (a, b) = (series(fast), series(slow));
    if a.is_empty() || a.len() != b.len() {
        return None;
    }
    let mut start = None;
    for (i, (x, y)) in a.iter().zip(&b).enumerate() {
        if x < y {
            start.get_or_insert(i + 1);
        } else {
            start = None;
        }
    }
    start
}

fn engine_rank(mode: Mode) -> usize {
    Mode::ALL
        .iter()
        .position(|&m| m == mode)
        .unwrap_or(usize::MAX)
}

pub fn write_csv<W: Write>(records: &[BenchRecord], writer: W) -> Result<()> {
    if records.is_empty() {
        return Err(Error::InvalidArgument(
            "no benchmark records to write".into(),
        ));
    }
    let mut sorted: Vec<&BenchRecord> = records.iter().collect();
    sorted.sort_by_key(|r| (engine_rank(r.engine), r.iteration));
    let mut w = csv::Writer::from_writer(writer);
    for r in sorted {
        w.serialize(CsvRow {
            engine: r.engine.to_string(),
            iteration: r.iteration,
            cumulative_seconds: r.cumulative_seconds,
            n_instances: r.n_instances,
            n: r.n,
            m: r.m,
            t: r.t,
            seed: r.seed,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(records: &[BenchRecord], path: impl AsRef<Path>) -> Result<()> {
    if records.is_empty() {
        return Err(Error::InvalidArgument(
            "no benchmark records to write".into(),
        ));
    }
    let file = std::fs::File::create(path)?;
    write_csv(records, file)
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize()
        .collect::<std::result::Result<Vec<CsvRow>, _>>()?)
}
