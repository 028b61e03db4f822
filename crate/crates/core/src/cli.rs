//! Command-line front end. Every failure prints one line starting with
//! `error:` and maps to a fixed exit code.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bench::{self, BenchConfig};
use crate::dataset::{load_csv, LoadOptions};
use crate::error::Error;
use crate::iris;
use crate::parallel;
use crate::selector::{self, Mode, SelectionStep};

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 1;
pub const EXIT_DISAGREEMENT: i32 = 2;
pub const EXIT_NO_CANDIDATE: i32 = 3;
pub const EXIT_VERIFY_FAILED: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "ccffs",
    version,
    about = "Canonical-correlation-based fast feature selection"
)]
pub struct Cli {
    /// Worker threads for candidate evaluation (CCFFS_THREADS takes precedence).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Auto,
    Definition,
    H,
    Theta,
}

impl Method {
    fn mode(self) -> Option<Mode> {
        match self {
            Method::Auto => None,
            Method::Definition => Some(Mode::Definition),
            Method::H => Some(Mode::HCorrelation),
            Method::Theta => Some(Mode::ThetaAngle),
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Greedily select features from a CSV file.
    Select {
        #[arg(long)]
        data: PathBuf,
        /// Response column name(s), comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        target: Vec<String>,
        #[arg(long = "num-features", short = 't')]
        num_features: usize,
        #[arg(long, value_enum, default_value = "auto")]
        method: Method,
        /// Standardise features before selection.
        #[arg(long)]
        zscore: bool,
        /// Write the JSON report here instead of standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Time the engines on a synthetic uniform dataset.
    Bench {
        #[arg(long, default_value_t = 5000)]
        instances: usize,
        #[arg(long, default_value_t = 700)]
        features: usize,
        #[arg(long, default_value_t = 50)]
        responses: usize,
        #[arg(long = "select", default_value_t = 50)]
        select: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(
            long,
            value_enum,
            value_delimiter = ',',
            default_value = "definition,h,theta"
        )]
        engines: Vec<Method>,
        #[arg(long, default_value_t = 1)]
        repeat: usize,
        #[arg(long, default_value = "bench.csv")]
        output: PathBuf,
    },
    /// Replay the seven-instance iris walkthrough and check every value.
    VerifyIris {
        #[arg(long, value_enum, default_value = "auto")]
        method: Method,
        #[arg(long, default_value_t = iris::DEFAULT_TOLERANCE)]
        tolerance: f64,
    },
    /// Print a JSON summary of a CSV dataset after encoding.
    Describe {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        target: Vec<String>,
    },
}

#[derive(Debug, Serialize)]
struct SelectOutput<'a> {
    ccffs_schema: u32,
    mode: Mode,
    #[serde(rename = "N")]
    n_instances: usize,
    n: usize,
    m: usize,
    threads: usize,
    selections: &'a [SelectionStep],
    timing: Timing<'a>,
}

#[derive(Debug, Serialize)]
struct Timing<'a> {
    iteration_seconds: &'a [f64],
}

fn fail(err: &mut dyn Write, msg: impl std::fmt::Display, code: i32) -> i32 {
    let line = msg.to_string().replace('\n', " ");
    let _ = writeln!(err, "error: {line}");
    code
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NoInformativeCandidate { .. } => EXIT_NO_CANDIDATE,
        Error::EngineDisagreement { .. } => EXIT_DISAGREEMENT,
        _ => EXIT_DATA,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let msg = e.to_string();
                    let first = msg
                        .lines()
                        .find(|l| !l.trim().is_empty())
                        .unwrap_or("invalid arguments")
                        .trim_start_matches("error: ");
                    fail(err, first, EXIT_DATA)
                }
            };
        }
    };
    let threads = match parallel::resolve_threads(cli.threads) {
        Ok(t) => t,
        Err(e) => return fail(err, e, EXIT_DATA),
    };
    match cli.command {
        Command::Select {
            data,
            target,
            num_features,
            method,
            zscore,
            output,
        } => cmd_select(
            &SelectArgs {
                data,
                target,
                num_features,
                method,
                zscore,
                output,
                threads,
            },
            out,
            err,
        ),
        Command::Bench {
            instances,
            features,
            responses,
            select,
            seed,
            engines,
            repeat,
            output,
        } => {
            let mut modes = Vec::new();
            for m in engines {
                match m.mode() {
                    Some(mode) if !modes.contains(&mode) => modes.push(mode),
                    Some(_) => {}
                    None => return fail(err, "engine 'auto' is not valid for bench", EXIT_DATA),
                }
            }
            let config = BenchConfig {
                n_instances: instances,
                n_features: features,
                n_responses: responses,
                t: select,
                seed,
                engines: modes,
                repeat,
                threads,
            };
            cmd_bench(&config, &output, out, err)
        }
        Command::VerifyIris { method, tolerance } => {
            cmd_verify_iris(method.mode(), tolerance, out, err)
        }
        Command::Describe { data, target } => {
            match load_csv(&data, &target, &LoadOptions::default()).and_then(|d| d.summary_json()) {
                Ok(json) => {
                    let _ = writeln!(out, "{json}");
                    EXIT_OK
                }
                Err(e) => fail(err, e, EXIT_DATA),
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct SelectArgs {
    pub data: PathBuf,
    pub target: Vec<String>,
    pub num_features: usize,
    pub method: Method,
    pub zscore: bool,
    pub output: Option<PathBuf>,
    pub threads: usize,
}

pub fn cmd_select(args: &SelectArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    if args.num_features == 0 {
        return fail(err, "--num-features must be at least 1", EXIT_DATA);
    }
    let options = LoadOptions {
        zscore_features: args.zscore,
    };
    let data = match load_csv(&args.data, &args.target, &options) {
        Ok(d) => d,
        Err(e) => return fail(err, e, EXIT_DATA),
    };
    if args.num_features > data.n_features() {
        return fail(
            err,
            Error::TooManyFeatures {
                t: args.num_features,
                n: data.n_features(),
            },
            EXIT_DATA,
        );
    }
    let report = match parallel::install(Some(args.threads), || {
        selector::run(&data, args.num_features, args.method.mode())
    }) {
        Ok(Ok(r)) => r,
        Ok(Err(e)) | Err(e) => return fail(err, &e, exit_code(&e)),
    };
    let doc = SelectOutput {
        ccffs_schema: SCHEMA_VERSION,
        mode: report.mode,
        n_instances: report.n_instances,
        n: report.n,
        m: report.m,
        threads: args.threads,
        selections: &report.selections,
        timing: Timing {
            iteration_seconds: &report.iteration_seconds,
        },
    };
    let json = match serde_json::to_string_pretty(&doc) {
        Ok(j) => j,
        Err(e) => return fail(err, e, EXIT_DATA),
    };
    match &args.output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, json + "\n") {
                return fail(
                    err,
                    format!("cannot write {}: {e}", path.display()),
                    EXIT_DATA,
                );
            }
        }
        None => {
            let _ = writeln!(out, "{json}");
        }
    }
    EXIT_OK
}

pub fn cmd_bench(
    config: &BenchConfig,
    output: &std::path::Path,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let records = match bench::run_bench(config) {
        Ok(r) => r,
        Err(e) => return fail(err, &e, exit_code(&e)),
    };
    if let Err(e) = bench::emit_csv(&records, output) {
        return fail(err, e, EXIT_DATA);
    }
    let provenance = bench::Provenance {
        rng_name: crate::dataset::RNG_NAME.to_owned(),
        host_note: bench::host_note(),
        threads: config.threads,
        repeat: config.repeat,
    };
    let mut meta = output.as_os_str().to_owned();
    meta.push(".meta.json");
    let written = serde_json::to_string_pretty(&provenance)
        .map_err(Error::from)
        .and_then(|j| std::fs::write(&meta, j + "\n").map_err(Error::from));
    if let Err(e) = written {
        return fail(err, e, EXIT_DATA);
    }

    let _ = writeln!(out, "{:<12} {:>14}", "engine", "total seconds");
    for mode in Mode::ALL {
        if let Some(total) = bench::totals(&records).get(mode.short_name()) {
            let _ = writeln!(out, "{:<12} {:>14.6}", mode.short_name(), total);
        }
    }
    if config.engines.contains(&Mode::ThetaAngle) && config.engines.contains(&Mode::HCorrelation) {
        match bench::crossover(&records, Mode::ThetaAngle, Mode::HCorrelation) {
            Some(i) => {
                let _ = writeln!(out, "theta stays faster than h from iteration {i}");
            }
            None => {
                let _ = writeln!(
                    out,
                    "theta does not overtake h within {} iterations",
                    config.t
                );
            }
        }
    }
    EXIT_OK
}

pub fn cmd_verify_iris(
    mode: Option<Mode>,
    tolerance: f64,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let checks = match iris::verify(mode, tolerance) {
        Ok(c) => c,
        Err(e) => return fail(err, e, EXIT_DATA),
    };
    let mut failed = Vec::new();
    for c in &checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(
            out,
            "{status} {:<40} expected {:<36} actual {}",
            c.label, c.expected, c.actual
        );
        if !c.passed {
            failed.push(format!(
                "{} (expected {}, actual {})",
                c.label, c.expected, c.actual
            ));
        }
    }
    if failed.is_empty() {
        EXIT_OK
    } else {
        fail(
            err,
            format!(
                "{} of {} checks failed: {}",
                failed.len(),
                checks.len(),
                failed.join("; ")
            ),
            EXIT_VERIFY_FAILED,
        )
    }
}
