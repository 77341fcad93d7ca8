//! `auth-sim`: run experiments, audit refresh schedules, estimate coverage.
//!
//! Exit status is 0 when every reported row passes, 1 when some row fails,
//! and 2 on configuration or I/O errors.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use proauth::channel::write_jsonl;
use proauth::harness::{load_configs, run_experiment, run_trial, trial_seeds, write_bound_records, write_results, OutputFormat, Overrides};
use proauth::refresh::{audit_deterministic_schedule, coverage_probability, default_sparse_count, dense_schedule};
use proauth::{Error, ProtocolId};

#[derive(Parser)]
#[command(name = "auth-sim", version, about = "Monte Carlo harness for proactive xor-refresh authentication")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiments in a JSON config (one object or an array).
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        protocol: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        l: Option<usize>,
        #[arg(long)]
        trials: Option<u64>,
        /// Replaces master_seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        /// Write the transcripts of each experiment's first trial as JSON lines.
        #[arg(long)]
        transcripts: Option<PathBuf>,
    },
    /// Audit a deterministic refresh schedule against the per-window refresh bound.
    AuditSchedule {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Estimate the probability that sparse refresh covers every entry.
    Coverage {
        #[arg(long)]
        n: usize,
        /// Entries refreshed per session; defaults to ceil(2·log2 n).
        #[arg(long)]
        r: Option<usize>,
        /// Defaults to n.
        #[arg(long)]
        sessions: Option<usize>,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
}

/// `k_private` may be one value or a list; absent means every value in `1..n`.
#[derive(Deserialize)]
#[serde(untagged)]
enum KSpec {
    One(usize),
    Many(Vec<usize>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AuditConfig {
    n: usize,
    #[serde(default)]
    k_private: Option<KSpec>,
    /// `schedule[s]` lists the entries refreshed in session `s + 1`; defaults to dense refresh.
    #[serde(default)]
    schedule: Option<Vec<Vec<usize>>>,
}

fn output(path: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn io_err(e: io::Error) -> Error {
    Error::Config(e.to_string())
}

fn read(path: &PathBuf) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::Run { config, protocol, n, l, trials, seed, out, format, transcripts } => {
            let overrides = Overrides {
                protocol: protocol.as_deref().map(str::parse::<ProtocolId>).transpose()?,
                n,
                l,
                trials,
                master_seed: seed,
            };
            let mut configs = load_configs(&read(&config)?)?;
            configs.iter_mut().for_each(|c| c.apply(&overrides));
            let results = configs.iter().map(run_experiment).collect::<Result<Vec<_>, _>>()?;
            if let Some(path) = transcripts {
                let mut sink = BufWriter::new(File::create(path).map_err(io_err)?);
                for cfg in &configs {
                    let spec = cfg.validate()?;
                    let outcome = run_trial(cfg, &spec, trial_seeds(cfg.master_seed, 0, cfg.generator_id), true)?;
                    write_jsonl(&outcome.transcripts, &mut sink).map_err(io_err)?;
                }
                sink.flush().map_err(io_err)?;
            }
            let mut sink = output(&out).map_err(io_err)?;
            write_results(&results, format.into(), &mut sink).map_err(io_err)?;
            sink.flush().map_err(io_err)?;
            Ok(results.iter().all(|r| r.pass))
        }
        Command::AuditSchedule { config, out, format } => {
            let cfg: AuditConfig =
                serde_json::from_str(&read(&config)?).map_err(|e| Error::Config(format!("audit config: {e}")))?;
            if cfg.n < 2 {
                return Err(Error::Config("n: must be at least 2".into()));
            }
            let ks = match cfg.k_private {
                Some(KSpec::One(k)) => vec![k],
                Some(KSpec::Many(ks)) => ks,
                None => (1..cfg.n).collect(),
            };
            if let Some(k) = ks.iter().find(|&&k| k == 0 || k > cfg.n) {
                return Err(Error::Config(format!("k_private: {k} outside 1..={}", cfg.n)));
            }
            let schedule = cfg.schedule.unwrap_or_else(|| dense_schedule(cfg.n));
            let reports: Vec<_> = ks.iter().map(|&k| audit_deterministic_schedule(&schedule, cfg.n, k)).collect();
            let mut sink = output(&out).map_err(io_err)?;
            match OutputFormat::from(format) {
                OutputFormat::Json => {
                    serde_json::to_writer_pretty(&mut sink, &reports).map_err(|e| io_err(e.into()))?;
                    writeln!(sink).map_err(io_err)?;
                }
                OutputFormat::Csv => {
                    let records: Vec<_> = reports.iter().map(|r| r.record()).collect();
                    write_bound_records(&records, OutputFormat::Csv, &mut sink).map_err(io_err)?;
                }
            }
            sink.flush().map_err(io_err)?;
            Ok(reports.iter().all(|r| r.pass))
        }
        Command::Coverage { n, r, sessions, trials, seed, out, format } => {
            let r = r.unwrap_or_else(|| default_sparse_count(n));
            let estimate = coverage_probability(n, r, sessions.unwrap_or(n), trials, seed)?;
            let mut sink = output(&out).map_err(io_err)?;
            match OutputFormat::from(format) {
                OutputFormat::Json => {
                    serde_json::to_writer_pretty(&mut sink, &estimate).map_err(|e| io_err(e.into()))?;
                    writeln!(sink).map_err(io_err)?;
                }
                OutputFormat::Csv => write_bound_records(&[estimate.record()], OutputFormat::Csv, &mut sink).map_err(io_err)?,
            }
            sink.flush().map_err(io_err)?;
            Ok(estimate.pass())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("auth-sim: {e}");
            ExitCode::from(2)
        }
    }
}
