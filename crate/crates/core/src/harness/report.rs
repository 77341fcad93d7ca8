//! CSV and JSON output of experiment results and bound records.

use std::io::{self, Write};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::harness::experiment::ExperimentResult;
use crate::refresh::BoundRecord;

/// The first twelve columns are fixed; the last three record how the row was judged.
pub const CSV_HEADER: &str = "protocol,n,l,keyword_len,adversary,trials,honest_rate,adv_rate,adv_stderr,bound,deadlocks,pass,bound_source,generator_id,layout";

pub const BOUND_CSV_HEADER: &str = "kind,n,r,k_private,sessions,trials,estimate,stderr,bound,pass";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::Config(format!("unknown format {other:?}, expected csv or json"))),
        }
    }
}

pub fn csv_row(r: &ExperimentResult) -> String {
    let cfg = &r.config;
    let keyword_len = cfg.params.resolve().map(|p| p.keyword_len()).unwrap_or(0);
    let layout = r.layout.map_or_else(
        || "-".to_string(),
        |l| format!("m={} dims={} q={} v={} t={}", l.m(), l.dims(), l.q(), l.v(), l.t()),
    );
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        cfg.protocol,
        cfg.params.n,
        cfg.params.l,
        keyword_len,
        cfg.adversary.kind.name(),
        cfg.trials,
        r.honest_accept_rate,
        r.adversary_success_rate,
        r.adversary_stderr,
        r.theoretical_bound,
        r.deadlock_count,
        r.pass,
        r.bound_source,
        cfg.generator_id,
        layout,
    )
}

pub fn write_csv<W: Write>(results: &[ExperimentResult], mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in results {
        writeln!(out, "{}", csv_row(r))?;
    }
    Ok(())
}

pub fn write_json<W: Write>(results: &[ExperimentResult], mut out: W) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut out, results)?;
    writeln!(out)
}

pub fn write_results<W: Write>(results: &[ExperimentResult], format: OutputFormat, out: W) -> io::Result<()> {
    match format {
        OutputFormat::Csv => write_csv(results, out),
        OutputFormat::Json => write_json(results, out),
    }
}

pub fn write_bound_records<W: Write>(records: &[BoundRecord], format: OutputFormat, mut out: W) -> io::Result<()> {
    match format {
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut out, records)?;
            writeln!(out)
        }
        OutputFormat::Csv => {
            writeln!(out, "{BOUND_CSV_HEADER}")?;
            for r in records {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{}",
                    r.kind, r.n, r.r, r.k_private, r.sessions, r.trials, r.estimate, r.stderr, r.bound, r.pass
                )?;
            }
            Ok(())
        }
    }
}
