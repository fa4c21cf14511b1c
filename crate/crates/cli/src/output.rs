use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use hk_core::montecarlo::{EstimateRecord, GENERATOR};
use serde::Serialize;

use crate::CliError;

pub const TOOL: &str = "hk";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const SWEEP_HEADER: [&str; 10] =
    ["n", "epsilon", "trials", "successes", "nonconverged", "p_hat", "ci_low", "ci_high", "mean_steps", "master_seed"];

/// Provenance written next to every output file.
#[derive(Debug, Serialize)]
pub struct Metadata<'a, C: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub generator: &'static str,
    pub master_seed: Option<u64>,
    pub config: &'a C,
}

impl<'a, C: Serialize> Metadata<'a, C> {
    pub fn new(command: &'a str, master_seed: Option<u64>, config: &'a C) -> Self {
        Metadata { tool: TOOL, version: VERSION, command, generator: GENERATOR, master_seed, config }
    }
}

/// `<path>.meta.json`
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

pub fn write_sidecar<C: Serialize>(path: &Path, meta: &Metadata<'_, C>) -> Result<(), CliError> {
    let side = sidecar_path(path);
    let mut text = serde_json::to_string_pretty(meta).expect("metadata serializes");
    text.push('\n');
    std::fs::write(&side, text).map_err(|e| io_error(&side, e))
}

pub fn io_error(path: &Path, e: io::Error) -> CliError {
    CliError::Usage(format!("cannot write {}: {e}", path.display()))
}

pub fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| io_error(path, e))
}

/// Opens `path`, or standard output when `None`.
pub fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn write_sweep_csv<W: Write>(out: W, records: &[EstimateRecord]) -> io::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for r in records {
        w.write_record([
            r.n.to_string(),
            r.epsilon.to_string(),
            r.trials.to_string(),
            r.successes.to_string(),
            r.nonconverged.to_string(),
            r.p_hat.to_string(),
            r.ci_low.to_string(),
            r.ci_high.to_string(),
            r.mean_steps.map(|m| m.to_string()).unwrap_or_default(),
            r.master_seed.to_string(),
        ])?;
    }
    w.flush()
}
