use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

pub fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Command, version and arguments echoed into every output so it can be rerun.
#[derive(Serialize)]
pub struct RunConfig<'a, A: Serialize, G: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'a str,
    pub global: &'a G,
    pub args: &'a A,
}

impl<'a, A: Serialize, G: Serialize> RunConfig<'a, A, G> {
    pub fn new(subcommand: &'a str, global: &'a G, args: &'a A) -> Self {
        RunConfig { tool: "gfqconv", version: env!("CARGO_PKG_VERSION"), subcommand, global, args }
    }
}

/// CSV with the run config as a single leading `#` comment line.
pub fn write_csv<C: Serialize>(
    path: Option<&Path>,
    config: Option<&C>,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    let mut out = sink(path)?;
    if let Some(c) = config {
        writeln!(out, "# {}", serde_json::to_string(c)?)?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut out = sink(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

/// Reads a CSV that may start with `#` comment lines.
pub fn csv_reader(path: &Path) -> Result<csv::Reader<File>> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(f))
}
