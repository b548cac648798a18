//! CSV files with `#` metadata lines in front.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Provenance written ahead of every CSV body.
pub(crate) struct Metadata<'a, C: Serialize> {
    pub command: &'static str,
    pub channel_path: &'a Path,
    pub channel_sha256: String,
    pub denom_mode: &'a str,
    pub seed: u64,
    pub config: &'a C,
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Shortest round-trip decimal form, so identical values print identically.
pub(crate) fn num(x: f64) -> String {
    format!("{x}")
}

pub(crate) fn open(out: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

pub(crate) fn write_csv<C: Serialize>(
    mut sink: Box<dyn Write>,
    meta: &Metadata<'_, C>,
    header: &[&str],
    rows: &[Vec<String>],
) -> io::Result<()> {
    writeln!(
        sink,
        "# {} {}",
        env!("CARGO_PKG_NAME"),
        env!("CARGO_PKG_VERSION")
    )?;
    writeln!(sink, "# command: {}", meta.command)?;
    writeln!(sink, "# channel: {}", meta.channel_path.display())?;
    writeln!(sink, "# channel_sha256: {}", meta.channel_sha256)?;
    writeln!(sink, "# denom_mode: {}", meta.denom_mode)?;
    writeln!(sink, "# seed: {}", meta.seed)?;
    let config = serde_json::to_string(meta.config).map_err(io::Error::other)?;
    writeln!(sink, "# config: {config}")?;
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()
}
