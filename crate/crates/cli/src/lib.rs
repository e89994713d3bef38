//! Manifest-driven runs of `weakqms-core` studies.
//!
//! A run reads a TOML (or JSON) manifest naming a model, one command and an
//! optional certificate, executes the command and writes `summary.json`
//! plus `table_*.csv` into the output directory. Every artifact records the
//! SHA-256 of the manifest bytes; identical manifests give identical files.

pub mod commands;
pub mod compare;
mod error;
pub mod manifest;
pub mod model;
pub mod output;

use std::path::{Path, PathBuf};

pub use commands::{execute, resolve_parameters, Estimate, ResolvedParameters, Summary};
pub use compare::{compare, compare_summaries, CompareReport, CompareRow};
pub use error::CliError;
pub use manifest::{load_manifest, parse_manifest, LoadedManifest, Manifest};

/// Files written by one run.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub summary: Summary,
    pub files: Vec<PathBuf>,
}

/// Loads, executes and writes one manifest. Nothing is written on failure.
///
/// # Errors
/// See [`CliError::exit_code`] for the classification.
pub fn run(manifest_path: &Path, out: Option<&Path>) -> Result<RunReport, CliError> {
    let loaded = load_manifest(manifest_path)?;
    let (summary, tables) = execute(&loaded.manifest, &loaded.sha256)?;
    let out_dir = loaded.output_dir(out);
    let mut files = Vec::with_capacity(tables.len() + 1);
    for t in &tables {
        files.push(t.write(&out_dir, &loaded.sha256)?);
    }
    let path = out_dir.join("summary.json");
    output::write_file(&path, output::to_json(&summary)?.as_bytes())?;
    files.push(path);
    Ok(RunReport { out_dir, summary, files })
}
