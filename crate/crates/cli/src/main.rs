use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use weakqms::{compare, output, run, CliError};

#[derive(Parser)]
#[command(name = "weakqms", version, about = "Finite-volume, expansion and transport studies of lattice QMS")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the command named in a manifest.
    Run {
        #[arg(long)]
        manifest: PathBuf,
        /// Overrides the manifest's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; results do not depend on it.
        #[arg(long)]
        threads: Option<usize>,
        /// Accepted for symmetry with the test harness; results never depend on it.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Tabulate the differences between two completed runs.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Also write `compare.json` and `table_compare.csv` here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { manifest, out, threads, seed: _ } => {
            if let Some(n) = threads {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .map_err(|e| CliError::Manifest(e.to_string()))?;
            }
            let report = run(&manifest, out.as_deref())?;
            for f in &report.files {
                println!("{}", f.display());
            }
        }
        Command::Compare { a, b, out } => {
            let report = compare(&a, &b)?;
            let json = output::to_json(&report)?;
            if let Some(dir) = out {
                output::write_file(&dir.join("compare.json"), json.as_bytes())?;
                report.table().write(&dir, &report.manifest_sha256_a)?;
            }
            print!("{json}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
