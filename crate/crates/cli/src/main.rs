use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use fixlab::error::ErrorKind;
use fixlab::experiment::{self, ExperimentConfig, Output};
use fixlab::LabError;

const EXIT_CONFIG: u8 = 1;
const EXIT_PRECONDITION: u8 = 2;
const EXIT_VIOLATION: u8 = 3;

#[derive(Parser)]
#[command(name = "fixlab", version, about = "Error bounds and rate comparison for two-step fixed-point iterations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scheme and write its trajectory as CSV.
    Simulate(Common),
    /// Tabulate the bound products next to the observed error ratio.
    Bounds {
        #[command(flatten)]
        common: Common,
        /// Add brute-force 1-D oracle columns on a grid of this size.
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Compare two schemes: ratio series as CSV, verdict as JSON beside it.
    Compare(Common),
    /// Decide whether the bound products tend to zero.
    Classify(Common),
    /// Search for runs that undershoot the lower bound.
    Probe {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args)]
struct Common {
    /// Experiment document (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output file; defaults to the document's output paths, else stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Writes through a sibling temp file so readers never see a partial file.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().context("output path has no file name")?.to_string_lossy();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

fn emit(out: &Output, csv_path: Option<PathBuf>, json_path: Option<PathBuf>) -> Result<()> {
    let mut stdout = std::io::stdout().lock();
    let mut to_stdout = false;
    if let Some(csv) = &out.csv {
        match &csv_path {
            Some(p) => write_atomic(p, csv)?,
            None => {
                stdout.write_all(csv.as_bytes())?;
                to_stdout = true;
            }
        }
    }
    if let Some(json) = &out.json {
        let path =
            json_path.or_else(|| if out.csv.is_some() { csv_path.map(|p| p.with_extension("json")) } else { csv_path });
        match path {
            Some(p) => write_atomic(&p, json)?,
            None => {
                stdout.write_all(json.as_bytes())?;
                to_stdout = true;
            }
        }
    }
    if to_stdout {
        eprintln!("{}", out.summary);
    } else {
        writeln!(stdout, "{}", out.summary)?;
    }
    Ok(())
}

enum Failure {
    Lab(LabError),
    Other(anyhow::Error),
}

impl From<LabError> for Failure {
    fn from(e: LabError) -> Self {
        Failure::Lab(e)
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

fn execute(cli: Cli) -> std::result::Result<bool, Failure> {
    let common = match &cli.command {
        Command::Simulate(c) | Command::Compare(c) | Command::Classify(c) => c,
        Command::Bounds { common, .. } | Command::Probe { common, .. } => common,
    };
    let text = fs::read_to_string(&common.config).with_context(|| format!("reading {}", common.config.display()))?;
    let config = ExperimentConfig::from_json(&text)?;
    let output = match &cli.command {
        Command::Simulate(_) => experiment::simulate(&config)?,
        Command::Bounds { grid, .. } => experiment::bounds_table(&config, *grid)?,
        Command::Compare(_) => experiment::compare(&config)?,
        Command::Classify(_) => experiment::classify(&config)?,
        Command::Probe { samples, seed, .. } => experiment::probe(&config, *samples, *seed)?,
    };
    let configured = |p: &Option<String>| p.as_ref().map(PathBuf::from);
    let (csv_path, json_path) = if output.csv.is_some() {
        (common.out.clone().or_else(|| configured(&config.output.csv)), configured(&config.output.json))
    } else {
        (None, common.out.clone().or_else(|| configured(&config.output.json)))
    };
    emit(&output, csv_path, json_path)?;
    Ok(output.violation)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(EXIT_VIOLATION),
        Err(Failure::Lab(e)) => {
            eprintln!("error: {e}");
            match e.kind() {
                ErrorKind::Precondition => ExitCode::from(EXIT_PRECONDITION),
                ErrorKind::Config => ExitCode::from(EXIT_CONFIG),
            }
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
