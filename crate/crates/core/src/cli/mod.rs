//! Scenario runner: declarative TOML inputs, JSON reports, CSV sweep tables.
//!
//! Exit codes: 0 pass, 1 check failure, 2 input error, 3 numerical error,
//! 4 I/O error.

pub mod plot;
pub mod report;
pub mod run;
pub mod scenario;
pub mod sweep;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use report::Report;
pub use run::{execute, RunOptions};
pub use scenario::Scenario;
pub use sweep::{run_sweep, SweepFile, SweepTable};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("check failure: {0}")]
    CheckFailure(String),
    #[error("numerical error: {0}")]
    Numerical(crate::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::CheckFailure(_) => 1,
            Self::Input(_) => 2,
            Self::Numerical(_) => 3,
            Self::Io(_) => 4,
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        match e {
            crate::Error::Config(msg) => Self::Input(msg),
            other => Self::Numerical(other),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "helispin", version, about = "Spin and helicity entanglement of one-particle wave packets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario (file path or bundled name) and write its report.
    Run {
        scenario: String,
        /// Report destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Grid override `n_r,n_theta,n_phi[,r_max]`.
        #[arg(long)]
        grid: Option<run::GridOverride>,
        /// Monte Carlo cross-check `n_samples,seed`.
        #[arg(long, value_parser = run::parse_mc_override)]
        mc: Option<(usize, u64)>,
    },
    /// Run a parameter sweep and write its CSV table.
    Sweep {
        sweep: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write plot series for every column into this directory.
        #[arg(long)]
        plot_dir: Option<PathBuf>,
    },
    /// Convert a sweep table or a report into `x,y` series files.
    Plot {
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// List bundled scenarios and sweeps.
    ListScenarios,
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Io(format!("stdout: {e}"))),
    }
}

fn failed_checks(report: &Report) -> String {
    report
        .checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| {
            format!(
                "{}: deviation {} (tolerance {}), convergence delta {}",
                c.name,
                report::format_float(c.deviation),
                report::format_float(c.tolerance),
                report::format_float(c.convergence_delta)
            )
        })
        .collect::<Vec<_>>()
        .join("; ")
}

/// Loads, runs and writes a scenario. The report is written before a check
/// failure is returned.
pub fn run_command(spec: &str, out: Option<&Path>, options: RunOptions) -> Result<Report, CliError> {
    let (text, origin) = scenario::load_text(spec, scenario::BundledKind::Scenario)?;
    let scenario = options.apply(&Scenario::parse(&text, &origin)?);
    let report = execute(&scenario)?;
    write_output(out, &report.to_json())?;
    if !report.passed {
        return Err(CliError::CheckFailure(failed_checks(&report)));
    }
    Ok(report)
}

pub fn sweep_command(spec: &str, out: Option<&Path>, plot_dir: Option<&Path>) -> Result<SweepTable, CliError> {
    let (text, origin) = scenario::load_text(spec, scenario::BundledKind::Sweep)?;
    let base_dir = Path::new(spec).parent().filter(|_| Path::new(spec).exists()).map(Path::to_path_buf);
    let file = SweepFile::parse(&text, &origin)?;
    let table = run_sweep(&file, base_dir.as_deref())?;
    write_output(out, &table.to_csv())?;
    if let Some(dir) = plot_dir {
        plot::write_series(&plot::series_from_table(&table), dir)?;
    }
    let failed: Vec<String> =
        table.rows.iter().filter(|r| r.status != "ok").map(|r| format!("point {}: {}", r.index, r.status)).collect();
    if !failed.is_empty() {
        return Err(CliError::CheckFailure(failed.join("; ")));
    }
    Ok(table)
}

fn list_scenarios() -> String {
    let mut s = String::new();
    for b in scenario::BUNDLED {
        let kind = match b.kind {
            scenario::BundledKind::Scenario => "scenario",
            scenario::BundledKind::Sweep => "sweep",
        };
        s.push_str(&format!("{}\t{kind}\n", b.name));
    }
    s
}

/// Parses arguments and dispatches; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Run { scenario, out, grid, mc } => {
            run_command(&scenario, out.as_deref(), RunOptions { grid, mc }).map(|_| ())
        }
        Command::Sweep { sweep, out, plot_dir } => sweep_command(&sweep, out.as_deref(), plot_dir.as_deref()).map(|_| ()),
        Command::Plot { input, out_dir } => plot::plot_command(&input, &out_dir),
        Command::ListScenarios => write_output(None, &list_scenarios()),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("helispin: {e}");
            e.exit_code()
        }
    }
}
