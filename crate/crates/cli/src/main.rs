mod commands;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Inspect, run and compare abstract quantum automata written in `.qaut`
/// files.
#[derive(Debug, Parser)]
#[command(name = "qaut", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check that a model file parses and satisfies every well-formedness condition.
    Validate { path: PathBuf },
    /// Sample one run.
    Run {
        path: PathBuf,
        #[command(flatten)]
        initial: InitialArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        limits: StepArgs,
        #[command(flatten)]
        format: FormatArgs,
    },
    /// Expand every branch and report leaves, masses and final mixtures.
    Enumerate {
        path: PathBuf,
        #[command(flatten)]
        initial: InitialArgs,
        #[command(flatten)]
        limits: StepArgs,
        /// Branches with cumulative mass at or below this are not expanded.
        #[arg(long, default_value_t = 0.0, value_parser = non_negative)]
        prune_eps: f64,
        #[command(flatten)]
        format: FormatArgs,
    },
    /// Decide whether the operations at a node differ only by per-outcome phases.
    Equiv {
        path_a: PathBuf,
        path_b: PathBuf,
        #[arg(long)]
        node: String,
        #[arg(long, value_parser = positive)]
        tol: Option<f64>,
    },
    /// Print the operation at a node as an isometry or as Kraus blocks.
    Convert {
        path: PathBuf,
        #[arg(long)]
        node: String,
        #[arg(long, value_enum)]
        to: Form,
    },
    /// List the bundled example models, print one, or copy them all to a directory.
    Examples {
        #[arg(long, conflicts_with = "copy")]
        show: Option<String>,
        #[arg(long, value_name = "DIR")]
        copy: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct InitialArgs {
    /// Initial state expression (automata) or snapshot name (machines).
    #[arg(long, conflicts_with = "initial_file")]
    initial: Option<String>,
    /// File holding the initial state expression.
    #[arg(long, value_name = "FILE")]
    initial_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct StepArgs {
    #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u64).range(1..))]
    max_steps: u64,
}

#[derive(Debug, Args)]
struct FormatArgs {
    /// Machine-readable output.
    #[arg(long, conflicts_with = "pretty")]
    json: bool,
    /// Human-readable output (the default).
    #[arg(long)]
    pretty: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Form {
    Isometry,
    Kraus,
}

fn non_negative(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 => Ok(v),
        _ => Err(format!("`{s}` is not a non-negative number")),
    }
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        _ => Err(format!("`{s}` is not a positive number")),
    }
}

/// Process exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok = 0,
    Model = 1,
    Io = 2,
    NotEquivalent = 3,
    Usage = 64,
}

/// A failed command: the status to exit with and what to print on stderr.
#[derive(Debug)]
pub struct Failure {
    pub status: Status,
    pub message: String,
}

impl Failure {
    pub fn new(status: Status, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }
}

fn run(args: impl IntoIterator<Item = OsString>) -> Status {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { Status::Usage } else { Status::Ok };
        }
    };
    let tol = match commands::tolerance_from_env() {
        Ok(t) => t,
        Err(f) => {
            eprintln!("qaut: {}", f.message);
            return f.status;
        }
    };
    let result = match cli.command {
        Command::Validate { path } => commands::validate(&path, tol),
        Command::Run {
            path,
            initial,
            seed,
            limits,
            format,
        } => commands::run(&path, &initial.into(), seed, limits.max_steps as usize, format.json, tol),
        Command::Enumerate {
            path,
            initial,
            limits,
            prune_eps,
            format,
        } => commands::enumerate(
            &path,
            &initial.into(),
            limits.max_steps as usize,
            prune_eps,
            format.json,
            tol,
        ),
        Command::Equiv { path_a, path_b, node, tol: t } => commands::equiv(&path_a, &path_b, &node, t.unwrap_or(tol)),
        Command::Convert { path, node, to } => commands::convert(&path, &node, to == Form::Isometry, tol),
        Command::Examples { show, copy } => commands::examples(show.as_deref(), copy.as_deref()),
    };
    match result {
        Ok(status) => status,
        Err(f) => {
            if !f.message.is_empty() {
                eprint!("{}", f.message);
                if !f.message.ends_with('\n') {
                    eprintln!();
                }
            }
            f.status
        }
    }
}

impl From<InitialArgs> for commands::Initial {
    fn from(a: InitialArgs) -> Self {
        match (a.initial, a.initial_file) {
            (Some(text), _) => commands::Initial::Text(text),
            (None, Some(path)) => commands::Initial::File(path),
            (None, None) => commands::Initial::Default,
        }
    }
}

fn main() -> ExitCode {
    ExitCode::from(run(std::env::args_os()) as u8)
}
