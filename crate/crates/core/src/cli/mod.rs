//! Command-line front end: `study`, `train` and `solve`.
//!
//! Exit status is 0 on success, 2 when FAS does not converge (the report is
//! still written) and 1 on usage, configuration or I/O errors.

pub mod commands;
pub mod config;
pub mod model_io;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::Result;
use config::{CoarseOp, ExperimentConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "fas-surrogate", version, about = "Two-level FAS with neural coarse operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Surrogate accuracy tables (one CSV per ratio plus a global table).
    Study(CommonArgs),
    /// Train the per-subdomain networks on the centred box and save them.
    Train(CommonArgs),
    /// Run two-level FAS on the manufactured problem.
    Solve(SolveArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Flat key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides out_dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed (overrides seed).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Coarse operator: true, outside (pretrained models) or inside.
    #[arg(long, value_parser = parse_coarse_op)]
    coarse_op: Option<CoarseOp>,
}

fn parse_coarse_op(s: &str) -> std::result::Result<CoarseOp, String> {
    s.parse().map_err(|e: crate::Error| e.to_string())
}

fn load_config(args: &CommonArgs) -> Result<(ExperimentConfig, PathBuf)> {
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let out = args
        .out
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    Ok((cfg, out))
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Study(args) => {
            let (cfg, out) = load_config(&args)?;
            for path in commands::cmd_study(&cfg, &out)? {
                println!("wrote {}", path.display());
            }
            Ok(EXIT_OK)
        }
        Command::Train(args) => {
            let (cfg, out) = load_config(&args)?;
            let written = commands::cmd_train(&cfg, &out)?;
            println!("wrote {} files to {}", written.len(), out.display());
            Ok(EXIT_OK)
        }
        Command::Solve(args) => {
            let (mut cfg, out) = load_config(&args.common)?;
            if let Some(op) = args.coarse_op {
                cfg.coarse_op = op;
            }
            cfg.validate()?;
            let report = commands::cmd_solve(&cfg, &out)?;
            println!("{}", commands::FAS_REPORT_HEADER);
            for row in commands::report_rows(&report) {
                println!("{row}");
            }
            if report.converged {
                Ok(EXIT_OK)
            } else {
                eprintln!(
                    "FAS did not converge in {} cycles ({} coarse operator)",
                    report.num_cycles(),
                    cfg.coarse_op.name()
                );
                Ok(EXIT_NOT_CONVERGED)
            }
        }
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            EXIT_USAGE
        }
    }
}
