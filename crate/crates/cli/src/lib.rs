//! The `cskl` command-line front end: generation, sketching, merging,
//! learning, privatization, evaluation and criterion scans.
//!
//! Exit codes: 0 success, 2 usage, 3 malformed input, 4 incompatible
//! sketches or tasks, 5 sealed-sketch violations, 6 numerical failures.

pub mod cmd;
pub mod config;
pub mod error;
pub mod files;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::{Config, Resolver};
use crate::error::{io_err, CliResult};

#[derive(Parser, Debug)]
#[command(name = "cskl", version, about = "Compressive learning from random-feature sketches")]
pub struct Cli {
    /// `key = value` settings; flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Refuse to write sketches that are not privatized
    #[arg(long, global = true)]
    pub require_dp: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    Gen(cmd::gen::GenArgs),
    Sketch(cmd::sketch::SketchArgs),
    Merge(cmd::merge::MergeArgs),
    Learn(cmd::learn::LearnArgs),
    Privatize(cmd::privatize::PrivatizeArgs),
    Eval(cmd::eval::EvalArgs),
    Kernelscan(cmd::kernelscan::KernelscanArgs),
}

pub fn run(cli: Cli) -> CliResult<()> {
    let file = match &cli.config {
        Some(path) => Config::parse(&std::fs::read_to_string(path).map_err(io_err(path))?)?,
        None => Config::default(),
    };
    let mut r = Resolver::new(file);
    match cli.command {
        Command::Gen(a) => cmd::gen::run(a, &mut r),
        Command::Sketch(a) => {
            let dp = r.switch("require-dp", cli.require_dp)?;
            cmd::sketch::run(a, &mut r, dp)
        }
        Command::Merge(a) => {
            let dp = r.switch("require-dp", cli.require_dp)?;
            cmd::merge::run(a, &mut r, dp)
        }
        Command::Learn(a) => cmd::learn::run(a, &mut r),
        Command::Privatize(a) => cmd::privatize::run(a, &mut r),
        Command::Eval(a) => cmd::eval::run(a, &mut r),
        Command::Kernelscan(a) => cmd::kernelscan::run(a, &mut r),
    }
}
