//! Command-line front end for `anasamp`.
//!
//! Every command writes its result to the given writer and returns the
//! process exit status: 0 on success, 1 for domain errors (invalid
//! specification, invalid coordinates, degenerate family, ...), 2 for I/O
//! and usage errors.

mod commands;
mod input;
pub mod report;
pub mod table1;

use std::io::Write;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use commands::{chi2_from_draws, run_sample};
pub use input::{parse_level_list, parse_named_value, Loaded, SpecSource};

/// Default size ceiling for a single attempt.
pub const DEFAULT_MAX_SIZE: u64 = 10_000_000;

#[derive(Debug, Parser)]
#[command(
    name = "anasamp",
    version,
    about = "Analytic samplers for combinatorial specifications"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a specification and print minimal sizes and errors.
    Validate {
        #[arg(long)]
        spec: String,
    },
    /// Print the exact counts c_0..c_n of a class.
    Coeffs {
        #[command(flatten)]
        spec: SpecArgs,
        /// Highest size n.
        #[arg(long)]
        count: usize,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Evaluate a generating function by fixed-point iteration.
    Gf {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        z: f64,
    },
    /// Locate the singularity of a simply generated family.
    Tune(TuneArgs),
    /// Run sampling attempts and report tallies and size statistics.
    Sample(SampleArgs),
    /// Reproduce the Cayley-tree failure table.
    Table1(Table1Args),
    /// Chi-square test of uniformity among objects of one size.
    Chi2(Chi2Args),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Maximize,
    Bisect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Emit {
    Sizes,
    Trees,
    Stats,
}

#[derive(Debug, Clone, Args)]
pub struct SpecArgs {
    /// Specification file, or a builtin: @binary, @otter, @cayley.
    #[arg(long)]
    pub spec: String,
    /// Class to work on; defaults to the first one defined.
    #[arg(long = "class-name")]
    pub class_name: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct CoordArgs {
    #[arg(long)]
    pub z: Option<f64>,
    /// Level-0 value of a class, `NAME=V`.
    #[arg(long = "value", value_parser = parse_named_value)]
    pub values: Vec<(String, f64)>,
    /// Values at levels 0, 1, ..., `NAME=v0,v1,...`.
    #[arg(long = "levels", value_parser = parse_level_list)]
    pub levels: Vec<(String, Vec<f64>)>,
    /// Tail constant past the explicit levels, `NAME=K`.
    #[arg(long = "tail-k", value_parser = parse_named_value)]
    pub tail_k: Vec<(String, f64)>,
    /// Number of exactly solved levels for @otter.
    #[arg(long)]
    pub i0: Option<u32>,
}

#[derive(Debug, Clone, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[command(flatten)]
    pub coords: CoordArgs,
    /// Number of attempts, or of accepted objects when `--target` is set.
    #[arg(long, default_value_t = 1000)]
    pub count: u64,
    #[arg(long, env = "ANASAMP_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "max-size", default_value_t = DEFAULT_MAX_SIZE)]
    pub max_size: u64,
    /// Accept only sizes within `target·(1 ± tolerance)`.
    #[arg(long)]
    pub target: Option<u64>,
    #[arg(long, default_value_t = 0.1)]
    pub tolerance: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, value_enum, default_value_t = Emit::Stats)]
    pub emit: Emit,
}

#[derive(Debug, Clone, Args)]
pub struct TuneArgs {
    /// Degree multiset, e.g. `0,1,2`. Alternative to `--spec`.
    pub omega: Option<String>,
    #[arg(long)]
    pub spec: Option<String>,
    #[arg(long = "class-name")]
    pub class_name: Option<String>,
    #[arg(long, value_enum, default_value_t = Method::Maximize)]
    pub method: Method,
    /// Target accuracy of the located point.
    #[arg(long, default_value_t = 1e-10)]
    pub tolerance: f64,
}

#[derive(Debug, Clone, Args)]
pub struct Table1Args {
    /// Calls per row; 0 prints the theoretical column only.
    #[arg(long, default_value_t = 1000)]
    pub count: u64,
    #[arg(long, env = "ANASAMP_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "max-size", default_value_t = DEFAULT_MAX_SIZE)]
    pub max_size: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Args)]
pub struct Chi2Args {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[command(flatten)]
    pub coords: CoordArgs,
    /// Size n the samples are conditioned on.
    #[arg(long)]
    pub target: u64,
    /// Number of conditioned samples.
    #[arg(long, default_value_t = 10_000)]
    pub count: u64,
    #[arg(long, env = "ANASAMP_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    Usage(String),
    Io(String),
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Usage(_) | CliError::Io(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Domain(m) => m,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Runs a parsed command line, printing results to `out` and error messages
/// to `err`. Returns the exit status.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match cli.command {
        Command::Validate { spec } => commands::validate(&spec, out),
        Command::Coeffs {
            spec,
            count,
            format,
        } => commands::coeffs(&spec, count, format, out),
        Command::Gf { spec, z } => commands::gf(&spec, z, out),
        Command::Tune(args) => commands::tune(&args, out),
        Command::Sample(args) => commands::sample(&args, out),
        Command::Table1(args) => commands::table1(&args, out),
        Command::Chi2(args) => commands::chi2(&args, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message());
            e.exit_code()
        }
    }
}
