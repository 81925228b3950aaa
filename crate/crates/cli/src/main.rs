//! Command-line front end: URL discovery, concurrent scraping, MapReduce
//! jobs, and the speedup benchmark harness.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Exit codes: 0 success, 2 input/configuration error, 3 produced nothing.
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn input(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code: 2,
            error: error.into(),
        }
    }

    pub fn empty(message: &str) -> Self {
        Failure {
            code: 3,
            error: anyhow::anyhow!("{message}"),
        }
    }
}

pub type CmdResult = Result<(), Failure>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct SharedArgs {
    /// Worker pool size; `bench` accepts a comma-separated list
    #[arg(long, value_delimiter = ',', global = true)]
    pub workers: Vec<usize>,

    /// Split inputs into this many chunks
    #[arg(long, global = true)]
    pub chunks: Option<usize>,

    /// Split inputs into chunks of this size (mutually exclusive with --chunks)
    #[arg(long, global = true, conflicts_with = "chunks")]
    pub chunk_size: Option<usize>,

    /// `http` or `fixture:<dir>`
    #[arg(long, global = true)]
    pub transport: Option<String>,

    /// Output format for data files
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,

    /// JSON configuration file; flags override file values
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Pattern rules file for the extract job
    #[arg(long, global = true)]
    pub patterns: Option<PathBuf>,

    /// Write output files even when the run recorded errors
    #[arg(long, global = true)]
    pub allow_partial: bool,
}

impl SharedArgs {
    /// The single worker count used by non-bench commands.
    pub fn single_workers(&self) -> Result<Option<usize>, Failure> {
        match self.workers.as_slice() {
            [] => Ok(None),
            [one] => Ok(Some(*one)),
            more => Err(Failure::input(anyhow::anyhow!(
                "expected a single --workers value, got {more:?} (lists are for `bench`)"
            ))),
        }
    }

    pub fn overrides(&self) -> Result<config::Overrides, Failure> {
        Ok(config::Overrides {
            workers: self.single_workers()?,
            chunks: self.chunks,
            chunk_size: self.chunk_size,
            transport: self.transport.clone(),
        })
    }

    pub fn config_file(&self) -> Result<Option<config::ConfigFile>, Failure> {
        match &self.config {
            None => Ok(None),
            Some(path) => config::ConfigFile::load(path).map(Some).map_err(Failure::input),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "scrapereduce",
    version,
    about = "Concurrent menu scraping and chunked MapReduce analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    shared: SharedArgs,
}

#[derive(Subcommand)]
enum Command {
    /// Extract dispensary menu URLs from a listing page into a URL file
    Discover(commands::discover::DiscoverArgs),
    /// Fetch, extract, and clean product records from a URL list
    Scrape(commands::scrape::ScrapeArgs),
    /// Run a built-in MapReduce job over a local input file
    Mapreduce(commands::mapreduce::MapreduceArgs),
    /// Measure wall time and speedup across dataset sizes and worker counts
    Bench(commands::bench::BenchArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Discover(args) => commands::discover::run(&cli.shared, args),
        Command::Scrape(args) => commands::scrape::run(&cli.shared, args),
        Command::Mapreduce(args) => commands::mapreduce::run(&cli.shared, args),
        Command::Bench(args) => commands::bench::run(&cli.shared, args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {:#}", failure.error);
            ExitCode::from(failure.code)
        }
    }
}
