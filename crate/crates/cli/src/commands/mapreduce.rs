//! `mapreduce`: run a built-in job (word count over text lines, or regex
//! field extraction over a products CSV) on the chunked worker-pool engine.

use std::path::PathBuf;

use clap::{Args, ValueEnum};

use scrapereduce::csvio::{read_csv, write_json};
use scrapereduce::jobs::{self, default_pattern_rules, load_pattern_rules};
use scrapereduce::mapreduce::{execute, report_path_for};
use scrapereduce::record::{KeyValuePair, ProductRecord, RunReport};

use crate::{config, CmdResult, Failure, OutputFormat, SharedArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Job {
    /// Count word occurrences in a text file
    Wordcount,
    /// Mine measurements out of the Description column of a products CSV
    Extract,
}

#[derive(Debug, Args)]
pub struct MapreduceArgs {
    /// Which built-in job to run
    #[arg(value_enum)]
    pub job: Job,

    /// Input file: text lines for wordcount, a products CSV for extract
    #[arg(long)]
    pub input: PathBuf,

    /// Output results file
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(shared: &SharedArgs, args: MapreduceArgs) -> CmdResult {
    let file = shared.config_file()?;
    let (mut pipeline, _) =
        config::resolve(file.as_ref(), &shared.overrides()?).map_err(Failure::input)?;
    pipeline.input_path = Some(args.input.clone());
    // csv output is written inside execute(); json is mirrored afterwards
    pipeline.output_path = match shared.format {
        OutputFormat::Csv => Some(args.out.clone()),
        OutputFormat::Json => None,
    };

    let (results, report) = match args.job {
        Job::Wordcount => {
            let text = std::fs::read_to_string(&args.input).map_err(|e| {
                Failure::input(anyhow::anyhow!("failed to read {}: {e}", args.input.display()))
            })?;
            let lines: Vec<String> = text.lines().map(String::from).collect();
            let job = jobs::wordcount_job(pipeline);
            execute(&job, lines, shared.allow_partial).map_err(Failure::input)?
        }
        Job::Extract => {
            let records: Vec<ProductRecord> = read_csv(&args.input).map_err(Failure::input)?;
            let rules = match &shared.patterns {
                Some(path) => load_pattern_rules(path).map_err(Failure::input)?,
                None => default_pattern_rules(),
            };
            let job = jobs::extract_job(rules, pipeline);
            execute(&job, records, shared.allow_partial).map_err(Failure::input)?
        }
    };

    if shared.format == OutputFormat::Json {
        write_mirror(&results, &report, &args.out, shared.allow_partial)?;
    }

    println!(
        "mapreduce: {} items in, {} results, {} errors -> {}",
        report.items_in,
        report.items_out,
        report.errors.len(),
        args.out.display()
    );
    Ok(())
}

fn write_mirror(
    results: &[KeyValuePair],
    report: &RunReport,
    out: &std::path::Path,
    allow_partial: bool,
) -> CmdResult {
    if report.errors.is_empty() || allow_partial {
        write_json(results, out).map_err(Failure::input)?;
    }
    report
        .write_json(&report_path_for(out))
        .map_err(Failure::input)?;
    Ok(())
}
