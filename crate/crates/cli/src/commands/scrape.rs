//! `scrape`: fetch every URL in a list on the worker pool, extract product
//! records with the rule file, run the cleaning stage, and write the output
//! plus a run report.

use std::path::PathBuf;
use std::time::Instant;

use clap::Args;

use scrapereduce::clean::clean_pipeline;
use scrapereduce::csvio::{write_csv, write_json};
use scrapereduce::html::{ExtractionRules, PageExtractor, Selector};
use scrapereduce::mapreduce::report_path_for;
use scrapereduce::record::ErrorEntry;
use scrapereduce::scrape::{
    extractor_from_rules, load_url_list, scrape_parallel, scrape_sequential, ScrapeDeps,
};

use crate::{config, CmdResult, Failure, OutputFormat, SharedArgs};

#[derive(Debug, Args)]
pub struct ScrapeArgs {
    /// URL list file: one URL per line, `#` comments allowed
    pub urls: PathBuf,

    /// Extraction rules file (JSON map: field -> {selector, capture})
    #[arg(long)]
    pub rules: PathBuf,

    /// Output records file
    #[arg(long)]
    pub out: PathBuf,

    /// Selector scoping one product card
    #[arg(long, default_value = scrapereduce::html::DEFAULT_PRODUCT_CARD_SELECTOR)]
    pub cards: String,

    /// Run strictly sequentially instead of on the worker pool
    #[arg(long)]
    pub seq: bool,

    /// Fixed extraction timestamp (ISO-8601 UTC) for reproducible output
    #[arg(long)]
    pub fixed_now: Option<String>,
}

pub fn run(shared: &SharedArgs, args: ScrapeArgs) -> CmdResult {
    let file = shared.config_file()?;
    let (pipeline, policy) =
        config::resolve(file.as_ref(), &shared.overrides()?).map_err(Failure::input)?;

    let urls = load_url_list(&args.urls).map_err(|e| {
        Failure::input(anyhow::anyhow!("failed to read url list {}: {e}", args.urls.display()))
    })?;
    if urls.is_empty() {
        return Err(Failure::input(anyhow::anyhow!(
            "url list {} contains no urls",
            args.urls.display()
        )));
    }
    let rules = ExtractionRules::from_path(&args.rules).map_err(Failure::input)?;
    let cards = Selector::parse(&args.cards).map_err(Failure::input)?;
    let now = super::resolve_now(args.fixed_now.as_deref())?;

    let deps = ScrapeDeps::from_config(&pipeline).map_err(Failure::input)?;
    let extractor = extractor_from_rules(PageExtractor::new(cards, rules), now);
    let scraped = if args.seq {
        scrape_sequential(&urls, &extractor, &deps)
    } else {
        scrape_parallel(&urls, &extractor, &deps, pipeline.worker_count)
    };
    let (records, mut report) = scraped.map_err(Failure::input)?;

    let t = Instant::now();
    let (cleaned, dropped) = clean_pipeline(records, &policy);
    report
        .per_phase_seconds
        .insert("clean".to_string(), t.elapsed().as_secs_f64());
    for drop in &dropped {
        report.errors.push(ErrorEntry::new(
            drop.record.product_url.clone(),
            "clean",
            drop.reason.to_string(),
        ));
    }

    let bytes = match shared.format {
        OutputFormat::Csv => write_csv(&cleaned, &args.out),
        OutputFormat::Json => write_json(&cleaned, &args.out),
    }
    .map_err(Failure::input)?;
    report
        .write_json(&report_path_for(&args.out))
        .map_err(Failure::input)?;

    println!(
        "scrape: {} urls, {} records kept, {} dropped, {} errors, {bytes} bytes -> {}",
        urls.len(),
        cleaned.len(),
        dropped.len(),
        report.errors.len(),
        args.out.display()
    );
    if cleaned.is_empty() {
        return Err(Failure::empty("no records produced"));
    }
    Ok(())
}
