//! `bench`: run synthetic or fixture workloads across dataset sizes and
//! worker counts, and report wall times with speedup relative to the
//! one-worker baseline of the same size.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, ValueEnum};

use scrapereduce::jobs::{self, default_pattern_rules};
use scrapereduce::mapreduce::execute;
use scrapereduce::record::{PipelineConfig, TransportKind};
use scrapereduce::scrape::{extractor_from_rules, load_url_list, scrape_parallel, ScrapeDeps};

use crate::{config, CmdResult, Failure, SharedArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Workload {
    /// Word count over generated text lines
    WordcountSynthetic,
    /// Regex field extraction over generated product descriptions
    RegexSynthetic,
    /// Fixture-directory scraping (honors manifest latency)
    ScrapeFixture,
}

impl Workload {
    fn name(self) -> &'static str {
        match self {
            Workload::WordcountSynthetic => "wordcount-synthetic",
            Workload::RegexSynthetic => "regex-synthetic",
            Workload::ScrapeFixture => "scrape-fixture",
        }
    }
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Workload to measure
    #[arg(long, value_enum)]
    pub workload: Workload,

    /// Dataset sizes (records, lines, or pages)
    #[arg(long, value_delimiter = ',', required = true)]
    pub sizes: Vec<usize>,

    /// Repetitions per (size, workers) cell
    #[arg(long, default_value_t = 3)]
    pub reps: usize,

    /// Bench table output file (CSV)
    #[arg(long)]
    pub out: PathBuf,

    /// URL list for the scrape-fixture workload
    #[arg(long)]
    pub urls: Option<PathBuf>,

    /// Extraction rules for the scrape-fixture workload
    #[arg(long)]
    pub rules: Option<PathBuf>,
}

struct Cell {
    size: usize,
    workers: usize,
    walls: Vec<Result<f64, String>>,
}

pub fn run(shared: &SharedArgs, args: BenchArgs) -> CmdResult {
    if args.reps == 0 {
        return Err(Failure::input(anyhow::anyhow!("--reps must be at least 1")));
    }
    if args.sizes.contains(&0) {
        return Err(Failure::input(anyhow::anyhow!("--sizes entries must be at least 1")));
    }
    let file = shared.config_file()?;
    let overrides = config::Overrides {
        workers: None, // bench interprets --workers as a list itself
        chunks: shared.chunks,
        chunk_size: shared.chunk_size,
        transport: shared.transport.clone(),
    };
    let (mut pipeline, _) = config::resolve(file.as_ref(), &overrides).map_err(Failure::input)?;
    // measurement harness, not a polite crawl: open up the limiter unless
    // the config file pinned a rate explicitly
    if file.as_ref().and_then(|f| f.rate_limit_rps).is_none() {
        pipeline.rate_limit_rps = 1_000_000.0;
    }

    // always measure a workers=1 baseline per size
    let mut worker_counts = if shared.workers.is_empty() {
        vec![1, 2]
    } else {
        shared.workers.clone()
    };
    if !worker_counts.contains(&1) {
        worker_counts.insert(0, 1);
    }
    if worker_counts.contains(&0) {
        return Err(Failure::input(anyhow::anyhow!("--workers entries must be at least 1")));
    }

    let mut cells: BTreeMap<(usize, usize), Cell> = BTreeMap::new();
    for &size in &args.sizes {
        for &workers in &worker_counts {
            cells.insert(
                (size, workers),
                Cell {
                    size,
                    workers,
                    walls: Vec::new(),
                },
            );
        }
    }

    // interleave repetitions so load drift hits every cell evenly
    for rep in 0..args.reps {
        for &size in &args.sizes {
            for &workers in &worker_counts {
                let wall = run_cell(&args, shared, &pipeline, size, workers);
                if let Err(message) = &wall {
                    eprintln!("bench: cell size={size} workers={workers} rep={rep} failed: {message}");
                }
                cells.get_mut(&(size, workers)).expect("cell exists").walls.push(wall);
            }
        }
    }

    // medians per cell, then speedup against the same-size baseline median
    let median_of = |cell: &Cell| -> Option<f64> {
        let mut oks: Vec<f64> = cell.walls.iter().filter_map(|w| w.as_ref().ok()).copied().collect();
        if oks.is_empty() {
            return None;
        }
        oks.sort_by(|a, b| a.partial_cmp(b).expect("finite walls"));
        Some(oks[oks.len() / 2])
    };
    let mut baseline: BTreeMap<usize, f64> = BTreeMap::new();
    for cell in cells.values() {
        if cell.workers == 1 {
            if let Some(median) = median_of(cell) {
                baseline.insert(cell.size, median);
            }
        }
    }

    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(&args.out)
        .map_err(Failure::input)?;
    writer
        .write_record(["workload", "size", "workers", "rep", "wall_seconds", "speedup_vs_1"])
        .map_err(Failure::input)?;
    for cell in cells.values() {
        let speedup = match (median_of(cell), baseline.get(&cell.size)) {
            (Some(median), Some(base)) => format!("{:.3}", base / median),
            _ => String::new(),
        };
        for (rep, wall) in cell.walls.iter().enumerate() {
            let wall_text = match wall {
                Ok(seconds) => format!("{seconds:.6}"),
                Err(_) => "error".to_string(),
            };
            writer
                .write_record([
                    args.workload.name(),
                    &cell.size.to_string(),
                    &cell.workers.to_string(),
                    &rep.to_string(),
                    &wall_text,
                    &speedup,
                ])
                .map_err(Failure::input)?;
        }
        if let Some(median) = median_of(cell) {
            println!(
                "bench: {} size={} workers={} median={:.3}s speedup_vs_1={speedup}",
                args.workload.name(),
                cell.size,
                cell.workers,
                median,
            );
        }
    }
    writer.flush().map_err(Failure::input)?;
    println!("bench: table written to {}", args.out.display());
    Ok(())
}

fn run_cell(
    args: &BenchArgs,
    shared: &SharedArgs,
    pipeline: &PipelineConfig,
    size: usize,
    workers: usize,
) -> Result<f64, String> {
    let mut config = pipeline.clone();
    config.worker_count = workers;
    config.output_path = None;
    match args.workload {
        Workload::WordcountSynthetic => {
            let lines = jobs::synthetic::wordcount_lines(size, size as u64);
            let job = jobs::wordcount_job(config);
            let (_, report) = execute(&job, lines, false).map_err(|e| e.to_string())?;
            Ok(report.wall_seconds)
        }
        Workload::RegexSynthetic => {
            let records = jobs::synthetic::product_records(size, size as u64);
            let rules = match &shared.patterns {
                Some(path) => jobs::load_pattern_rules(path).map_err(|e| e.to_string())?,
                None => default_pattern_rules(),
            };
            let job = jobs::extract_job(rules, config);
            let (_, report) = execute(&job, records, false).map_err(|e| e.to_string())?;
            Ok(report.wall_seconds)
        }
        Workload::ScrapeFixture => {
            if !matches!(config.transport, TransportKind::FixtureDir(_)) {
                return Err("scrape-fixture needs --transport fixture:<dir>".to_string());
            }
            let urls_path = args
                .urls
                .as_ref()
                .ok_or_else(|| "scrape-fixture needs --urls <file>".to_string())?;
            let all_urls = load_url_list(urls_path).map_err(|e| e.to_string())?;
            if all_urls.is_empty() {
                return Err(format!("{} contains no urls", urls_path.display()));
            }
            let urls: Vec<String> = (0..size).map(|i| all_urls[i % all_urls.len()].clone()).collect();

            let rules_path = args
                .rules
                .as_ref()
                .ok_or_else(|| "scrape-fixture needs --rules <file>".to_string())?;
            let rules =
                scrapereduce::html::ExtractionRules::from_path(rules_path).map_err(|e| e.to_string())?;
            let cards = scrapereduce::html::Selector::parse(
                scrapereduce::html::DEFAULT_PRODUCT_CARD_SELECTOR,
            )
            .expect("default selector parses");
            let now = scrapereduce::record::parse_timestamp("2024-05-01T00:00:00Z")
                .expect("static timestamp");
            let extractor =
                extractor_from_rules(scrapereduce::html::PageExtractor::new(cards, rules), now);

            // fresh deps per run so scripted fixture state resets
            let deps = ScrapeDeps::from_config(&config).map_err(|e| e.to_string())?;
            let (_, report) =
                scrape_parallel(&urls, &extractor, &deps, workers).map_err(|e| e.to_string())?;
            Ok(report.wall_seconds)
        }
    }
}
