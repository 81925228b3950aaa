//! Concurrent page scraping: a retrying, rate-limited fetch over a pluggable
//! transport, run either sequentially or on a fixed-size worker pool. The
//! parallel engine canonicalizes output to input order, so both modes return
//! the identical record list.

mod clock;
mod limiter;
mod transport;

use std::sync::Arc;
use std::time::Instant;

use thiserror::Error;
use url::Url;

use crate::mapreduce::run_indexed;
use crate::record::{ErrorEntry, PipelineConfig, ProductRecord, RunReport, TransportKind};

pub use clock::{Clock, ManualClock, SystemClock};
pub use limiter::RateLimiter;
pub use transport::{
    load_url_list, FixtureTransport, HttpTransport, Route, Transport, TransportError,
    TransportResponse,
};

/// Retry budget for one fetch: up to `max` retries with exponential backoff
/// (`backoff_ms * 2^(attempt-1)`). Transport errors and HTTP 5xx retry; 4xx
/// is terminal.
#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub max: u32,
    pub backoff_ms: u64,
}

/// Terminal status of one fetch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FetchStatus {
    Ok(u16),
    HttpError(u16),
    TransportError(String),
}

/// Outcome of fetching one URL, including the retry audit. Errors are data,
/// never panics; `body` is present exactly when the status is `Ok`.
#[derive(Debug, Clone)]
pub struct FetchResult {
    pub url: String,
    pub status: FetchStatus,
    pub body: Option<String>,
    pub latency_ms: u64,
    pub attempts: u32,
}

impl FetchResult {
    pub fn is_ok(&self) -> bool {
        matches!(self.status, FetchStatus::Ok(_))
    }
}

/// Fetch one URL through the limiter and transport, retrying per policy. One
/// rate-limit token is acquired for the URL's host before every attempt;
/// `latency_ms` accumulates across attempts (excluding backoff waits).
pub fn fetch(
    url: &str,
    transport: &dyn Transport,
    limiter: &RateLimiter,
    clock: &dyn Clock,
    retry: &RetryPolicy,
) -> FetchResult {
    let parsed = match Url::parse(url) {
        Ok(parsed) if parsed.host_str().is_some() => parsed,
        _ => {
            return FetchResult {
                url: url.to_string(),
                status: FetchStatus::TransportError(format!("invalid absolute url `{url}`")),
                body: None,
                latency_ms: 0,
                attempts: 1,
            }
        }
    };
    let host = parsed.host_str().expect("checked above").to_string();

    let mut latency_ms = 0;
    let mut attempt = 0;
    loop {
        attempt += 1;
        limiter.acquire(&host);
        let started = clock.now_ms();
        let outcome = transport.fetch_once(&parsed);
        latency_ms += clock.now_ms().saturating_sub(started);

        let status = match outcome {
            Ok(response) if (200..300).contains(&response.status) => {
                return FetchResult {
                    url: url.to_string(),
                    status: FetchStatus::Ok(response.status),
                    body: Some(response.body),
                    latency_ms,
                    attempts: attempt,
                }
            }
            // 4xx is terminal: retrying a client error cannot help
            Ok(response) if (400..500).contains(&response.status) => {
                return FetchResult {
                    url: url.to_string(),
                    status: FetchStatus::HttpError(response.status),
                    body: None,
                    latency_ms,
                    attempts: attempt,
                }
            }
            Ok(response) => FetchStatus::HttpError(response.status),
            Err(message) => FetchStatus::TransportError(message),
        };

        if attempt > retry.max {
            return FetchResult {
                url: url.to_string(),
                status,
                body: None,
                latency_ms,
                attempts: attempt,
            };
        }
        let factor = 1u64.checked_shl(attempt - 1).unwrap_or(u64::MAX);
        clock.sleep_ms(retry.backoff_ms.saturating_mul(factor));
    }
}

/// Everything a scrape run needs besides the URLs and the extractor.
pub struct ScrapeDeps {
    pub transport: Arc<dyn Transport>,
    pub limiter: Arc<RateLimiter>,
    pub clock: Arc<dyn Clock>,
    pub retry: RetryPolicy,
}

impl ScrapeDeps {
    /// Wire up transport, limiter, and clock from pipeline configuration.
    /// Bucket capacity is the rounded-up per-host rate, so a 2 rps limit
    /// allows bursts of 2.
    pub fn from_config(config: &PipelineConfig) -> Result<Self, TransportError> {
        let clock: Arc<dyn Clock> = Arc::new(SystemClock::new());
        let transport: Arc<dyn Transport> = match &config.transport {
            TransportKind::Http => Arc::new(HttpTransport::new()),
            TransportKind::FixtureDir(root) => {
                Arc::new(FixtureTransport::with_clock(root, clock.clone())?)
            }
        };
        let capacity = config.rate_limit_rps.ceil().max(1.0);
        let limiter = Arc::new(RateLimiter::new(
            config.rate_limit_rps,
            capacity,
            clock.clone(),
        ));
        Ok(ScrapeDeps {
            transport,
            limiter,
            clock,
            retry: RetryPolicy {
                max: config.retry_max,
                backoff_ms: config.retry_backoff_ms,
            },
        })
    }
}

/// Records plus non-fatal issues extracted from one fetched page.
#[derive(Debug, Default)]
pub struct ExtractOutcome {
    pub records: Vec<ProductRecord>,
    pub issues: Vec<String>,
}

impl ExtractOutcome {
    pub fn ok(records: Vec<ProductRecord>) -> Self {
        ExtractOutcome {
            records,
            issues: Vec::new(),
        }
    }
}

/// A page extractor: body text and final URL in, records out.
pub type Extractor = dyn Fn(&str, &Url) -> ExtractOutcome + Send + Sync;

/// Adapt a rule-driven [`PageExtractor`](crate::html::PageExtractor) into an
/// engine extractor. `now` is fixed per run so identical inputs produce
/// byte-identical output files.
pub fn extractor_from_rules(
    page: crate::html::PageExtractor,
    now: chrono::DateTime<chrono::Utc>,
) -> impl Fn(&str, &Url) -> ExtractOutcome + Send + Sync {
    move |body: &str, url: &Url| {
        let extraction = page.extract_page(body, url, now);
        ExtractOutcome {
            records: extraction.records,
            issues: extraction.issues,
        }
    }
}

#[derive(Debug, Error)]
pub enum ScrapeError {
    #[error("url list must not be empty")]
    EmptyUrlList,
    #[error("worker count must be at least 1")]
    ZeroWorkers,
}

struct UrlOutcome {
    records: Vec<ProductRecord>,
    errors: Vec<ErrorEntry>,
    fetched_ok: bool,
    fetch_seconds: f64,
    extract_seconds: f64,
}

fn process_url(url: &str, extractor: &Extractor, deps: &ScrapeDeps) -> UrlOutcome {
    let mut outcome = UrlOutcome {
        records: Vec::new(),
        errors: Vec::new(),
        fetched_ok: false,
        fetch_seconds: 0.0,
        extract_seconds: 0.0,
    };

    let t = Instant::now();
    let fetched = fetch(
        url,
        deps.transport.as_ref(),
        deps.limiter.as_ref(),
        deps.clock.as_ref(),
        &deps.retry,
    );
    outcome.fetch_seconds = t.elapsed().as_secs_f64();

    let body = match (&fetched.status, fetched.body) {
        (FetchStatus::Ok(_), Some(body)) => body,
        (status, _) => {
            let message = match status {
                FetchStatus::HttpError(code) => format!("http error {code}"),
                FetchStatus::TransportError(message) => message.clone(),
                FetchStatus::Ok(_) => unreachable!("ok implies body"),
            };
            outcome.errors.push(ErrorEntry::new(url, "fetch", message));
            return outcome;
        }
    };
    outcome.fetched_ok = true;

    let t = Instant::now();
    let page_url = Url::parse(url).expect("fetch succeeded on a valid url");
    let extraction = extractor(&body, &page_url);
    outcome.extract_seconds = t.elapsed().as_secs_f64();
    for issue in extraction.issues {
        outcome.errors.push(ErrorEntry::new(url, "extract", issue));
    }
    outcome.records = extraction.records;
    outcome
}

fn collect_report(
    mut report: RunReport,
    outcomes: Vec<UrlOutcome>,
    per_worker: Vec<u64>,
    items_in: usize,
    wall_seconds: f64,
) -> (Vec<ProductRecord>, RunReport) {
    report.items_in = items_in as u64;
    report.per_worker_items = per_worker;
    let mut records = Vec::new();
    let mut fetch_seconds = 0.0;
    let mut extract_seconds = 0.0;
    for outcome in outcomes {
        if outcome.fetched_ok {
            report.items_out += 1;
        }
        fetch_seconds += outcome.fetch_seconds;
        extract_seconds += outcome.extract_seconds;
        report.errors.extend(outcome.errors);
        records.extend(outcome.records);
    }
    report
        .per_phase_seconds
        .insert("fetch".to_string(), fetch_seconds);
    report
        .per_phase_seconds
        .insert("extract".to_string(), extract_seconds);
    report.finish(wall_seconds);
    (records, report)
}

/// Fetch, parse, and extract each URL in order on the calling thread.
/// Failed fetches are logged in the report's error ledger and skipped;
/// `items_out` counts successfully fetched pages.
pub fn scrape_sequential(
    urls: &[String],
    extractor: &Extractor,
    deps: &ScrapeDeps,
) -> Result<(Vec<ProductRecord>, RunReport), ScrapeError> {
    if urls.is_empty() {
        return Err(ScrapeError::EmptyUrlList);
    }
    let report = RunReport::start();
    let started = Instant::now();
    let outcomes: Vec<UrlOutcome> = urls
        .iter()
        .map(|url| process_url(url, extractor, deps))
        .collect();
    let wall = started.elapsed().as_secs_f64();
    Ok(collect_report(
        report,
        outcomes,
        vec![urls.len() as u64],
        urls.len(),
        wall,
    ))
}

/// Like [`scrape_sequential`], but URLs are dispatched to a fixed pool of
/// `workers` pulling from a shared queue. Records are re-sorted to (source
/// URL order, extraction order), so the output list is identical to the
/// sequential run's.
pub fn scrape_parallel(
    urls: &[String],
    extractor: &Extractor,
    deps: &ScrapeDeps,
    workers: usize,
) -> Result<(Vec<ProductRecord>, RunReport), ScrapeError> {
    if urls.is_empty() {
        return Err(ScrapeError::EmptyUrlList);
    }
    if workers == 0 {
        return Err(ScrapeError::ZeroWorkers);
    }
    let report = RunReport::start();
    let started = Instant::now();
    let run = run_indexed(workers, urls.to_vec(), |url| {
        process_url(url, extractor, deps)
    });
    let wall = started.elapsed().as_secs_f64();
    Ok(collect_report(report, run.results, run.per_worker, urls.len(), wall))
}
