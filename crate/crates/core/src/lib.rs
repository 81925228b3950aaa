//! Scrape-and-reduce toolkit: a concurrent page fetcher with DOM extraction
//! that produces structured product records, and a chunked multi-worker
//! map/shuffle/reduce engine for cleaning and analyzing them.
//!
//! The crate is organized around the pipeline stages:
//!
//! * [`record`] — the product schema, intermediate key/value types, pipeline
//!   configuration, and run reports.
//! * [`csvio`] — deterministic CSV (RFC 4180) and JSON serialization.
//! * [`html`] — lenient HTML parsing, a small selector language, and
//!   rule-driven field extraction.
//! * [`scrape`] — transports, per-host rate limiting, retrying fetch, and the
//!   sequential/parallel scrape engines.
//! * [`clean`] — filtering, deduplication, and normalization of records.
//! * [`mapreduce`] — chunking, the worker pool, shuffle, and job execution.
//! * [`jobs`] — the built-in word-count and regex field-extraction jobs.

pub mod clean;
pub mod csvio;
pub mod html;
pub mod jobs;
pub mod mapreduce;
pub mod record;
pub mod scrape;

pub use record::{
    Chunk, Chunking, ErrorEntry, Fulfillment, GroupedPairs, KeyValuePair, PipelineConfig,
    ProductRecord, RunReport, StrainType, TransportKind, Value,
};
