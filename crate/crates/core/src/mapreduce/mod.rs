//! Chunked MapReduce: split the input into contiguous chunks, map them on a
//! worker pool, shuffle and sort intermediate pairs by key, reduce groups on
//! the pool again, and write the output. Results are canonicalized so every
//! worker count produces the identical output list.

mod pool;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use thiserror::Error;

use crate::csvio;
use crate::record::{
    Chunk, Chunking, ErrorEntry, GroupedPairs, KeyValuePair, PipelineConfig, RunReport, Value,
};

pub use pool::{run_indexed, PoolRun};

/// Mapper: one input item to zero or more key/value pairs. Errors are
/// values, not panics, though panics are also contained per chunk.
pub type Mapper<I> = Arc<dyn Fn(&I) -> Result<Vec<KeyValuePair>, String> + Send + Sync>;

/// Reducer: one key and all of its values to a single output pair. A
/// combiner has the same shape and must be pre-aggregation compatible with
/// the reducer.
pub type Reducer = Arc<dyn Fn(&str, &[Value]) -> Result<KeyValuePair, String> + Send + Sync>;

/// A complete MapReduce job: the user functions plus pipeline configuration.
pub struct JobSpec<I> {
    pub mapper: Mapper<I>,
    pub reducer: Reducer,
    pub combiner: Option<Reducer>,
    pub config: PipelineConfig,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Output(#[from] csvio::CsvError),
    #[error("failed to write report: {0}")]
    Report(#[from] std::io::Error),
}

/// Split items into contiguous, index-ordered chunks. With `Count(n)` the
/// sizes differ by at most one; with `Size(s)` every chunk is full except
/// possibly the last. Empty input yields no chunks; no chunk is ever empty.
pub fn make_chunks<T>(items: Vec<T>, policy: Chunking) -> Vec<Chunk<T>> {
    if items.is_empty() {
        return Vec::new();
    }
    let len = items.len();
    let sizes: Vec<usize> = match policy {
        Chunking::Count(n) => {
            let n = n.max(1).min(len);
            let base = len / n;
            let remainder = len % n;
            (0..n)
                .map(|i| if i < remainder { base + 1 } else { base })
                .collect()
        }
        Chunking::Size(s) => {
            let s = s.max(1);
            let full = len / s;
            let tail = len % s;
            let mut sizes = vec![s; full];
            if tail > 0 {
                sizes.push(tail);
            }
            sizes
        }
    };

    let mut chunks = Vec::with_capacity(sizes.len());
    let mut iter = items.into_iter();
    for (index, size) in sizes.into_iter().enumerate() {
        chunks.push(Chunk {
            index,
            records: iter.by_ref().take(size).collect(),
        });
    }
    chunks
}

fn run_user_fn<R>(f: impl FnOnce() -> Result<R, String>) -> Result<R, String> {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(result) => result,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic in user function".to_string());
            Err(format!("panicked: {msg}"))
        }
    }
}

/// Output of the map phase: pairs in canonical (chunk index, emission)
/// order, the error ledger, and the per-worker scheduling audit.
pub struct MapPhase {
    pub pairs: Vec<KeyValuePair>,
    pub errors: Vec<ErrorEntry>,
    pub per_worker: Vec<u64>,
}

/// Map every chunk on the pool. A failing mapper invocation poisons only its
/// own chunk: the chunk's emissions are discarded and an error entry records
/// the chunk index and item ordinal, while other chunks proceed.
pub fn run_map<I: Send + Sync>(
    chunks: Vec<Chunk<I>>,
    mapper: &Mapper<I>,
    workers: usize,
) -> MapPhase {
    run_map_with_combiner(chunks, mapper, None, workers)
}

pub fn run_map_with_combiner<I: Send + Sync>(
    chunks: Vec<Chunk<I>>,
    mapper: &Mapper<I>,
    combiner: Option<&Reducer>,
    workers: usize,
) -> MapPhase {
    let run = pool::run_indexed(workers, chunks, |chunk| {
        let mut emitted = Vec::new();
        for (ordinal, item) in chunk.records.iter().enumerate() {
            match run_user_fn(|| mapper(item)) {
                Ok(pairs) => emitted.extend(pairs),
                Err(message) => {
                    return Err(ErrorEntry::new(
                        format!("chunk {} item {}", chunk.index, ordinal),
                        "map",
                        message,
                    ))
                }
            }
        }
        if let Some(combiner) = combiner {
            match combine_chunk(emitted, combiner) {
                Ok(combined) => emitted = combined,
                Err(message) => {
                    return Err(ErrorEntry::new(
                        format!("chunk {}", chunk.index),
                        "combine",
                        message,
                    ))
                }
            }
        }
        Ok(emitted)
    });

    let mut pairs = Vec::new();
    let mut errors = Vec::new();
    for chunk_result in run.results {
        match chunk_result {
            Ok(emitted) => pairs.extend(emitted),
            Err(entry) => errors.push(entry),
        }
    }
    MapPhase {
        pairs,
        errors,
        per_worker: run.per_worker,
    }
}

/// Pre-aggregate one chunk's emissions with the combiner, preserving
/// first-emission key order within the chunk.
fn combine_chunk(pairs: Vec<KeyValuePair>, combiner: &Reducer) -> Result<Vec<KeyValuePair>, String> {
    let mut order: Vec<String> = Vec::new();
    let mut grouped: BTreeMap<String, Vec<Value>> = BTreeMap::new();
    for pair in pairs {
        grouped
            .entry(pair.key.clone())
            .or_insert_with(|| {
                order.push(pair.key.clone());
                Vec::new()
            })
            .push(pair.value);
    }
    let mut out = Vec::with_capacity(order.len());
    for key in order {
        let values = grouped.remove(&key).expect("key recorded on insert");
        out.push(run_user_fn(|| combiner(&key, &values))?);
    }
    Ok(out)
}

/// Group pairs by exact key, values in first-emission order, groups sorted
/// ascending by key bytes.
pub fn shuffle(pairs: Vec<KeyValuePair>) -> Vec<GroupedPairs> {
    let mut grouped: BTreeMap<String, Vec<Value>> = BTreeMap::new();
    for pair in pairs {
        grouped.entry(pair.key).or_default().push(pair.value);
    }
    grouped
        .into_iter()
        .map(|(key, values)| GroupedPairs { key, values })
        .collect()
}

/// Output of the reduce phase: pairs in group (key) order plus the error
/// ledger.
pub struct ReducePhase {
    pub pairs: Vec<KeyValuePair>,
    pub errors: Vec<ErrorEntry>,
    pub per_worker: Vec<u64>,
}

/// Reduce every group on the pool, one reducer call per group. Output order
/// follows group order regardless of scheduling; errors are isolated per
/// group.
pub fn run_reduce(groups: Vec<GroupedPairs>, reducer: &Reducer, workers: usize) -> ReducePhase {
    // batch groups so pool bookkeeping stays negligible next to reduce work
    let batch_count = (workers * 8).max(1);
    let batches = make_chunks(groups, Chunking::Count(batch_count));
    let run = pool::run_indexed(workers, batches, |batch| {
        batch
            .records
            .iter()
            .map(|group| {
                run_user_fn(|| reducer(&group.key, &group.values)).map_err(|message| {
                    ErrorEntry::new(group.key.clone(), "reduce", message)
                })
            })
            .collect::<Vec<_>>()
    });

    let mut pairs = Vec::new();
    let mut errors = Vec::new();
    for batch in run.results {
        for result in batch {
            match result {
                Ok(pair) => pairs.push(pair),
                Err(entry) => errors.push(entry),
            }
        }
    }
    ReducePhase {
        pairs,
        errors,
        per_worker: run.per_worker,
    }
}

/// Run the whole job: chunk, map (with optional per-chunk combining),
/// shuffle, reduce, and write the output file when configured.
///
/// The output file is written only when the error ledger is empty, unless
/// `allow_partial` is set; the run report is written beside it as
/// `<output>.report.json` either way.
pub fn execute<I: Send + Sync>(
    job: &JobSpec<I>,
    items: Vec<I>,
    allow_partial: bool,
) -> Result<(Vec<KeyValuePair>, RunReport), PipelineError> {
    job.config.validate().map_err(PipelineError::Config)?;
    let mut report = RunReport::start();
    report.items_in = items.len() as u64;
    let t_run = Instant::now();

    let t = Instant::now();
    let chunks = make_chunks(items, job.config.chunking);
    report
        .per_phase_seconds
        .insert("chunk".to_string(), t.elapsed().as_secs_f64());

    let t = Instant::now();
    let map_phase = run_map_with_combiner(
        chunks,
        &job.mapper,
        job.combiner.as_ref(),
        job.config.worker_count,
    );
    report
        .per_phase_seconds
        .insert("map".to_string(), t.elapsed().as_secs_f64());
    report.per_worker_items = map_phase.per_worker;
    report.errors.extend(map_phase.errors);

    let t = Instant::now();
    let groups = shuffle(map_phase.pairs);
    report
        .per_phase_seconds
        .insert("shuffle".to_string(), t.elapsed().as_secs_f64());

    let t = Instant::now();
    let reduce_phase = run_reduce(groups, &job.reducer, job.config.worker_count);
    report
        .per_phase_seconds
        .insert("reduce".to_string(), t.elapsed().as_secs_f64());
    report.errors.extend(reduce_phase.errors);

    let results = reduce_phase.pairs;
    report.items_out = results.len() as u64;

    if let Some(output_path) = &job.config.output_path {
        let t = Instant::now();
        if report.errors.is_empty() || allow_partial {
            csvio::write_csv(&results, output_path)?;
        }
        report
            .per_phase_seconds
            .insert("write".to_string(), t.elapsed().as_secs_f64());
        report.finish(t_run.elapsed().as_secs_f64());
        let report_path = report_path_for(output_path);
        report.write_json(&report_path)?;
    } else {
        report.finish(t_run.elapsed().as_secs_f64());
    }

    Ok((results, report))
}

/// Report path convention: `<output>.report.json` beside the output file.
pub fn report_path_for(output_path: &std::path::Path) -> std::path::PathBuf {
    let mut name = output_path.as_os_str().to_os_string();
    name.push(".report.json");
    std::path::PathBuf::from(name)
}
