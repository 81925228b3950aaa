pub mod bench;
pub mod discover;
pub mod mapreduce;
pub mod scrape;

use scrapereduce::record::truncate_to_seconds;

/// Parse `--fixed-now`, falling back to the current time. Fixing the
/// timestamp makes repeated runs byte-identical.
pub fn resolve_now(
    fixed: Option<&str>,
) -> Result<chrono::DateTime<chrono::Utc>, crate::Failure> {
    match fixed {
        Some(text) => scrapereduce::record::parse_timestamp(text)
            .map_err(|e| crate::Failure::input(anyhow::anyhow!(e))),
        None => Ok(truncate_to_seconds(chrono::Utc::now())),
    }
}
