//! Data cleaning: filtering, deduplication, and normalization of product
//! records before analysis.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::html::collapse_whitespace;
use crate::record::{ProductRecord, PRODUCT_FIELDS};

#[derive(Debug, Error)]
pub enum CleanError {
    #[error("dedup_key must not be empty")]
    EmptyDedupKey,
    #[error("unknown schema field `{0}` in clean policy")]
    UnknownField(String),
}

/// Normalization switches. All operations are idempotent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Normalizations {
    pub trim_collapse_ws: bool,
    pub lowercase_category: bool,
    pub clamp_percents: bool,
    pub strip_currency: bool,
}

impl Default for Normalizations {
    fn default() -> Self {
        Normalizations {
            trim_collapse_ws: true,
            lowercase_category: true,
            // off by default: out-of-range percents get dropped by the
            // filter instead of silently rewritten
            clamp_percents: false,
            strip_currency: true,
        }
    }
}

/// Policy for the cleaning stage: which fields are required, the dedup key,
/// and which normalizations run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CleanPolicy {
    pub required_fields: BTreeSet<String>,
    pub dedup_key: Vec<String>,
    pub normalizations: Normalizations,
}

impl Default for CleanPolicy {
    fn default() -> Self {
        CleanPolicy {
            required_fields: ["product_name", "category"]
                .into_iter()
                .map(String::from)
                .collect(),
            dedup_key: vec!["product_url".to_string()],
            normalizations: Normalizations::default(),
        }
    }
}

impl CleanPolicy {
    pub fn validate(&self) -> Result<(), CleanError> {
        if self.dedup_key.is_empty() {
            return Err(CleanError::EmptyDedupKey);
        }
        for field in self.required_fields.iter().chain(self.dedup_key.iter()) {
            if !PRODUCT_FIELDS.contains(&field.as_str()) {
                return Err(CleanError::UnknownField(field.clone()));
            }
        }
        Ok(())
    }
}

/// Why a record was dropped by the filter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DropReason {
    Missing(String),
    Range(String),
    Invalid(String),
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DropReason::Missing(field) => write!(f, "missing:{field}"),
            DropReason::Range(field) => write!(f, "range:{field}"),
            DropReason::Invalid(field) => write!(f, "invalid:{field}"),
        }
    }
}

fn reason_from_code(code: &str) -> DropReason {
    match code.split_once(':') {
        Some(("range", field)) => DropReason::Range(field.to_string()),
        Some(("invalid", field)) => DropReason::Invalid(field.to_string()),
        Some((_, field)) => DropReason::Invalid(field.to_string()),
        None => DropReason::Invalid(code.to_string()),
    }
}

/// A dropped record together with the first reason that disqualified it.
#[derive(Debug, Clone, PartialEq)]
pub struct Dropped {
    pub record: ProductRecord,
    pub reason: DropReason,
}

/// Split records into kept and dropped. A record is dropped if it misses a
/// required field or violates a schema invariant; each drop carries a reason
/// code. `|kept| + |dropped| == |input|` always.
pub fn filter_records(
    records: Vec<ProductRecord>,
    policy: &CleanPolicy,
) -> (Vec<ProductRecord>, Vec<Dropped>) {
    let mut kept = Vec::with_capacity(records.len());
    let mut dropped = Vec::new();
    for record in records {
        let reason = policy
            .required_fields
            .iter()
            .find(|f| !record.field_present(f))
            .map(|f| DropReason::Missing(f.clone()))
            .or_else(|| record.violations().first().map(|c| reason_from_code(c)));
        match reason {
            Some(reason) => dropped.push(Dropped { record, reason }),
            None => kept.push(record),
        }
    }
    (kept, dropped)
}

/// Stable first-wins deduplication on the given key fields: keeps the first
/// record per key tuple, preserving input order of survivors.
pub fn dedupe(records: Vec<ProductRecord>, key: &[String]) -> Vec<ProductRecord> {
    let mut seen: HashSet<Vec<String>> = HashSet::new();
    let mut out = Vec::with_capacity(records.len());
    for record in records {
        let tuple: Vec<String> = key
            .iter()
            .map(|f| record.field_value(f).unwrap_or_default())
            .collect();
        if seen.insert(tuple) {
            out.push(record);
        }
    }
    out
}

fn normalize_text(value: &mut String) {
    let collapsed = collapse_whitespace(value);
    if *value != collapsed {
        *value = collapsed;
    }
}

fn normalize_opt_text(value: &mut Option<String>) {
    if let Some(v) = value {
        normalize_text(v);
    }
}

/// Apply the enabled normalizations to one record. Idempotent and
/// field-count preserving.
pub fn normalize(mut record: ProductRecord, policy: &CleanPolicy) -> ProductRecord {
    let flags = &policy.normalizations;
    if flags.trim_collapse_ws {
        normalize_text(&mut record.product_name);
        normalize_text(&mut record.category);
        normalize_text(&mut record.product_url);
        normalize_text(&mut record.dispensary_name);
        normalize_text(&mut record.dispensary_url);
        normalize_opt_text(&mut record.brand);
        normalize_opt_text(&mut record.strain);
        normalize_opt_text(&mut record.unit_weight);
        normalize_opt_text(&mut record.description);
        normalize_opt_text(&mut record.image_url);
    }
    if flags.lowercase_category {
        let lowered = record.category.to_lowercase();
        if record.category != lowered {
            record.category = lowered;
        }
    }
    if flags.clamp_percents {
        record.thc_pct = record.thc_pct.map(|v| v.clamp(0.0, 100.0));
        record.cbd_pct = record.cbd_pct.map(|v| v.clamp(0.0, 100.0));
    }
    // strip_currency: prices are integer cents by construction, so there is
    // nothing left to strip; the flag is a re-verification hook.
    record
}

/// The full cleaning stage in canonical order: normalize, then filter, then
/// dedupe. Deterministic and order-stable.
pub fn clean_pipeline(
    records: Vec<ProductRecord>,
    policy: &CleanPolicy,
) -> (Vec<ProductRecord>, Vec<Dropped>) {
    let normalized: Vec<ProductRecord> = records
        .into_iter()
        .map(|r| normalize(r, policy))
        .collect();
    let (kept, dropped) = filter_records(normalized, policy);
    (dedupe(kept, &policy.dedup_key), dropped)
}
