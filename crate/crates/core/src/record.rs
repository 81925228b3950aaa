//! Product schema, MapReduce intermediate types, pipeline configuration, and
//! run reports shared by every pipeline stage.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use chrono::{DateTime, Timelike, Utc};
use serde::{Deserialize, Serialize};
use url::Url;

/// Canonical column order for product CSV files. The fixed length doubles as
/// a guard against schema drift: adding or removing a field fails to compile
/// until this table is updated in lockstep.
pub const PRODUCT_FIELDS: [&str; 20] = [
    "product_name",
    "category",
    "brand",
    "strain",
    "strain_type",
    "thc_pct",
    "cbd_pct",
    "thc_mg",
    "price_original_cents",
    "price_discount_cents",
    "unit_weight",
    "description",
    "image_url",
    "product_url",
    "dispensary_name",
    "dispensary_url",
    "rating",
    "review_count",
    "fulfillment",
    "scraped_at",
];

/// Indica/sativa classification of a product's strain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrainType {
    Indica,
    Sativa,
    Hybrid,
    Unknown,
}

impl StrainType {
    pub fn as_str(self) -> &'static str {
        match self {
            StrainType::Indica => "indica",
            StrainType::Sativa => "sativa",
            StrainType::Hybrid => "hybrid",
            StrainType::Unknown => "unknown",
        }
    }
}

impl FromStr for StrainType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "indica" => Ok(StrainType::Indica),
            "sativa" => Ok(StrainType::Sativa),
            "hybrid" => Ok(StrainType::Hybrid),
            "unknown" | "" => Ok(StrainType::Unknown),
            other => Err(format!("unrecognized strain type `{other}`")),
        }
    }
}

impl fmt::Display for StrainType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How a product can be obtained from the dispensary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fulfillment {
    Delivery,
    Pickup,
}

impl Fulfillment {
    pub fn as_str(self) -> &'static str {
        match self {
            Fulfillment::Delivery => "delivery",
            Fulfillment::Pickup => "pickup",
        }
    }
}

/// Set of fulfillment options; serialized in CSV as `|`-joined tokens in
/// canonical (delivery, pickup) order.
pub type FulfillmentSet = BTreeSet<Fulfillment>;

pub fn fulfillment_to_string(set: &FulfillmentSet) -> String {
    set.iter()
        .map(|f| f.as_str())
        .collect::<Vec<_>>()
        .join("|")
}

pub fn fulfillment_from_str(s: &str) -> Result<FulfillmentSet, String> {
    let mut set = FulfillmentSet::new();
    for token in s.split('|').map(str::trim).filter(|t| !t.is_empty()) {
        match token.to_ascii_lowercase().as_str() {
            "delivery" => {
                set.insert(Fulfillment::Delivery);
            }
            "pickup" => {
                set.insert(Fulfillment::Pickup);
            }
            other => return Err(format!("unrecognized fulfillment option `{other}`")),
        }
    }
    Ok(set)
}

/// One structured product row: the 20-feature schema produced by extraction
/// and consumed by cleaning and analysis.
///
/// Absent optional fields serialize as empty CSV cells / JSON `null`; an
/// empty text cell reads back as absent. Timestamps are UTC with seconds
/// precision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductRecord {
    pub product_name: String,
    pub category: String,
    pub brand: Option<String>,
    pub strain: Option<String>,
    pub strain_type: StrainType,
    pub thc_pct: Option<f64>,
    pub cbd_pct: Option<f64>,
    pub thc_mg: Option<f64>,
    pub price_original_cents: Option<u64>,
    pub price_discount_cents: Option<u64>,
    pub unit_weight: Option<String>,
    pub description: Option<String>,
    pub image_url: Option<String>,
    pub product_url: String,
    pub dispensary_name: String,
    pub dispensary_url: String,
    pub rating: Option<f64>,
    pub review_count: Option<u64>,
    pub fulfillment: FulfillmentSet,
    #[serde(with = "iso_seconds")]
    pub scraped_at: DateTime<Utc>,
}

impl ProductRecord {
    /// Minimal record with the required identity fields; everything optional
    /// starts absent.
    pub fn new(
        product_name: impl Into<String>,
        category: impl Into<String>,
        product_url: impl Into<String>,
        dispensary_name: impl Into<String>,
        dispensary_url: impl Into<String>,
        scraped_at: DateTime<Utc>,
    ) -> Self {
        ProductRecord {
            product_name: product_name.into(),
            category: category.into(),
            brand: None,
            strain: None,
            strain_type: StrainType::Unknown,
            thc_pct: None,
            cbd_pct: None,
            thc_mg: None,
            price_original_cents: None,
            price_discount_cents: None,
            unit_weight: None,
            description: None,
            image_url: None,
            product_url: product_url.into(),
            dispensary_name: dispensary_name.into(),
            dispensary_url: dispensary_url.into(),
            rating: None,
            review_count: None,
            fulfillment: FulfillmentSet::new(),
            scraped_at,
        }
    }

    /// Schema invariant violations carried by this record, as stable reason
    /// codes (`range:thc_pct`, `invalid:product_url`, ...). An empty result
    /// means the record is internally consistent.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let (Some(orig), Some(disc)) = (self.price_original_cents, self.price_discount_cents) {
            if disc > orig {
                out.push("range:price_discount_cents".to_string());
            }
        }
        for (name, value) in [("thc_pct", self.thc_pct), ("cbd_pct", self.cbd_pct)] {
            if let Some(v) = value {
                if !(0.0..=100.0).contains(&v) {
                    out.push(format!("range:{name}"));
                }
            }
        }
        if let Some(r) = self.rating {
            if !(0.0..=5.0).contains(&r) {
                out.push("range:rating".to_string());
            }
        }
        if self.product_url.is_empty() || Url::parse(&self.product_url).is_err() {
            out.push("invalid:product_url".to_string());
        }
        out
    }

    /// Whether the named schema field carries a value. Required string fields
    /// count as present when non-empty; `scraped_at` and `strain_type` are
    /// always present.
    pub fn field_present(&self, field: &str) -> bool {
        match field {
            "product_name" => !self.product_name.is_empty(),
            "category" => !self.category.is_empty(),
            "brand" => self.brand.is_some(),
            "strain" => self.strain.is_some(),
            "strain_type" => true,
            "thc_pct" => self.thc_pct.is_some(),
            "cbd_pct" => self.cbd_pct.is_some(),
            "thc_mg" => self.thc_mg.is_some(),
            "price_original_cents" => self.price_original_cents.is_some(),
            "price_discount_cents" => self.price_discount_cents.is_some(),
            "unit_weight" => self.unit_weight.is_some(),
            "description" => self.description.is_some(),
            "image_url" => self.image_url.is_some(),
            "product_url" => !self.product_url.is_empty(),
            "dispensary_name" => !self.dispensary_name.is_empty(),
            "dispensary_url" => !self.dispensary_url.is_empty(),
            "rating" => self.rating.is_some(),
            "review_count" => self.review_count.is_some(),
            "fulfillment" => !self.fulfillment.is_empty(),
            "scraped_at" => true,
            _ => false,
        }
    }

    /// Canonical string value of the named field, exactly as it appears in a
    /// CSV cell. Used for deduplication keys.
    pub fn field_value(&self, field: &str) -> Option<String> {
        let idx = PRODUCT_FIELDS.iter().position(|f| *f == field)?;
        Some(crate::csvio::CsvRecord::to_fields(self).swap_remove(idx))
    }
}

/// Truncate a timestamp to whole seconds, the precision used everywhere.
pub fn truncate_to_seconds(ts: DateTime<Utc>) -> DateTime<Utc> {
    ts.with_nanosecond(0).expect("zero nanoseconds is valid")
}

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%SZ";

pub fn format_timestamp(ts: DateTime<Utc>) -> String {
    ts.format(TIMESTAMP_FORMAT).to_string()
}

pub fn parse_timestamp(s: &str) -> Result<DateTime<Utc>, String> {
    chrono::NaiveDateTime::parse_from_str(s.trim(), TIMESTAMP_FORMAT)
        .map(|naive| naive.and_utc())
        .map_err(|e| format!("invalid timestamp `{s}`: {e}"))
}

/// Serde adapter for ISO-8601 UTC timestamps with seconds precision.
pub mod iso_seconds {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ts: &DateTime<Utc>, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&format_timestamp(*ts))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<DateTime<Utc>, D::Error> {
        let s = String::deserialize(de)?;
        parse_timestamp(&s).map_err(serde::de::Error::custom)
    }
}

/// A MapReduce value: integer counts, extracted measurements, or plain text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Value {
    /// Parse a CSV cell back into a value. Integer-looking cells become
    /// `Int`, finite decimal/scientific cells become `Float`, everything
    /// else stays text. The inverse of `Display` for values this crate
    /// writes.
    pub fn parse(s: &str) -> Value {
        if let Ok(i) = s.parse::<i64>() {
            return Value::Int(i);
        }
        let numericish = !s.is_empty()
            && s.bytes()
                .all(|b| b.is_ascii_digit() || matches!(b, b'.' | b'-' | b'+' | b'e' | b'E'))
            && s.bytes().any(|b| b.is_ascii_digit());
        if numericish {
            if let Ok(f) = s.parse::<f64>() {
                if f.is_finite() {
                    return Value::Float(f);
                }
            }
        }
        Value::Text(s.to_string())
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Float(f) => Some(*f),
            Value::Text(_) => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            // {:?} keeps the shortest representation that round-trips,
            // including the `.0` that distinguishes floats from ints.
            Value::Float(x) => write!(f, "{x:?}"),
            Value::Text(s) => f.write_str(s),
        }
    }
}

/// One intermediate key/value pair emitted by a mapper or reducer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyValuePair {
    pub key: String,
    pub value: Value,
}

impl KeyValuePair {
    pub fn new(key: impl Into<String>, value: Value) -> Self {
        KeyValuePair {
            key: key.into(),
            value,
        }
    }
}

/// All values observed for one key after the shuffle, in first-emission
/// order. Collections of groups are keyed uniquely and sorted ascending by
/// key bytes.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedPairs {
    pub key: String,
    pub values: Vec<Value>,
}

/// A contiguous, indexed slice of the input assigned to one worker.
/// Concatenating all chunks in index order reproduces the input exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Chunk<T> {
    pub index: usize,
    pub records: Vec<T>,
}

/// Chunking policy: a target number of chunks (sizes differ by at most one)
/// or a fixed chunk size (all chunks full except possibly the last).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chunking {
    Count(usize),
    Size(usize),
}

/// Which transport serves page fetches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransportKind {
    Http,
    FixtureDir(PathBuf),
}

/// Knobs shared by the scrape and MapReduce engines.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub worker_count: usize,
    pub chunking: Chunking,
    /// Per-host request rate for the scrape engine.
    pub rate_limit_rps: f64,
    pub retry_max: u32,
    pub retry_backoff_ms: u64,
    pub transport: TransportKind,
    pub input_path: Option<PathBuf>,
    pub output_path: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            worker_count: 4,
            chunking: Chunking::Count(8),
            rate_limit_rps: 2.0,
            retry_max: 2,
            retry_backoff_ms: 100,
            transport: TransportKind::Http,
            input_path: None,
            output_path: None,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.worker_count == 0 {
            return Err("worker_count must be at least 1".to_string());
        }
        match self.chunking {
            Chunking::Count(0) => return Err("chunk_count must be at least 1".to_string()),
            Chunking::Size(0) => return Err("chunk_size must be at least 1".to_string()),
            _ => {}
        }
        if self.rate_limit_rps.is_nan() || self.rate_limit_rps <= 0.0 {
            return Err("rate_limit_rps must be positive".to_string());
        }
        Ok(())
    }
}

/// One per-item failure recorded during a run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorEntry {
    pub item_id: String,
    pub phase: String,
    pub message: String,
}

impl ErrorEntry {
    pub fn new(
        item_id: impl Into<String>,
        phase: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        ErrorEntry {
            item_id: item_id.into(),
            phase: phase.into(),
            message: message.into(),
        }
    }
}

/// Timing, counts, and the error ledger for one scrape or MapReduce run.
/// This is the instrument behind every throughput measurement the toolkit
/// reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    #[serde(with = "iso_seconds")]
    pub started_at: DateTime<Utc>,
    #[serde(with = "iso_seconds")]
    pub finished_at: DateTime<Utc>,
    pub wall_seconds: f64,
    pub items_in: u64,
    pub items_out: u64,
    pub errors: Vec<ErrorEntry>,
    pub per_phase_seconds: BTreeMap<String, f64>,
    /// Scheduling audit: how many work items each pool worker processed.
    pub per_worker_items: Vec<u64>,
}

impl RunReport {
    pub fn start() -> Self {
        let now = truncate_to_seconds(Utc::now());
        RunReport {
            started_at: now,
            finished_at: now,
            wall_seconds: 0.0,
            items_in: 0,
            items_out: 0,
            errors: Vec::new(),
            per_phase_seconds: BTreeMap::new(),
            per_worker_items: Vec::new(),
        }
    }

    pub fn finish(&mut self, wall_seconds: f64) {
        self.finished_at = truncate_to_seconds(Utc::now());
        self.wall_seconds = wall_seconds;
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write_json(&self, path: &std::path::Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_json_pretty())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_schema_has_exactly_20_fields() {
        assert_eq!(PRODUCT_FIELDS.len(), 20);
        let unique: BTreeSet<_> = PRODUCT_FIELDS.iter().collect();
        assert_eq!(unique.len(), 20);
    }

    #[test]
    fn value_parse_and_display_round_trip() {
        assert_eq!(Value::parse("2"), Value::Int(2));
        assert_eq!(Value::parse("-7"), Value::Int(-7));
        assert_eq!(Value::parse("24.5"), Value::Float(24.5));
        assert_eq!(Value::parse("2.0"), Value::Float(2.0));
        assert_eq!(Value::parse("hello"), Value::Text("hello".to_string()));
        // "NaN" and "inf" parse as f64 but are not numeric cells.
        assert_eq!(Value::parse("NaN"), Value::Text("NaN".to_string()));
        assert_eq!(Value::parse("inf"), Value::Text("inf".to_string()));

        assert_eq!(Value::Int(2).to_string(), "2");
        assert_eq!(Value::Float(2.0).to_string(), "2.0");
        assert_eq!(Value::Float(24.5).to_string(), "24.5");
        for v in [Value::Int(42), Value::Float(3.25), Value::Float(10.0)] {
            assert_eq!(Value::parse(&v.to_string()), v);
        }
    }

    #[test]
    fn fulfillment_encoding() {
        let mut set = FulfillmentSet::new();
        assert_eq!(fulfillment_to_string(&set), "");
        set.insert(Fulfillment::Pickup);
        set.insert(Fulfillment::Delivery);
        assert_eq!(fulfillment_to_string(&set), "delivery|pickup");
        assert_eq!(fulfillment_from_str("delivery|pickup").unwrap(), set);
        assert_eq!(fulfillment_from_str("").unwrap(), FulfillmentSet::new());
        assert!(fulfillment_from_str("teleport").is_err());
    }

    #[test]
    fn violations_cover_price_percent_and_url() {
        let ts = parse_timestamp("2024-05-01T00:00:00Z").unwrap();
        let mut r = ProductRecord::new("A", "Flower", "https://x.example/p", "D", "https://x.example", ts);
        assert!(r.violations().is_empty());

        r.price_original_cents = Some(1000);
        r.price_discount_cents = Some(2000);
        r.thc_pct = Some(120.0);
        assert_eq!(
            r.violations(),
            vec!["range:price_discount_cents".to_string(), "range:thc_pct".to_string()]
        );

        r.price_discount_cents = Some(500);
        r.thc_pct = Some(24.5);
        r.product_url = "not a url".to_string();
        assert_eq!(r.violations(), vec!["invalid:product_url".to_string()]);
    }

    #[test]
    fn timestamps_are_seconds_precision_iso() {
        let ts = parse_timestamp("2024-05-01T12:34:56Z").unwrap();
        assert_eq!(format_timestamp(ts), "2024-05-01T12:34:56Z");
        assert!(parse_timestamp("2024-05-01 12:34:56").is_err());
    }

    #[test]
    fn field_presence_matches_schema() {
        let ts = parse_timestamp("2024-05-01T00:00:00Z").unwrap();
        let mut r = ProductRecord::new("A", "Flower", "https://x.example/p", "D", "https://x.example", ts);
        assert!(r.field_present("product_name"));
        assert!(r.field_present("scraped_at"));
        assert!(!r.field_present("brand"));
        assert!(!r.field_present("fulfillment"));
        r.fulfillment.insert(Fulfillment::Delivery);
        assert!(r.field_present("fulfillment"));
        assert!(!r.field_present("no_such_field"));
    }
}
