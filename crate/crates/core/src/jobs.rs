//! The built-in MapReduce jobs: word count over text lines and regex field
//! extraction over product descriptions, plus the default pattern library
//! and deterministic synthetic workload generators for benchmarking.

use std::path::Path;
use std::sync::Arc;

use regex::{Regex, RegexBuilder};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mapreduce::{JobSpec, Mapper, Reducer};
use crate::record::{KeyValuePair, PipelineConfig, ProductRecord, Value};

#[derive(Debug, Error)]
pub enum PatternError {
    #[error("pattern for `{field}` does not compile: {message}")]
    BadPattern { field: String, message: String },
    #[error("pattern for `{field}` must have exactly one capture group, found {found}")]
    CaptureCount { field: String, found: usize },
    #[error("failed to read patterns file {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid patterns file: {0}")]
    Parse(String),
}

/// Unit of the number a pattern captures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    Percent,
    Milligrams,
    Grams,
    None,
}

/// One extraction pattern: a case-insensitive regex with exactly one numeric
/// capture group, bound to a schema field.
#[derive(Debug, Clone)]
pub struct PatternRule {
    pub field: String,
    pub pattern: String,
    pub unit: Unit,
    regex: Regex,
}

impl PatternRule {
    pub fn compile(field: &str, pattern: &str, unit: Unit) -> Result<Self, PatternError> {
        let regex = RegexBuilder::new(pattern)
            .case_insensitive(true)
            .build()
            .map_err(|e| PatternError::BadPattern {
                field: field.to_string(),
                message: e.to_string(),
            })?;
        let captures = regex.captures_len() - 1;
        if captures != 1 {
            return Err(PatternError::CaptureCount {
                field: field.to_string(),
                found: captures,
            });
        }
        Ok(PatternRule {
            field: field.to_string(),
            pattern: pattern.to_string(),
            unit,
            regex,
        })
    }

    /// First match of the pattern in `text`, parsed as a number.
    pub fn first_match(&self, text: &str) -> Option<f64> {
        // find() first: it allocates nothing, so the common no-match case
        // stays allocation-free on the map hot path
        self.regex.find(text)?;
        self.regex
            .captures(text)
            .and_then(|caps| caps[1].parse().ok())
    }
}

#[derive(Serialize, Deserialize)]
struct PatternRuleRepr {
    field: String,
    pattern: String,
    unit: Unit,
}

/// Load pattern rules from a JSON array of `{field, pattern, unit}`.
pub fn load_pattern_rules(path: &Path) -> Result<Vec<PatternRule>, PatternError> {
    let text = std::fs::read_to_string(path).map_err(|source| PatternError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let reprs: Vec<PatternRuleRepr> =
        serde_json::from_str(&text).map_err(|e| PatternError::Parse(e.to_string()))?;
    reprs
        .into_iter()
        .map(|r| PatternRule::compile(&r.field, &r.pattern, r.unit))
        .collect()
}

/// The shipped pattern set for description mining. All patterns are matched
/// case-insensitively; the `\bTHC\b` guards keep lookalikes such as "THCA"
/// from matching. When several rules target one field, earlier rules take
/// priority at the re-join stage.
pub fn default_pattern_rules() -> Vec<PatternRule> {
    let specs: [(&str, &str, Unit); 6] = [
        ("thc_pct", r"(\d+(?:\.\d+)?)\s*%\s*THC\b", Unit::Percent),
        ("thc_pct", r"\bTHC\b\s*:?\s*(\d+(?:\.\d+)?)\s*%", Unit::Percent),
        ("cbd_pct", r"(\d+(?:\.\d+)?)\s*%\s*CBD\b", Unit::Percent),
        ("cbd_pct", r"\bCBD\b\s*:?\s*(\d+(?:\.\d+)?)\s*%", Unit::Percent),
        ("thc_mg", r"\bTHC\s*:?\s*(\d+(?:\.\d+)?)\s*mg\b", Unit::Milligrams),
        ("unit_weight", r"(\d+(?:\.\d+)?)\s*g\b", Unit::Grams),
    ];
    specs
        .into_iter()
        .map(|(field, pattern, unit)| {
            PatternRule::compile(field, pattern, unit).expect("default patterns are valid")
        })
        .collect()
}

/// Tokenize one line and emit `(token, 1)` per occurrence: lowercase, split
/// on any run of non-alphanumeric characters, empty tokens dropped.
pub fn wordcount_mapper(line: &str) -> Vec<KeyValuePair> {
    line.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|token| !token.is_empty())
        .map(|token| KeyValuePair::new(token, Value::Int(1)))
        .collect()
}

/// Sum the (numeric integer) counts of one key.
pub fn wordcount_reducer(key: &str, values: &[Value]) -> Result<KeyValuePair, String> {
    if values.is_empty() {
        return Err(format!("key `{key}` has no values"));
    }
    let mut total: i64 = 0;
    for value in values {
        match value.as_int() {
            Some(v) => total += v,
            None => return Err(format!("non-numeric value for key `{key}`: {value}")),
        }
    }
    Ok(KeyValuePair::new(key, Value::Int(total)))
}

/// Apply every pattern rule to the record's description. Each rule's first
/// match emits one pair; the key is namespaced `product_url|field` so the
/// reduce phase re-joins measurements per product.
pub fn regex_extract_mapper(record: &ProductRecord, rules: &[PatternRule]) -> Vec<KeyValuePair> {
    let Some(description) = record.description.as_deref() else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for rule in rules {
        if let Some(value) = rule.first_match(description) {
            out.push(KeyValuePair::new(
                format!("{}|{}", record.product_url, rule.field),
                Value::Float(value),
            ));
        }
    }
    out
}

/// Re-join reducer for extraction: the first value per key wins, matching
/// the priority order of the rule list.
pub fn first_value_reducer(key: &str, values: &[Value]) -> Result<KeyValuePair, String> {
    values
        .first()
        .map(|v| KeyValuePair::new(key, v.clone()))
        .ok_or_else(|| format!("key `{key}` has no values"))
}

/// Word count as a ready-to-run job over text lines.
pub fn wordcount_job(config: PipelineConfig) -> JobSpec<String> {
    JobSpec {
        mapper: Arc::new(|line: &String| Ok(wordcount_mapper(line))),
        reducer: Arc::new(wordcount_reducer),
        combiner: None,
        config,
    }
}

/// Word count with per-chunk pre-aggregation; results are identical to
/// [`wordcount_job`].
pub fn wordcount_job_with_combiner(config: PipelineConfig) -> JobSpec<String> {
    JobSpec {
        combiner: Some(Arc::new(wordcount_reducer)),
        ..wordcount_job(config)
    }
}

/// Description mining as a ready-to-run job over product records.
///
/// Workers match against thread-local clones of the rule set: a shared
/// `Regex` funnels every scratch-cache rental through one pool whose
/// lock-free path belongs to a single owner thread, which serializes the
/// map phase under contention.
pub fn extract_job(rules: Vec<PatternRule>, config: PipelineConfig) -> JobSpec<ProductRecord> {
    use std::cell::RefCell;

    thread_local! {
        static LOCAL_RULES: RefCell<Option<(usize, Vec<PatternRule>)>> =
            const { RefCell::new(None) };
    }

    let master: Arc<Vec<PatternRule>> = Arc::new(rules);
    let mapper: Mapper<ProductRecord> = Arc::new(move |record: &ProductRecord| {
        let key = Arc::as_ptr(&master) as usize;
        LOCAL_RULES.with(|slot| {
            let mut slot = slot.borrow_mut();
            match slot.as_ref() {
                Some((cached_key, _)) if *cached_key == key => {}
                _ => *slot = Some((key, master.as_ref().clone())),
            }
            let (_, local) = slot.as_ref().expect("slot just filled");
            Ok(regex_extract_mapper(record, local))
        })
    });
    let reducer: Reducer = Arc::new(first_value_reducer);
    JobSpec {
        mapper,
        reducer,
        combiner: None,
        config,
    }
}

/// Deterministic synthetic inputs for benchmarking and tests.
pub mod synthetic {
    use rand::seq::IndexedRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use crate::record::{parse_timestamp, ProductRecord};

    const VOCABULARY: [&str; 24] = [
        "amber", "basil", "cedar", "dawn", "ember", "fern", "grove", "harbor", "iris", "juniper",
        "kelp", "lumen", "meadow", "nectar", "orchid", "pine", "quartz", "reef", "sage", "thistle",
        "umber", "violet", "willow", "zephyr",
    ];

    const FILLER_SENTENCES: [&str; 6] = [
        "Small batch grown under full-spectrum light and cured slowly for a smooth finish.",
        "Customers report a calm, focused experience with notes of citrus and pine.",
        "Lab tested for purity; certificates available on request at the counter.",
        "Best stored in a cool dark place away from direct sunlight to preserve terpenes.",
        "A staff favorite that tends to sell out on weekend restock days quickly.",
        "Pairs well with quiet evenings, long walks, and a tall glass of water.",
    ];

    /// Lines of pseudo-random words for word-count workloads.
    pub fn wordcount_lines(count: usize, seed: u64) -> Vec<String> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let words = rng.random_range(6..=12);
                (0..words)
                    .map(|_| *VOCABULARY.choose(&mut rng).expect("vocabulary non-empty"))
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect()
    }

    /// Product records with generated descriptions for the regex-extraction
    /// workload. Roughly a third of descriptions carry measurable phrases;
    /// the rest are filler prose, so the map phase does real scanning work.
    pub fn product_records(count: usize, seed: u64) -> Vec<ProductRecord> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ts = parse_timestamp("2024-05-01T00:00:00Z").expect("static timestamp");
        (0..count)
            .map(|i| {
                let mut description = String::new();
                for _ in 0..4 {
                    description.push_str(FILLER_SENTENCES.choose(&mut rng).expect("non-empty"));
                    description.push(' ');
                }
                match rng.random_range(0..10) {
                    0..=1 => {
                        let thc: f64 = rng.random_range(10.0..32.0);
                        let cbd: f64 = rng.random_range(0.1..2.0);
                        description.push_str(&format!(
                            "Contains {:.1}% THC and {:.1}% CBD.",
                            thc, cbd
                        ));
                    }
                    2 => {
                        let mg = rng.random_range(5..=200);
                        description.push_str(&format!("THC: {mg}mg per package."));
                    }
                    3 => {
                        let grams = [1.0, 3.5, 7.0, 14.0][rng.random_range(0..4)];
                        let thc: f64 = rng.random_range(15.0..30.0);
                        description
                            .push_str(&format!("Eighth jar {grams}g, THC {:.1}%.", thc));
                    }
                    _ => description.push_str("Ask our budtenders for details."),
                }
                let mut record = ProductRecord::new(
                    format!("Synthetic Product {i}"),
                    "Flower",
                    format!("https://menu.example/products/s{i}"),
                    "Bench Dispensary",
                    "https://menu.example/d/bench.html",
                    ts,
                );
                record.description = Some(description);
                record
            })
            .collect()
    }
}
