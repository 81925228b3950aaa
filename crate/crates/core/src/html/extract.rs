//! Rule-driven extraction: dispensary URLs from listing pages and the
//! 20-field product record from product cards. Extraction rules are data
//! (a JSON file), so per-site templates can change without rebuilds.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;

use chrono::{DateTime, Utc};
use regex::Regex;
use serde::Deserialize;
use thiserror::Error;
use url::Url;

use super::{DomNode, Selector};
use crate::record::{
    fulfillment_from_str, truncate_to_seconds, ProductRecord, StrainType, PRODUCT_FIELDS,
};

/// Default selector for dispensary cards on a state listing page.
pub const DEFAULT_CARD_SELECTOR: &str = "div.w-full a[href]";

/// Default selector for product cards on a menu page.
pub const DEFAULT_PRODUCT_CARD_SELECTOR: &str = "div.product-card";

pub fn default_card_selector() -> Selector {
    Selector::parse(DEFAULT_CARD_SELECTOR).expect("default selector parses")
}

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("required fields missing: {}", .0.join(", "))]
    MissingRequired(Vec<String>),
    #[error("invalid extraction rules: {0}")]
    InvalidRules(String),
    #[error("failed to read rules file {path}: {source}")]
    RulesIo {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// What to capture from the first node a field rule matches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Capture {
    Text,
    Attr(String),
}

/// One field's extraction rule: a selector plus what to capture.
#[derive(Debug, Clone)]
pub struct FieldRule {
    pub selector: Selector,
    pub capture: Capture,
}

impl FieldRule {
    /// First match of the rule under `root`, captured as raw text.
    fn capture_from(&self, root: &DomNode) -> Option<String> {
        let node = self.selector.select(root).into_iter().next()?;
        match &self.capture {
            Capture::Text => Some(node.text()),
            Capture::Attr(name) => node.attr(name).map(str::to_string),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CaptureRepr {
    Keyword(String),
    Attr { attr: String },
}

#[derive(Deserialize)]
struct FieldRuleRepr {
    selector: String,
    capture: CaptureRepr,
}

/// Map from schema field name to extraction rule, parsed from the JSON rule
/// file format: `{"field": {"selector": "...", "capture": "text" | {"attr": "name"}}}`.
#[derive(Debug, Clone, Default)]
pub struct ExtractionRules {
    rules: BTreeMap<String, FieldRule>,
}

impl ExtractionRules {
    pub fn from_json_str(json: &str) -> Result<Self, ExtractError> {
        let raw: BTreeMap<String, FieldRuleRepr> =
            serde_json::from_str(json).map_err(|e| ExtractError::InvalidRules(e.to_string()))?;
        let mut rules = BTreeMap::new();
        for (field, repr) in raw {
            if !PRODUCT_FIELDS.contains(&field.as_str()) {
                return Err(ExtractError::InvalidRules(format!(
                    "unknown schema field `{field}`"
                )));
            }
            let selector = Selector::parse(&repr.selector).map_err(|e| {
                ExtractError::InvalidRules(format!("field `{field}`: {e}"))
            })?;
            let capture = match repr.capture {
                CaptureRepr::Keyword(kw) if kw == "text" => Capture::Text,
                CaptureRepr::Keyword(kw) => {
                    return Err(ExtractError::InvalidRules(format!(
                        "field `{field}`: unknown capture `{kw}`"
                    )))
                }
                CaptureRepr::Attr { attr } => Capture::Attr(attr),
            };
            rules.insert(field, FieldRule { selector, capture });
        }
        Ok(ExtractionRules { rules })
    }

    pub fn from_path(path: &Path) -> Result<Self, ExtractError> {
        let json = std::fs::read_to_string(path).map_err(|source| ExtractError::RulesIo {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json_str(&json)
    }

    pub fn get(&self, field: &str) -> Option<&FieldRule> {
        self.rules.get(field)
    }

    pub fn insert(&mut self, field: impl Into<String>, rule: FieldRule) {
        self.rules.insert(field.into(), rule);
    }
}

/// Page-level facts copied verbatim into every record extracted from the
/// page.
#[derive(Debug, Clone)]
pub struct ExtractContext {
    pub dispensary_name: String,
    pub dispensary_url: String,
    pub product_url: String,
    pub now: DateTime<Utc>,
}

/// A non-fatal extraction problem (a field that failed to coerce), recorded
/// alongside the produced record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractIssue {
    pub field: String,
    pub message: String,
}

fn pct_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(\d+(?:\.\d+)?)\s*%").expect("static regex"))
}

fn mg_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)(\d+(?:\.\d+)?)\s*mg").expect("static regex"))
}

fn number_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\d+(?:\.\d+)?").expect("static regex"))
}

/// Parse a price into integer cents. Accepts `$D+(.DD)?` and bare decimals
/// with at most two fractional digits; anything else is a coercion failure.
pub fn parse_price_cents(text: &str) -> Option<u64> {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"^\$?(\d+)(?:\.(\d{1,2}))?$").expect("static regex"));
    let caps = re.captures(text.trim())?;
    let dollars: u64 = caps.get(1)?.as_str().parse().ok()?;
    let cents = match caps.get(2) {
        None => 0,
        Some(frac) => {
            let digits = frac.as_str();
            let v: u64 = digits.parse().ok()?;
            if digits.len() == 1 {
                v * 10
            } else {
                v
            }
        }
    };
    dollars.checked_mul(100).map(|d| d + cents)
}

/// Parse a percentage: prefers the first `N%` occurrence (so "THC 24.5%"
/// yields 24.5), falling back to a bare number.
pub fn parse_percent(text: &str) -> Option<f64> {
    if let Some(caps) = pct_regex().captures(text) {
        return caps[1].parse().ok();
    }
    text.trim().parse().ok()
}

fn parse_milligrams(text: &str) -> Option<f64> {
    if let Some(caps) = mg_regex().captures(text) {
        return caps[1].parse().ok();
    }
    text.trim().parse().ok()
}

fn parse_first_number(text: &str) -> Option<f64> {
    number_regex()
        .find(text)
        .and_then(|m| m.as_str().parse().ok())
}

fn parse_first_integer(text: &str) -> Option<u64> {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"\d+").expect("static regex"));
    re.find(text).and_then(|m| m.as_str().parse().ok())
}

fn parse_fulfillment_tokens(text: &str) -> crate::record::FulfillmentSet {
    let lowered = text.to_ascii_lowercase();
    let mut joined = Vec::new();
    if lowered.contains("delivery") {
        joined.push("delivery");
    }
    if lowered.contains("pickup") {
        joined.push("pickup");
    }
    fulfillment_from_str(&joined.join("|")).expect("tokens are canonical")
}

/// Find all dispensary URLs on a listing page: apply the card selector,
/// resolve each `href` against `base_url`, and de-duplicate preserving first
/// occurrence.
pub fn extract_dispensary_urls(
    root: &DomNode,
    base_url: &Url,
    card_selector: &Selector,
) -> Vec<String> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for node in card_selector.select(root) {
        let Some(href) = node.attr("href") else {
            continue;
        };
        let Ok(resolved) = base_url.join(href) else {
            continue;
        };
        let url = resolved.to_string();
        if seen.insert(url.clone()) {
            out.push(url);
        }
    }
    out
}

/// Required fields that make a record extractable at all.
const REQUIRED_FIELDS: [&str; 2] = ["product_name", "category"];

/// Build a product record from the element subtree of one product card.
///
/// Each rule's first match is captured and coerced to the field's semantic
/// type; unmatched optional fields stay absent; context fields are copied
/// verbatim. A coercion failure is recorded as a field-level issue and the
/// field stays absent; missing required fields are an error.
pub fn extract_product(
    root: &DomNode,
    rules: &ExtractionRules,
    ctx: &ExtractContext,
) -> Result<(ProductRecord, Vec<ExtractIssue>), ExtractError> {
    let capture = |field: &str| rules.get(field).and_then(|rule| rule.capture_from(root));

    let mut missing: Vec<String> = Vec::new();
    for field in REQUIRED_FIELDS {
        match capture(field) {
            Some(text) if !text.is_empty() => {}
            _ => missing.push(field.to_string()),
        }
    }
    if !missing.is_empty() {
        return Err(ExtractError::MissingRequired(missing));
    }

    let mut issues = Vec::new();
    let mut record = ProductRecord::new(
        capture("product_name").unwrap_or_default(),
        capture("category").unwrap_or_default(),
        ctx.product_url.clone(),
        ctx.dispensary_name.clone(),
        ctx.dispensary_url.clone(),
        truncate_to_seconds(ctx.now),
    );

    // a helper per coercion shape keeps the issue bookkeeping in one place
    macro_rules! coerce {
        ($field:literal, $parser:expr, $slot:expr) => {
            if let Some(text) = capture($field) {
                match $parser(&text) {
                    Some(v) => $slot = Some(v),
                    None => issues.push(ExtractIssue {
                        field: $field.to_string(),
                        message: format!("could not coerce `{text}`"),
                    }),
                }
            }
        };
    }

    record.brand = capture("brand").filter(|s| !s.is_empty());
    record.strain = capture("strain").filter(|s| !s.is_empty());
    if let Some(text) = capture("strain_type") {
        record.strain_type = text.parse::<StrainType>().unwrap_or(StrainType::Unknown);
    }
    coerce!("thc_pct", parse_percent, record.thc_pct);
    coerce!("cbd_pct", parse_percent, record.cbd_pct);
    coerce!("thc_mg", parse_milligrams, record.thc_mg);
    coerce!("price_original_cents", parse_price_cents, record.price_original_cents);
    coerce!("price_discount_cents", parse_price_cents, record.price_discount_cents);
    record.unit_weight = capture("unit_weight").filter(|s| !s.is_empty());
    record.description = capture("description").filter(|s| !s.is_empty());
    coerce!("rating", parse_first_number, record.rating);
    coerce!("review_count", parse_first_integer, record.review_count);
    if let Some(text) = capture("fulfillment") {
        record.fulfillment = parse_fulfillment_tokens(&text);
    }
    if let Some(rule) = rules.get("image_url") {
        if let Some(raw) = rule.capture_from(root) {
            record.image_url = resolve_against(&ctx.dispensary_url, &raw).or(Some(raw));
        }
    }

    Ok((record, issues))
}

fn resolve_against(base: &str, href: &str) -> Option<String> {
    let base = Url::parse(base).ok()?;
    base.join(href).map(|u| u.to_string()).ok()
}

/// Records and non-fatal issues extracted from one page.
#[derive(Debug, Default)]
pub struct PageExtraction {
    pub records: Vec<ProductRecord>,
    pub issues: Vec<String>,
}

/// Extracts every product card on a menu page. The card selector scopes each
/// product; field rules apply within a card, except `dispensary_name`, which
/// is resolved once at document level.
#[derive(Debug, Clone)]
pub struct PageExtractor {
    pub card_selector: Selector,
    pub rules: ExtractionRules,
}

impl PageExtractor {
    pub fn new(card_selector: Selector, rules: ExtractionRules) -> Self {
        PageExtractor {
            card_selector,
            rules,
        }
    }

    pub fn extract_page(&self, body: &str, page_url: &Url, now: DateTime<Utc>) -> PageExtraction {
        let root = super::parse_html(body);
        let dispensary_name = self
            .rules
            .get("dispensary_name")
            .and_then(|rule| rule.capture_from(&root))
            .filter(|s| !s.is_empty())
            .unwrap_or_else(|| page_url.host_str().unwrap_or("unknown").to_string());

        let mut out = PageExtraction::default();
        for (card_idx, card) in self.card_selector.select(&root).into_iter().enumerate() {
            let product_url = self
                .rules
                .get("product_url")
                .and_then(|rule| rule.capture_from(card))
                .and_then(|href| page_url.join(&href).ok())
                .map(|u| u.to_string())
                .unwrap_or_else(|| page_url.to_string());
            let ctx = ExtractContext {
                dispensary_name: dispensary_name.clone(),
                dispensary_url: page_url.to_string(),
                product_url,
                now,
            };
            match extract_product(card, &self.rules, &ctx) {
                Ok((record, issues)) => {
                    for issue in issues {
                        out.issues
                            .push(format!("card {card_idx}: field {}: {}", issue.field, issue.message));
                    }
                    out.records.push(record);
                }
                Err(e) => out.issues.push(format!("card {card_idx}: {e}")),
            }
        }
        out
    }
}
