//! Property tests for serialization, parsing, selection, shuffle, and
//! cleaning invariants.

mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use scrapereduce::clean::{self, CleanPolicy};
use scrapereduce::csvio::{from_csv_bytes, to_csv_bytes};
use scrapereduce::html::{collapse_whitespace, parse_html, DomNode, Selector};
use scrapereduce::jobs;
use scrapereduce::mapreduce::{execute, shuffle};
use scrapereduce::record::{Chunking, KeyValuePair, PipelineConfig, Value};

// ---------------------------------------------------------------------------
// CSV round-trip and determinism
// ---------------------------------------------------------------------------

fn value_strategy() -> impl Strategy<Value = Value> {
    prop_oneof![
        any::<i64>().prop_map(Value::Int),
        // finite floats only; NaN breaks equality by definition
        any::<f64>().prop_filter("finite", |f| f.is_finite()).prop_map(Value::Float),
        // text that cannot be mistaken for a numeric cell
        "[a-zA-Z][a-zA-Z0-9 ,\"\n\r.|-]{0,30}".prop_map(Value::Text),
    ]
}

proptest! {
    #[test]
    fn kv_round_trip(pairs in proptest::collection::vec(
        ("[^\u{0}]{1,20}", value_strategy()).prop_map(|(k, v)| KeyValuePair::new(k, v)),
        0..40,
    )) {
        let bytes = to_csv_bytes(&pairs);
        let parsed: Vec<KeyValuePair> = from_csv_bytes(&bytes).unwrap();
        prop_assert_eq!(parsed, pairs);
    }

    #[test]
    fn product_round_trip_and_determinism(seed in any::<u64>(), count in 0usize..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let records = common::random_records(&mut rng, count);
        let bytes = to_csv_bytes(&records);
        prop_assert_eq!(&bytes, &to_csv_bytes(&records), "bytes must be deterministic");
        let parsed: Vec<scrapereduce::ProductRecord> = from_csv_bytes(&bytes).unwrap();
        prop_assert_eq!(parsed, records);
    }
}

// ---------------------------------------------------------------------------
// HTML parsing totality and text extraction
// ---------------------------------------------------------------------------

fn escape(s: &str) -> String {
    s.chars()
        .map(|c| match c {
            '&' => "&amp;".to_string(),
            '<' => "&lt;".to_string(),
            '>' => "&gt;".to_string(),
            '"' => "&quot;".to_string(),
            '\'' => "&apos;".to_string(),
            other => other.to_string(),
        })
        .collect()
}

/// Independent approximation of the parser's tokenization, for the node
/// bound: tag-shaped openings and nonempty inter-tag text segments.
fn independent_counts(source: &str) -> (usize, usize) {
    let tag = regex::Regex::new(r"(?s)<!--.*?-->|<[!?/A-Za-z][^>]*>?").unwrap();
    let opens = regex::Regex::new(r"<[A-Za-z]").unwrap().find_iter(source).count();
    let text_runs = tag
        .split(source)
        .filter(|segment| !segment.is_empty())
        .count();
    (opens, text_runs)
}

fn count_kinds(node: &DomNode) -> (usize, usize) {
    match node {
        DomNode::Text(_) => (0, 1),
        DomNode::Element { children, .. } => {
            let mut elements = 1;
            let mut texts = 0;
            for child in children {
                let (e, t) = count_kinds(child);
                elements += e;
                texts += t;
            }
            (elements, texts)
        }
    }
}

proptest! {
    #[test]
    fn parse_is_total_and_bounded(source in ".{0,400}") {
        let root = parse_html(&source);
        let (elements, texts) = count_kinds(&root);
        let (opens, text_runs) = independent_counts(&source);
        // node count <= tag opens + text runs + 1 (the synthetic root)
        prop_assert!(
            elements - 1 + texts <= opens + text_runs,
            "elements={} texts={} opens={} text_runs={}",
            elements - 1, texts, opens, text_runs
        );
    }

    #[test]
    fn escaped_text_round_trips_through_parser(s in "[^<>&]{0,200}") {
        let root = parse_html(&escape(&s));
        prop_assert_eq!(root.text(), collapse_whitespace(&s));
    }
}

// ---------------------------------------------------------------------------
// Selection order
// ---------------------------------------------------------------------------

fn random_soup(rng: &mut ChaCha8Rng, depth: usize, out: &mut String) {
    use rand::prelude::IndexedRandom;
    use rand::Rng;
    let tags = ["div", "a", "p", "span"];
    let classes = ["w-full", "nt-lg", "card", "w-fullx"];
    let n = rng.random_range(1..=3);
    for _ in 0..n {
        if depth == 0 || rng.random_bool(0.3) {
            out.push_str("text ");
            continue;
        }
        let tag = tags.choose(rng).unwrap();
        out.push('<');
        out.push_str(tag);
        if rng.random_bool(0.6) {
            out.push_str(&format!(" class=\"{}\"", classes.choose(rng).unwrap()));
        }
        if *tag == "a" && rng.random_bool(0.7) {
            out.push_str(&format!(" href=\"/x{}\"", rng.random_range(0..9)));
        }
        out.push('>');
        random_soup(rng, depth - 1, out);
        // sometimes leave the tag unclosed to exercise auto-closing
        if rng.random_bool(0.85) {
            out.push_str(&format!("</{tag}>"));
        }
    }
}

fn preorder_index(root: &DomNode, target: *const DomNode, counter: &mut usize) -> Option<usize> {
    let this = *counter;
    *counter += 1;
    if std::ptr::eq(root, target) {
        return Some(this);
    }
    for child in root.children() {
        if let Some(found) = preorder_index(child, target, counter) {
            return Some(found);
        }
    }
    None
}

proptest! {
    #[test]
    fn select_returns_strictly_increasing_preorder(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut soup = String::new();
        random_soup(&mut rng, 4, &mut soup);
        let root = parse_html(&soup);
        for expr in ["div", "a", "div a[href]", "div.w-full a", "p span", "span.card"] {
            let selector = Selector::parse(expr).unwrap();
            let hits = selector.select(&root);
            let mut last = None;
            for hit in &hits {
                let mut counter = 0;
                let idx = preorder_index(&root, *hit as *const DomNode, &mut counter)
                    .expect("hit is in the tree");
                if let Some(prev) = last {
                    prop_assert!(idx > prev, "selector {expr}: order violated in {soup}");
                }
                last = Some(idx);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Shuffle invariants and combiner correctness
// ---------------------------------------------------------------------------

fn multiset(pairs: &[(String, String)]) -> std::collections::HashMap<(String, String), usize> {
    let mut counts = std::collections::HashMap::new();
    for pair in pairs {
        *counts.entry(pair.clone()).or_insert(0) += 1;
    }
    counts
}

proptest! {
    #[test]
    fn shuffle_invariants(pairs in proptest::collection::vec(
        ("[a-f]{1,3}", any::<i32>()).prop_map(|(k, v)| KeyValuePair::new(k, Value::Int(v as i64))),
        0..60,
    )) {
        let groups = shuffle(pairs.clone());
        // keys strictly ascending (hence unique)
        for window in groups.windows(2) {
            prop_assert!(window[0].key < window[1].key);
        }
        // group sizes add up to the input length
        prop_assert_eq!(groups.iter().map(|g| g.values.len()).sum::<usize>(), pairs.len());
        // the multiset of (key, value) pairs is preserved exactly
        let before: Vec<(String, String)> = pairs
            .iter()
            .map(|p| (p.key.clone(), p.value.to_string()))
            .collect();
        let after: Vec<(String, String)> = groups
            .iter()
            .flat_map(|g| g.values.iter().map(|v| (g.key.clone(), v.to_string())))
            .collect();
        prop_assert_eq!(multiset(&before), multiset(&after));
        prop_assert!(groups.iter().all(|g| !g.values.is_empty()));
    }

    #[test]
    fn combiner_never_changes_results(seed in any::<u64>(), lines in 1usize..120) {
        let corpus = jobs::synthetic::wordcount_lines(lines, seed);
        let config = || PipelineConfig {
            worker_count: 3,
            chunking: Chunking::Count(5),
            ..PipelineConfig::default()
        };
        let (plain, _) = execute(&jobs::wordcount_job(config()), corpus.clone(), false).unwrap();
        let (combined, _) =
            execute(&jobs::wordcount_job_with_combiner(config()), corpus, false).unwrap();
        prop_assert_eq!(plain, combined);
    }
}

#[test]
fn extract_job_results_are_worker_invariant() {
    let records = jobs::synthetic::product_records(2_000, 42);
    let run = |workers: usize| {
        let config = PipelineConfig {
            worker_count: workers,
            chunking: Chunking::Count(7),
            ..PipelineConfig::default()
        };
        let job = jobs::extract_job(jobs::default_pattern_rules(), config);
        execute(&job, records.clone(), false).unwrap().0
    };
    let baseline = run(1);
    assert!(!baseline.is_empty());
    for workers in [2, 4] {
        let results = run(workers);
        assert_eq!(results, baseline, "workers={workers} diverged");
        assert_eq!(
            scrapereduce::csvio::to_csv_bytes(&results),
            scrapereduce::csvio::to_csv_bytes(&baseline),
            "bytes diverged at workers={workers}"
        );
    }
}

// ---------------------------------------------------------------------------
// Cleaning invariants
// ---------------------------------------------------------------------------

proptest! {
    #[test]
    fn cleaning_invariants(seed in any::<u64>(), count in 0usize..120) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let records = common::random_records(&mut rng, count);
        let policy = CleanPolicy::default();

        // conservation
        let (kept, dropped) = clean::filter_records(records.clone(), &policy);
        prop_assert_eq!(kept.len() + dropped.len(), records.len());

        // dedupe: never longer, unique keys, idempotent, order-stable
        let deduped = clean::dedupe(kept.clone(), &policy.dedup_key);
        prop_assert!(deduped.len() <= kept.len());
        let keys: Vec<_> = deduped
            .iter()
            .map(|r| r.field_value("product_url").unwrap())
            .collect();
        let unique: std::collections::HashSet<_> = keys.iter().collect();
        prop_assert_eq!(unique.len(), keys.len());
        prop_assert_eq!(clean::dedupe(deduped.clone(), &policy.dedup_key), deduped.clone());
        // stability: survivors appear in the same relative order as input
        let mut cursor = kept.iter();
        for survivor in &deduped {
            prop_assert!(cursor.any(|r| r == survivor), "survivor out of order");
        }

        // normalize: idempotent
        for record in records.iter().take(20) {
            let once = clean::normalize(record.clone(), &policy);
            prop_assert_eq!(clean::normalize(once.clone(), &policy), once);
        }

        // the full pipeline is deterministic
        let first = clean::clean_pipeline(records.clone(), &policy);
        let second = clean::clean_pipeline(records, &policy);
        prop_assert_eq!(first.0, second.0);
        prop_assert_eq!(first.1.len(), second.1.len());
    }
}
