//! Shared helpers for integration tests: seeded random records and fixture
//! paths.

#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use rand::prelude::IndexedRandom;
use rand::Rng;

use scrapereduce::record::{parse_timestamp, Fulfillment, ProductRecord, StrainType};
use scrapereduce::scrape::{
    Clock, FixtureTransport, RateLimiter, RetryPolicy, ScrapeDeps, SystemClock,
};

/// Workspace-level fixture corpus.
pub fn fixture_root(sub: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(sub)
}

/// Scrape dependencies over a fixture directory with an effectively open
/// rate limit (tests that exercise the limiter build their own deps).
pub fn fixture_deps(sub: &str, retry: RetryPolicy) -> ScrapeDeps {
    let clock: Arc<dyn Clock> = Arc::new(SystemClock::new());
    let transport = FixtureTransport::with_clock(fixture_root(sub), clock.clone())
        .expect("fixture manifest parses");
    ScrapeDeps {
        transport: Arc::new(transport),
        limiter: Arc::new(RateLimiter::new(1_000_000.0, 1_000_000.0, clock.clone())),
        clock,
        retry,
    }
}

const WORDS: [&str; 12] = [
    "amber", "vault", "tide", "fern", "copper", "night", "mesa", "drift", "plume", "echo",
    "woven", "stone",
];

const TRICKY: [&str; 6] = ["a,b", "say \"hi\"", "line\nbreak", "  padded  ", "semi;colon", "ümlaut"];

pub fn random_text(rng: &mut impl Rng) -> String {
    if rng.random_bool(0.25) {
        (*TRICKY.choose(rng).expect("non-empty")).to_string()
    } else {
        let n = rng.random_range(1..=3);
        (0..n)
            .map(|_| *WORDS.choose(rng).expect("non-empty"))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// A randomized product record: mostly valid, with occasional invariant
/// violations (missing names, out-of-range percents, discounts above the
/// original price, bad URLs) so cleaning paths get exercised. Texts include
/// commas, quotes, and newlines.
pub fn random_record(rng: &mut impl Rng) -> ProductRecord {
    let ts = parse_timestamp("2024-05-01T00:00:00Z").unwrap();
    let mut record = ProductRecord::new(
        if rng.random_bool(0.95) {
            random_text(rng)
        } else {
            String::new()
        },
        ["Flower", "Edibles", "Vape", "Preroll"][rng.random_range(0..4)],
        if rng.random_bool(0.95) {
            format!("https://menu.example/products/p{}", rng.random_range(1..=40))
        } else {
            "not a url".to_string()
        },
        random_text(rng),
        format!("https://menu.example/d/d{:02}.html", rng.random_range(1..=20)),
        ts,
    );
    if rng.random_bool(0.6) {
        record.brand = Some(random_text(rng));
    }
    if rng.random_bool(0.5) {
        record.strain = Some(random_text(rng));
    }
    record.strain_type = [
        StrainType::Indica,
        StrainType::Sativa,
        StrainType::Hybrid,
        StrainType::Unknown,
    ][rng.random_range(0..4)];
    if rng.random_bool(0.7) {
        // occasionally out of range on purpose
        record.thc_pct = Some(rng.random_range(-5.0..130.0));
    }
    if rng.random_bool(0.5) {
        record.cbd_pct = Some(rng.random_range(0.0..30.0));
    }
    if rng.random_bool(0.3) {
        record.thc_mg = Some(rng.random_range(1.0..500.0));
    }
    if rng.random_bool(0.8) {
        let orig = rng.random_range(100..10_000);
        record.price_original_cents = Some(orig);
        if rng.random_bool(0.6) {
            // sometimes a discount above the original, which must be dropped
            let factor = if rng.random_bool(0.9) { 0.8 } else { 1.5 };
            record.price_discount_cents = Some((orig as f64 * factor) as u64);
        }
    }
    if rng.random_bool(0.5) {
        record.unit_weight = Some(["1g", "3.5g", "7g"][rng.random_range(0..3)].to_string());
    }
    if rng.random_bool(0.6) {
        record.description = Some(random_text(rng));
    }
    if rng.random_bool(0.4) {
        record.image_url = Some(format!(
            "https://menu.example/img/i{}.jpg",
            rng.random_range(1..=99)
        ));
    }
    if rng.random_bool(0.6) {
        record.rating = Some(rng.random_range(0.0..5.0));
    }
    if rng.random_bool(0.6) {
        record.review_count = Some(rng.random_range(0..5_000));
    }
    if rng.random_bool(0.7) {
        record.fulfillment.insert(Fulfillment::Delivery);
    }
    if rng.random_bool(0.7) {
        record.fulfillment.insert(Fulfillment::Pickup);
    }
    record
}

pub fn random_records(rng: &mut impl Rng, count: usize) -> Vec<ProductRecord> {
    (0..count).map(|_| random_record(rng)).collect()
}
