//! End-to-end tests of the `scrapereduce` binary over the fixture corpus:
//! exit codes, file outputs, determinism across worker counts, and the
//! bench table shape.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(sub: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(sub)
        .display()
        .to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scrapereduce"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_exit(output: &Output, code: i32) {
    assert_eq!(
        output.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).expect("output exists")
}

#[test]
fn discover_writes_menu_urls_from_listing_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("urls.txt");
    let output = run(&[
        "discover",
        "https://menu.example/state/ca.html",
        "--out",
        out.to_str().unwrap(),
        "--transport",
        &format!("fixture:{}", fixture("site")),
    ]);
    assert_exit(&output, 0);
    assert_eq!(
        read(&out),
        "https://menu.example/d/d01.html\nhttps://menu.example/d/d02.html\n"
    );
}

#[test]
fn discover_with_no_cards_warns_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("urls.txt");
    // a menu page has no dispensary cards
    let output = run(&[
        "discover",
        "https://menu.example/d/d01.html",
        "--out",
        out.to_str().unwrap(),
        "--transport",
        &format!("fixture:{}", fixture("site")),
    ]);
    assert_exit(&output, 0);
    assert_eq!(read(&out), "");
    assert!(String::from_utf8_lossy(&output.stderr).contains("warning"));
}

#[test]
fn discover_unreachable_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("urls.txt");
    let output = run(&[
        "discover",
        "https://menu.example/no/such/page.html",
        "--out",
        out.to_str().unwrap(),
        "--transport",
        &format!("fixture:{}", fixture("site")),
    ]);
    assert_exit(&output, 2);
}

fn scrape_to(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "scrape".to_string(),
        fixture("urls.txt"),
        "--rules".to_string(),
        fixture("rules.json"),
        "--out".to_string(),
        out.display().to_string(),
        "--transport".to_string(),
        format!("fixture:{}", fixture("site")),
        "--fixed-now".to_string(),
        "2024-05-01T00:00:00Z".to_string(),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    Command::new(env!("CARGO_BIN_EXE_scrapereduce"))
        .args(&args)
        .output()
        .expect("binary runs")
}

#[test]
fn scrape_writes_forty_rows_and_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("products.csv");
    let output = scrape_to(&out, &["--workers", "10"]);
    assert_exit(&output, 0);
    let body = read(&out);
    assert_eq!(body.lines().count(), 41, "header plus 40 records");
    assert!(body.starts_with("product_name,category,"));

    let report: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("products.csv.report.json"))).unwrap();
    assert_eq!(report["items_in"], serde_json::json!(20));
    assert_eq!(report["errors"], serde_json::json!([]));
    assert!(report["per_phase_seconds"]["clean"].is_number());
}

#[test]
fn scrape_output_is_identical_across_worker_counts_and_seq() {
    let dir = tempfile::tempdir().unwrap();
    let parallel = dir.path().join("par.csv");
    let single = dir.path().join("one.csv");
    let sequential = dir.path().join("seq.csv");
    assert_exit(&scrape_to(&parallel, &["--workers", "10"]), 0);
    assert_exit(&scrape_to(&single, &["--workers", "1"]), 0);
    assert_exit(&scrape_to(&sequential, &["--seq"]), 0);
    assert_eq!(read(&parallel), read(&single));
    assert_eq!(read(&parallel), read(&sequential));
}

#[test]
fn scrape_all_missing_pages_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let urls = dir.path().join("urls.txt");
    std::fs::write(&urls, "https://menu.example/gone/a.html\nhttps://menu.example/gone/b.html\n")
        .unwrap();
    let out = dir.path().join("products.csv");
    let output = run(&[
        "scrape",
        urls.to_str().unwrap(),
        "--rules",
        &fixture("rules.json"),
        "--out",
        out.to_str().unwrap(),
        "--transport",
        &format!("fixture:{}", fixture("site")),
    ]);
    assert_exit(&output, 3);
}

#[test]
fn scrape_json_format_mirrors_the_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("products.json");
    let output = scrape_to(&out, &["--format", "json"]);
    assert_exit(&output, 0);
    let parsed: serde_json::Value = serde_json::from_str(&read(&out)).unwrap();
    let rows = parsed.as_array().unwrap();
    assert_eq!(rows.len(), 40);
    assert!(rows[0].get("product_name").is_some());
    assert!(rows[0].get("scraped_at").is_some());
}

#[test]
fn wordcount_over_fixture_corpus_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("counts.csv");
    let output = run(&[
        "mapreduce",
        "wordcount",
        "--input",
        &fixture("corpus.txt"),
        "--out",
        out.to_str().unwrap(),
        "--workers",
        "4",
        "--chunks",
        "2",
    ]);
    assert_exit(&output, 0);
    assert_eq!(
        read(&out),
        "key,value\nand,1\nbrown,1\ndata,2\ne,2\nfox,1\nmail,2\nquick,1\nscraping,2\nthe,1\n"
    );
}

#[test]
fn mapreduce_output_is_chunking_and_worker_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let base = [
        "mapreduce",
        "wordcount",
        "--input",
        &fixture("corpus.txt"),
    ];
    let output = run(&[&base[..], &["--out", a.to_str().unwrap(), "--chunks", "1", "--workers", "1"]].concat());
    assert_exit(&output, 0);
    let output = run(&[&base[..], &["--out", b.to_str().unwrap(), "--chunks", "8", "--workers", "4"]].concat());
    assert_exit(&output, 0);
    assert_eq!(read(&a), read(&b));
}

#[test]
fn extract_job_joins_measurements_per_product() {
    let dir = tempfile::tempdir().unwrap();
    let products = dir.path().join("products.csv");
    assert_exit(&scrape_to(&products, &["--workers", "4"]), 0);

    let out = dir.path().join("fields.csv");
    let output = run(&[
        "mapreduce",
        "extract",
        "--input",
        products.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_exit(&output, 0);
    let body = read(&out);
    assert!(body.lines().count() > 10, "expected plenty of extracted pairs");
    assert!(
        body.contains("https://menu.example/products/midnight-gummy-100mg|thc_pct,24.5"),
        "missing expected extraction in:\n{body}"
    );
    assert!(body.contains("https://menu.example/products/midnight-gummy-100mg|cbd_pct,0.8"));
    // the citrus soda's description carries the milligram phrasing
    assert!(body.contains("citrus-soda-10mg"));
    assert!(body.contains("|thc_mg,10"));
}

#[test]
fn mapreduce_unreadable_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let output = run(&[
        "mapreduce",
        "wordcount",
        "--input",
        "/no/such/file.txt",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_exit(&output, 2);
}

#[test]
fn custom_patterns_file_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let products = dir.path().join("products.csv");
    assert_exit(&scrape_to(&products, &[]), 0);

    let patterns = dir.path().join("patterns.json");
    std::fs::write(
        &patterns,
        r#"[{"field": "rating", "pattern": "(\\d+(?:\\.\\d+)?) ?%\\s*THC", "unit": "none"}]"#,
    )
    .unwrap();
    let out = dir.path().join("fields.csv");
    let output = run(&[
        "mapreduce",
        "extract",
        "--input",
        products.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--patterns",
        patterns.to_str().unwrap(),
    ]);
    assert_exit(&output, 0);
    let body = read(&out);
    assert!(body.contains("|rating,"), "custom field missing in:\n{body}");
    assert!(!body.contains("|thc_mg,"), "default rules leaked in:\n{body}");
}

#[test]
fn bench_table_has_expected_shape() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench.csv");
    let output = run(&[
        "bench",
        "--workload",
        "wordcount-synthetic",
        "--sizes",
        "400",
        "--workers",
        "1,2",
        "--reps",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_exit(&output, 0);
    let body = read(&out);
    let lines: Vec<&str> = body.lines().collect();
    assert_eq!(lines[0], "workload,size,workers,rep,wall_seconds,speedup_vs_1");
    assert_eq!(lines.len(), 5, "header + 2 cells x 2 reps: {body}");
    assert!(lines[1].starts_with("wordcount-synthetic,400,1,0,"));
    // workers=1 rows carry speedup 1.000 by definition
    assert!(lines[1].ends_with(",1.000"), "baseline speedup row: {}", lines[1]);
    assert!(lines[3].starts_with("wordcount-synthetic,400,2,0,"));
}

#[test]
fn bench_scrape_fixture_measures_latency_bound_speedup() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench.csv");
    let output = run(&[
        "bench",
        "--workload",
        "scrape-fixture",
        "--sizes",
        "8",
        "--workers",
        "1,8",
        "--reps",
        "1",
        "--transport",
        &format!("fixture:{}", fixture("slow-site")),
        "--urls",
        &fixture("urls.txt"),
        "--rules",
        &fixture("rules.json"),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_exit(&output, 0);
    let body = read(&out);
    let lines: Vec<&str> = body.lines().collect();
    assert_eq!(lines.len(), 3, "header + 2 cells: {body}");
    // 8 pages at 200 ms injected latency: 8 workers overlap the waits
    let speedup: f64 = lines[2].rsplit(',').next().unwrap().parse().unwrap();
    assert!(speedup >= 3.0, "latency-bound speedup was only {speedup}: {body}");
}

#[test]
fn bench_scrape_fixture_requires_fixture_transport() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench.csv");
    let output = run(&[
        "bench",
        "--workload",
        "scrape-fixture",
        "--sizes",
        "4",
        "--reps",
        "1",
        "--urls",
        &fixture("urls.txt"),
        "--rules",
        &fixture("rules.json"),
        "--out",
        out.to_str().unwrap(),
    ]);
    // cells error (marked in the table), command still completes
    assert_exit(&output, 0);
    let body = read(&out);
    assert!(body.contains(",error,"), "cells should be marked: {body}");
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(
        &config,
        format!(
            r#"{{"worker_count": 3, "chunk_count": 2, "transport": "fixture:{}"}}"#,
            fixture("site")
        ),
    )
    .unwrap();
    let out = dir.path().join("products.csv");
    let output = run(&[
        "scrape",
        &fixture("urls.txt"),
        "--rules",
        &fixture("rules.json"),
        "--out",
        out.to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
        "--fixed-now",
        "2024-05-01T00:00:00Z",
    ]);
    assert_exit(&output, 0);
    assert_eq!(read(&out).lines().count(), 41);

    let report: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("products.csv.report.json"))).unwrap();
    assert_eq!(
        report["per_worker_items"].as_array().unwrap().len(),
        3,
        "worker_count from the config file"
    );
}

#[test]
fn bad_config_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(&config, r#"{"worker_count": "many"}"#).unwrap();
    let out = dir.path().join("x.csv");
    let output = run(&[
        "mapreduce",
        "wordcount",
        "--input",
        &fixture("corpus.txt"),
        "--out",
        out.to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
    ]);
    assert_exit(&output, 2);
}
