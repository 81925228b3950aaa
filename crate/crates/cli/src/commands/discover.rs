//! `discover`: fetch a listing page, walk its dispensary cards, and write
//! one menu URL per line.

use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use url::Url;

use scrapereduce::html::{default_card_selector, extract_dispensary_urls, parse_html, Selector};
use scrapereduce::scrape::{fetch, ScrapeDeps};

use crate::{config, CmdResult, Failure, SharedArgs};

#[derive(Debug, Args)]
pub struct DiscoverArgs {
    /// Listing page URL (resolved through the configured transport)
    pub url: String,

    /// Output URL list file
    #[arg(long)]
    pub out: PathBuf,

    /// Card selector override (default: `div.w-full a[href]`)
    #[arg(long)]
    pub selector: Option<String>,
}

pub fn run(shared: &SharedArgs, args: DiscoverArgs) -> CmdResult {
    let file = shared.config_file()?;
    let (pipeline, _) =
        config::resolve(file.as_ref(), &shared.overrides()?).map_err(Failure::input)?;
    let deps = ScrapeDeps::from_config(&pipeline).map_err(Failure::input)?;

    let selector = match &args.selector {
        Some(expr) => Selector::parse(expr).map_err(Failure::input)?,
        None => default_card_selector(),
    };
    let base = Url::parse(&args.url)
        .map_err(|e| Failure::input(anyhow::anyhow!("invalid listing url `{}`: {e}", args.url)))?;

    let result = fetch(
        &args.url,
        deps.transport.as_ref(),
        deps.limiter.as_ref(),
        deps.clock.as_ref(),
        &deps.retry,
    );
    let body = match result.body {
        Some(body) if result.is_ok() => body,
        _ => {
            return Err(Failure::input(anyhow::anyhow!(
                "failed to fetch {}: {:?}",
                args.url,
                result.status
            )))
        }
    };

    let urls = extract_dispensary_urls(&parse_html(&body), &base, &selector);
    if urls.is_empty() {
        eprintln!("warning: no dispensary cards found on {}", args.url);
    }

    let mut out = Vec::new();
    for url in &urls {
        writeln!(out, "{url}").expect("in-memory write");
    }
    std::fs::write(&args.out, out).map_err(Failure::input)?;
    println!("discover: wrote {} urls to {}", urls.len(), args.out.display());
    Ok(())
}
