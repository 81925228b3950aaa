//! Pipeline configuration file handling: a JSON file supplies defaults,
//! command-line flags override individual values.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::Deserialize;

use scrapereduce::clean::CleanPolicy;
use scrapereduce::record::{Chunking, PipelineConfig, TransportKind};

/// On-disk configuration. Every field is optional; missing values fall back
/// to the built-in defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub worker_count: Option<usize>,
    pub chunk_count: Option<usize>,
    pub chunk_size: Option<usize>,
    pub rate_limit_rps: Option<f64>,
    pub retry_max: Option<u32>,
    pub retry_backoff_ms: Option<u64>,
    /// `"http"` or `"fixture:<dir>"`.
    pub transport: Option<String>,
    pub input_path: Option<PathBuf>,
    pub output_path: Option<PathBuf>,
    #[serde(default)]
    pub clean: Option<CleanPolicy>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("failed to read config file {}", path.display()))?;
        let file: ConfigFile = serde_json::from_str(&text)
            .with_context(|| format!("invalid config file {}", path.display()))?;
        if file.chunk_count.is_some() && file.chunk_size.is_some() {
            bail!("config file {}: chunk_count and chunk_size are mutually exclusive", path.display());
        }
        Ok(file)
    }
}

pub fn parse_transport(value: &str) -> anyhow::Result<TransportKind> {
    if value == "http" {
        return Ok(TransportKind::Http);
    }
    if let Some(dir) = value.strip_prefix("fixture:") {
        if dir.is_empty() {
            bail!("fixture transport needs a directory: fixture:<dir>");
        }
        return Ok(TransportKind::FixtureDir(PathBuf::from(dir)));
    }
    bail!("unknown transport `{value}` (expected `http` or `fixture:<dir>`)");
}

/// Flag-level overrides collected from the command line.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub workers: Option<usize>,
    pub chunks: Option<usize>,
    pub chunk_size: Option<usize>,
    pub transport: Option<String>,
}

/// Merge defaults, the optional config file, and flag overrides into the
/// runtime configuration. Flags win over the file; the file wins over
/// defaults.
pub fn resolve(
    file: Option<&ConfigFile>,
    overrides: &Overrides,
) -> anyhow::Result<(PipelineConfig, CleanPolicy)> {
    let mut config = PipelineConfig::default();
    let mut policy = CleanPolicy::default();

    if let Some(file) = file {
        if let Some(v) = file.worker_count {
            config.worker_count = v;
        }
        if let Some(v) = file.chunk_count {
            config.chunking = Chunking::Count(v);
        }
        if let Some(v) = file.chunk_size {
            config.chunking = Chunking::Size(v);
        }
        if let Some(v) = file.rate_limit_rps {
            config.rate_limit_rps = v;
        }
        if let Some(v) = file.retry_max {
            config.retry_max = v;
        }
        if let Some(v) = file.retry_backoff_ms {
            config.retry_backoff_ms = v;
        }
        if let Some(v) = &file.transport {
            config.transport = parse_transport(v)?;
        }
        config.input_path.clone_from(&file.input_path);
        config.output_path.clone_from(&file.output_path);
        if let Some(clean) = &file.clean {
            policy = clean.clone();
        }
    }

    if overrides.chunks.is_some() && overrides.chunk_size.is_some() {
        bail!("--chunks and --chunk-size are mutually exclusive");
    }
    if let Some(v) = overrides.workers {
        config.worker_count = v;
    }
    if let Some(v) = overrides.chunks {
        config.chunking = Chunking::Count(v);
    }
    if let Some(v) = overrides.chunk_size {
        config.chunking = Chunking::Size(v);
    }
    if let Some(v) = &overrides.transport {
        config.transport = parse_transport(v)?;
    }

    config.validate().map_err(anyhow::Error::msg)?;
    policy.validate()?;
    Ok((config, policy))
}
