//! Transports behind the fetch engine: live HTTP and the fixture directory
//! used by every test, which maps URL paths onto local files with scripted
//! latency and failures.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::Deserialize;
use thiserror::Error;
use url::Url;

use super::clock::{Clock, SystemClock};

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("failed to read fixture manifest {path}: {source}")]
    ManifestIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid fixture manifest {path}: {message}")]
    ManifestParse { path: PathBuf, message: String },
}

/// A single transport attempt's result: an HTTP status plus body text.
#[derive(Debug, Clone)]
pub struct TransportResponse {
    pub status: u16,
    pub body: String,
}

/// One request attempt. Implementations must be shareable across workers;
/// retry and rate limiting live above this layer.
pub trait Transport: Send + Sync {
    fn fetch_once(&self, url: &Url) -> Result<TransportResponse, String>;
}

/// Live HTTP transport.
pub struct HttpTransport {
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new() -> Self {
        let config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(30)))
            .build();
        HttpTransport {
            agent: config.into(),
        }
    }
}

impl Default for HttpTransport {
    fn default() -> Self {
        Self::new()
    }
}

impl Transport for HttpTransport {
    fn fetch_once(&self, url: &Url) -> Result<TransportResponse, String> {
        let mut response = self
            .agent
            .get(url.as_str())
            .call()
            .map_err(|e| e.to_string())?;
        let status = response.status().as_u16();
        let body = response
            .body_mut()
            .read_to_string()
            .map_err(|e| e.to_string())?;
        Ok(TransportResponse { status, body })
    }
}

/// Scripted behavior for one fixture route.
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Route {
    /// File served for this path, relative to the fixture root. Defaults to
    /// the URL path itself.
    pub file: Option<PathBuf>,
    #[serde(default)]
    pub latency_ms: u64,
    /// Fail this many initial requests with a transport error before
    /// succeeding.
    #[serde(default)]
    pub fail_times: u32,
    /// Final status once failures are exhausted.
    #[serde(default = "default_status")]
    pub status: u16,
}

fn default_status() -> u16 {
    200
}

#[derive(Debug, Default, Deserialize)]
struct Manifest {
    #[serde(default)]
    routes: HashMap<String, Route>,
}

/// Test transport mapping URL paths to files under a root directory. A
/// sidecar `manifest.json` may script latency, failures, and statuses per
/// path; unlisted paths serve `<root>/<url-path>` directly, and missing
/// files yield 404.
pub struct FixtureTransport {
    root: PathBuf,
    routes: HashMap<String, Route>,
    remaining_fails: Mutex<HashMap<String, u32>>,
    clock: Arc<dyn Clock>,
}

impl FixtureTransport {
    pub fn new(root: impl Into<PathBuf>) -> Result<Self, TransportError> {
        Self::with_clock(root, Arc::new(SystemClock::new()))
    }

    pub fn with_clock(
        root: impl Into<PathBuf>,
        clock: Arc<dyn Clock>,
    ) -> Result<Self, TransportError> {
        let root = root.into();
        let manifest_path = root.join("manifest.json");
        let manifest = if manifest_path.exists() {
            let text =
                std::fs::read_to_string(&manifest_path).map_err(|source| TransportError::ManifestIo {
                    path: manifest_path.clone(),
                    source,
                })?;
            serde_json::from_str::<Manifest>(&text).map_err(|e| TransportError::ManifestParse {
                path: manifest_path,
                message: e.to_string(),
            })?
        } else {
            Manifest::default()
        };
        let remaining_fails = manifest
            .routes
            .iter()
            .filter(|(_, route)| route.fail_times > 0)
            .map(|(path, route)| (path.clone(), route.fail_times))
            .collect();
        Ok(FixtureTransport {
            root,
            routes: manifest.routes,
            remaining_fails: Mutex::new(remaining_fails),
            clock,
        })
    }

    fn file_for(&self, path: &str, route: Option<&Route>) -> PathBuf {
        match route.and_then(|r| r.file.clone()) {
            Some(file) => self.root.join(file),
            None => self.root.join(path.trim_start_matches('/')),
        }
    }
}

impl Transport for FixtureTransport {
    fn fetch_once(&self, url: &Url) -> Result<TransportResponse, String> {
        let path = url.path().to_string();
        let route = self.routes.get(&path);

        if let Some(route) = route {
            if route.latency_ms > 0 {
                self.clock.sleep_ms(route.latency_ms);
            }
            if route.fail_times > 0 {
                let mut fails = self.remaining_fails.lock().expect("fixture lock");
                if let Some(remaining) = fails.get_mut(&path) {
                    if *remaining > 0 {
                        *remaining -= 1;
                        return Err(format!("scripted failure for {path}"));
                    }
                }
            }
            if !(200..300).contains(&route.status) {
                return Ok(TransportResponse {
                    status: route.status,
                    body: String::new(),
                });
            }
        }

        let file = self.file_for(&path, route);
        match std::fs::read_to_string(&file) {
            Ok(body) => Ok(TransportResponse { status: 200, body }),
            Err(_) => Ok(TransportResponse {
                status: 404,
                body: String::new(),
            }),
        }
    }
}

/// Load a URL list file: one URL per line, `#` comments and blank lines
/// skipped.
pub fn load_url_list(path: &Path) -> std::io::Result<Vec<String>> {
    let text = std::fs::read_to_string(path)?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|line| !line.is_empty() && !line.starts_with('#'))
        .map(String::from)
        .collect())
}
