//! Pluggable HTTP GET transports.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

impl HttpResponse {
    pub fn ok(body: impl Into<String>) -> Self {
        HttpResponse {
            status: 200,
            body: body.into(),
        }
    }

    pub fn status(status: u16) -> Self {
        HttpResponse {
            status,
            body: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    #[error("timed out: {0}")]
    Timeout(String),
    #[error("connection failed: {0}")]
    Connection(String),
    /// An offline transport has no response for this URL.
    #[error("no recorded response for {0}")]
    NotRecorded(String),
}

impl TransportError {
    pub fn is_retryable(&self) -> bool {
        !matches!(self, TransportError::NotRecorded(_))
    }
}

pub trait Transport: Send + Sync {
    fn get(&self, url: &str) -> Result<HttpResponse, TransportError>;
}

impl<T: Transport + ?Sized> Transport for std::sync::Arc<T> {
    fn get(&self, url: &str) -> Result<HttpResponse, TransportError> {
        (**self).get(url)
    }
}

/// Live HTTP transport.
pub struct HttpTransport {
    agent: ureq::Agent,
}

impl HttpTransport {
    pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

    pub fn new(timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .user_agent(concat!("tweetshot/", env!("CARGO_PKG_VERSION")))
            .build()
            .into();
        HttpTransport { agent }
    }
}

impl Default for HttpTransport {
    fn default() -> Self {
        Self::new(Self::DEFAULT_TIMEOUT)
    }
}

impl Transport for HttpTransport {
    fn get(&self, url: &str) -> Result<HttpResponse, TransportError> {
        let mut resp = self.agent.get(url).call().map_err(|e| match e {
            ureq::Error::Timeout(_) => TransportError::Timeout(e.to_string()),
            other => TransportError::Connection(other.to_string()),
        })?;
        let status = resp.status().as_u16();
        let body = resp.body_mut().read_to_string().map_err(|e| match e {
            ureq::Error::Timeout(_) => TransportError::Timeout(e.to_string()),
            other => TransportError::Connection(other.to_string()),
        })?;
        Ok(HttpResponse { status, body })
    }
}

/// Offline transport serving recorded responses from a directory.
///
/// Each recording is a set of files sharing a stem: `<stem>.url` holds the
/// request URL on one line, `<stem>.body` the verbatim response body, and
/// the optional `<stem>.status` an HTTP status code (200 when absent).
#[derive(Debug, Clone, Default)]
pub struct FixtureTransport {
    responses: HashMap<String, HttpResponse>,
}

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("cannot read fixture {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("bad fixture {path}: {reason}")]
    Invalid { path: PathBuf, reason: String },
}

impl FixtureTransport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, url: impl Into<String>, response: HttpResponse) {
        self.responses.insert(url.into(), response);
    }

    pub fn with(mut self, url: impl Into<String>, response: HttpResponse) -> Self {
        self.insert(url, response);
        self
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self, FixtureError> {
        let dir = dir.as_ref();
        let io = |path: &Path| {
            let path = path.to_owned();
            move |source| FixtureError::Io { path, source }
        };
        let mut out = Self::new();
        let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(io(dir))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "url"))
            .collect();
        entries.sort();
        for url_path in entries {
            let url = std::fs::read_to_string(&url_path).map_err(io(&url_path))?;
            let url = url.trim().to_owned();
            if url.is_empty() {
                return Err(FixtureError::Invalid {
                    path: url_path,
                    reason: "empty URL".into(),
                });
            }
            let body_path = url_path.with_extension("body");
            let body = match std::fs::read_to_string(&body_path) {
                Ok(b) => b,
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
                Err(e) => return Err(io(&body_path)(e)),
            };
            let status_path = url_path.with_extension("status");
            let status = match std::fs::read_to_string(&status_path) {
                Ok(s) => s.trim().parse().map_err(|_| FixtureError::Invalid {
                    path: status_path.clone(),
                    reason: format!("not a status code: {:?}", s.trim()),
                })?,
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => 200,
                Err(e) => return Err(io(&status_path)(e)),
            };
            out.insert(url, HttpResponse { status, body });
        }
        Ok(out)
    }
}

impl Transport for FixtureTransport {
    fn get(&self, url: &str) -> Result<HttpResponse, TransportError> {
        self.responses
            .get(url)
            .cloned()
            .ok_or_else(|| TransportError::NotRecorded(url.to_owned()))
    }
}
