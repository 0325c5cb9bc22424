//! Wayback Machine lookup of a claim's status URLs through the CDX API.

mod cdx;
mod client;
mod transport;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extract::ExtractedClaim;

pub use cdx::{
    build_query_url, build_query_url_at, dedupe_snapshots, derive_time_range,
    derive_time_range_with_window, is_capture_timestamp, is_status_capture, parse_cdx_response,
    replay_url, split_replay_url, tweet_id, ArchivedSnapshot, CdxParse, CdxQuery, CdxRecord,
    CdxWarning, DayStamp, DEFAULT_CDX_ENDPOINT, REPLAY_PREFIX,
};
pub use client::{FetchError, Fetcher, Permit, Politeness, RetryPolicy};
pub use transport::{
    FixtureError, FixtureTransport, HttpResponse, HttpTransport, Transport, TransportError,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClaimField {
    Handle,
    Timestamp,
    Body,
}

impl fmt::Display for ClaimField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClaimField::Handle => "handle",
            ClaimField::Timestamp => "timestamp",
            ClaimField::Body => "body",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArchiveError {
    #[error("handle @{handle} is truncated and cannot be searched")]
    TruncatedHandleRejected { handle: String },
    #[error("empty day range {from}..{to}")]
    InvalidRange { from: String, to: String },
    #[error("claim has no usable {0}")]
    MissingField(ClaimField),
    #[error(transparent)]
    Fetch(#[from] FetchError),
}

impl ArchiveError {
    /// Short machine-readable tag for structured error output.
    pub fn kind(&self) -> &'static str {
        match self {
            ArchiveError::TruncatedHandleRejected { .. } => "TruncatedHandleRejected",
            ArchiveError::InvalidRange { .. } => "InvalidRange",
            ArchiveError::MissingField(_) => "MissingField",
            ArchiveError::Fetch(FetchError::Http { .. }) => "HttpError",
            ArchiveError::Fetch(FetchError::RateLimited { .. }) => "RateLimited",
            ArchiveError::Fetch(FetchError::NotRecorded { .. }) => "NotRecorded",
            ArchiveError::Fetch(FetchError::Network { .. }) => "NetworkError",
        }
    }
}

/// CDX endpoint, search window and the fetcher used to reach it.
#[derive(Clone)]
pub struct ArchiveClient {
    fetcher: Fetcher,
    endpoint: String,
    window_days: u32,
}

impl ArchiveClient {
    pub fn new(fetcher: Fetcher) -> Self {
        ArchiveClient {
            fetcher,
            endpoint: DEFAULT_CDX_ENDPOINT.to_owned(),
            window_days: 1,
        }
    }

    /// Live client against the public Wayback Machine.
    pub fn live() -> Self {
        Self::new(Fetcher::live(Arc::new(HttpTransport::default())))
    }

    /// Client over an arbitrary transport with no delays; for fixtures.
    pub fn offline(transport: impl Transport + 'static) -> Self {
        Self::new(Fetcher::offline(Arc::new(transport)))
    }

    pub fn with_endpoint(mut self, endpoint: impl Into<String>) -> Self {
        self.endpoint = endpoint.into();
        self
    }

    pub fn with_window_days(mut self, days: u32) -> Self {
        self.window_days = days.max(1);
        self
    }

    pub fn fetcher(&self) -> &Fetcher {
        &self.fetcher
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    pub fn fetch_cdx(&self, url: &str) -> Result<String, FetchError> {
        self.fetcher.fetch(url)
    }

    /// Builds the CDX query URL for a claim without fetching anything.
    pub fn query_url_for(&self, claim: &ExtractedClaim) -> Result<String, ArchiveError> {
        let handle = claim
            .handle
            .as_ref()
            .ok_or(ArchiveError::MissingField(ClaimField::Handle))?;
        let ts = claim
            .timestamp
            .as_ref()
            .ok_or(ArchiveError::MissingField(ClaimField::Timestamp))?;
        let (from_day, to_day) = derive_time_range_with_window(ts, self.window_days);
        build_query_url_at(
            &self.endpoint,
            &CdxQuery {
                handle: handle.clone(),
                from_day,
                to_day,
            },
        )
    }

    /// Finds archived captures of the claimed account's tweets around the
    /// claimed day. Captures that are not plain `/status/<id>` pages of the
    /// claimed handle are dropped.
    pub fn search_archives(
        &self,
        claim: &ExtractedClaim,
    ) -> Result<Vec<ArchivedSnapshot>, ArchiveError> {
        let url = self.query_url_for(claim)?;
        let handle = &claim
            .handle
            .as_ref()
            .expect("checked by query_url_for")
            .name;
        let body = self.fetch_cdx(&url)?;
        let parsed = parse_cdx_response(&body);
        for w in &parsed.warnings {
            log::warn!(
                "CDX line {} skipped ({}): {}",
                w.line_number,
                w.reason,
                w.line
            );
        }
        let records: Vec<CdxRecord> = parsed
            .records
            .into_iter()
            .filter(|r| is_status_capture(&r.original, handle))
            .collect();
        Ok(dedupe_snapshots(&records))
    }
}
