//! Rule-based extraction of the handle, timestamp and body text from OCR
//! output of a single-tweet screenshot.

mod body;
mod handle;
mod timestamp;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ocr::{OcrSource, OcrText};

pub use body::{extract_body, is_client_line, is_engagement_line};
pub use handle::{extract_handle, Handle, MAX_HANDLE_LEN};
pub use timestamp::{
    candidates_for, extract_timestamp, filter_dates, find_date_candidates, has_relative_age,
    passes_date_filter, select_timestamp, DateCandidate, DateField, DateMethod, FieldSet,
    ReferenceTime, Span, Timestamp,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ExtractError {
    #[error("no timestamp found")]
    NoTimestampFound,
    #[error("only a relative timestamp (like `27m`) is present")]
    RelativeTimestampOnly,
    #[error("no Twitter handle found")]
    NoHandleFound,
    #[error("no tweet text between header and footer")]
    EmptyBody,
}

/// Why a claim field is missing or unusable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ClaimFlag {
    RelativeTimestampOnly,
    TruncatedHandle,
    NoHandleFound,
    NoTimestampFound,
    EmptyBody,
}

impl From<ExtractError> for ClaimFlag {
    fn from(e: ExtractError) -> Self {
        match e {
            ExtractError::NoTimestampFound => ClaimFlag::NoTimestampFound,
            ExtractError::RelativeTimestampOnly => ClaimFlag::RelativeTimestampOnly,
            ExtractError::NoHandleFound => ClaimFlag::NoHandleFound,
            ExtractError::EmptyBody => ClaimFlag::EmptyBody,
        }
    }
}

/// Where the claim's text came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimSource {
    pub origin: OcrSource,
    pub image_ref: Option<String>,
    pub line_count: usize,
}

impl From<&OcrText> for ClaimSource {
    fn from(text: &OcrText) -> Self {
        ClaimSource {
            origin: text.source(),
            image_ref: text.image_ref().map(str::to_owned),
            line_count: text.len(),
        }
    }
}

/// What a screenshot asserts: who posted what, and when.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractedClaim {
    pub handle: Option<Handle>,
    pub timestamp: Option<Timestamp>,
    pub body: Option<String>,
    pub flags: BTreeSet<ClaimFlag>,
    pub source: ClaimSource,
}

impl ExtractedClaim {
    pub fn is_complete(&self) -> bool {
        self.flags.is_empty()
    }

    /// The handle, unless it is missing or truncated.
    pub fn usable_handle(&self) -> Option<&Handle> {
        self.handle.as_ref().filter(|h| !h.truncated)
    }
}

/// Runs all three extractors. Field failures become flags; the claim itself
/// is always produced.
pub fn extract_claim(
    text: &OcrText,
    method: DateMethod,
    reference: &ReferenceTime,
) -> ExtractedClaim {
    let mut flags = BTreeSet::new();

    let handle = match extract_handle(text) {
        Ok(h) => {
            if h.truncated {
                flags.insert(ClaimFlag::TruncatedHandle);
            }
            Some(h)
        }
        Err(e) => {
            flags.insert(e.into());
            None
        }
    };

    let timestamp = extract_timestamp(text, method, reference)
        .map_err(|e| flags.insert(e.into()))
        .ok();

    let body = extract_body(
        text,
        handle.as_ref(),
        timestamp.as_ref().map(|t| &t.resolved_from),
    )
    .map_err(|e| flags.insert(e.into()))
    .ok();

    ExtractedClaim {
        handle,
        timestamp,
        body,
        flags,
        source: text.into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> ReferenceTime {
        "2022-01-27 00:00:00".parse().unwrap()
    }

    #[test]
    fn complete_claim() {
        let text = OcrText::from_lines([
            "Philip Klein @",
            "@philipaklein",
            "A short sentence.",
            "3:17 PM Jun 24, 2022 - Twitter Web App",
            "©0453 Retweets",
        ]);
        let claim = extract_claim(&text, DateMethod::M2, &reference());
        assert!(claim.is_complete(), "{:?}", claim.flags);
        assert_eq!(claim.handle.unwrap().name, "philipaklein");
        assert_eq!(claim.timestamp.unwrap().canonical(), "2022-06-24 15:17:00");
        assert_eq!(claim.body.as_deref(), Some("A short sentence."));
    }

    #[test]
    fn flags_match_missing_fields() {
        let text = OcrText::from_lines(["nothing useful here"]);
        let claim = extract_claim(&text, DateMethod::M2, &reference());
        assert!(claim.handle.is_none() && claim.timestamp.is_none());
        assert!(claim.flags.contains(&ClaimFlag::NoHandleFound));
        assert!(claim.flags.contains(&ClaimFlag::NoTimestampFound));
        // without a handle the body starts at the top
        assert_eq!(claim.body.as_deref(), Some("nothing useful here"));
    }

    #[test]
    fn claim_json_round_trip() {
        let text = OcrText::from_lines(["@someone", "hi", "Jun 24, 2022"]);
        let claim = extract_claim(&text, DateMethod::M1, &reference());
        let json = serde_json::to_string_pretty(&claim).unwrap();
        let back: ExtractedClaim = serde_json::from_str(&json).unwrap();
        assert_eq!(back, claim);
    }
}
