use serde::{Deserialize, Serialize};

use super::ExtractError;
use crate::ocr::OcrText;

pub const MAX_HANDLE_LEN: usize = 15;

const TRUNCATION_MARKERS: [&str; 2] = ["...", "\u{2026}"];

/// A Twitter account name as read from the screenshot, without the `@`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Handle {
    pub name: String,
    pub line_index: usize,
    /// The on-screen handle was cut off with an ellipsis, so `name` is only
    /// a prefix of the real one.
    pub truncated: bool,
}

impl Handle {
    pub fn new(name: impl Into<String>) -> Self {
        Handle {
            name: name.into(),
            line_index: 0,
            truncated: false,
        }
    }

    pub fn is_valid_name(name: &str) -> bool {
        (1..=MAX_HANDLE_LEN).contains(&name.len()) && name.bytes().all(is_handle_byte)
    }
}

fn is_handle_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

/// Returns the handle if `token` is one: `@` followed by 1–15 handle
/// characters. Anything after the run is dropped, except that an ellipsis
/// marks the handle as truncated.
fn match_token(token: &str) -> Option<(&str, bool)> {
    let rest = token.strip_prefix('@')?;
    let run = rest.bytes().take_while(|&b| is_handle_byte(b)).count();
    if run == 0 || run > MAX_HANDLE_LEN {
        return None;
    }
    let (name, tail) = rest.split_at(run);
    let truncated = TRUNCATION_MARKERS.iter().any(|m| tail.starts_with(m));
    Some((name, truncated))
}

/// Scans lines top to bottom and returns the first `@word` token. A bare
/// `@`, which is how OCR tends to render the verified badge, is skipped.
pub fn extract_handle(text: &OcrText) -> Result<Handle, ExtractError> {
    text.lines()
        .iter()
        .enumerate()
        .find_map(|(line_index, line)| {
            line.split_whitespace()
                .find_map(match_token)
                .map(|(name, truncated)| Handle {
                    name: name.to_owned(),
                    line_index,
                    truncated,
                })
        })
        .ok_or(ExtractError::NoHandleFound)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn handle(lines: &[&str]) -> Result<Handle, ExtractError> {
        extract_handle(&OcrText::from_lines(lines))
    }

    #[test]
    fn skips_checkmark_artifact() {
        let h = handle(&["Philip Klein @", "@philipaklein"]).unwrap();
        assert_eq!(h.name, "philipaklein");
        assert_eq!(h.line_index, 1);
        assert!(!h.truncated);
    }

    #[test]
    fn glyph_noise_after_at_is_skipped() {
        let h = handle(&["NASA @® @NASA"]).unwrap();
        assert_eq!(h.name, "NASA");
    }

    #[test]
    fn truncated_with_ascii_or_unicode_ellipsis() {
        let h = handle(&["@DrSJaish..."]).unwrap();
        assert_eq!((h.name.as_str(), h.truncated), ("DrSJaish", true));
        let h = handle(&["@DrSJaish\u{2026}"]).unwrap();
        assert!(h.truncated);
    }

    #[test]
    fn trailing_punctuation_dropped() {
        assert_eq!(handle(&["thanks @jack!"]).unwrap().name, "jack");
        assert_eq!(handle(&["@user_01·2h"]).unwrap().name, "user_01");
    }

    #[test]
    fn overlong_run_is_not_a_handle() {
        assert_eq!(
            handle(&["@abcdefghijklmnopq"]),
            Err(ExtractError::NoHandleFound)
        );
        assert_eq!(handle(&["@abcdefghijklmno"]).unwrap().name.len(), 15);
    }

    #[test]
    fn emails_do_not_match() {
        assert_eq!(
            handle(&["mail me at a@b.com"]),
            Err(ExtractError::NoHandleFound)
        );
    }

    #[test]
    fn no_handle() {
        assert_eq!(handle(&[]), Err(ExtractError::NoHandleFound));
        assert_eq!(
            handle(&["just text", "@"]),
            Err(ExtractError::NoHandleFound)
        );
    }
}
