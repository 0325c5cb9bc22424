//! Tweet body recovery.
//!
//! The body is whatever sits between the author line (the one carrying the
//! handle) and the first footer line: the timestamp line, an engagement
//! line such as `1,024 Retweets`, or a client line such as
//! `Twitter for iPhone`.

use once_cell::sync::Lazy;
use regex::Regex;

use super::handle::Handle;
use super::timestamp::DateCandidate;
use super::ExtractError;
use crate::ocr::OcrText;

const ENGAGEMENT_WORDS: [&str; 8] = [
    "retweet", "retweets", "quote", "quotes", "like", "likes", "view", "views",
];

const CLIENT_MARKERS: [&str; 2] = ["twitter for", "twitter web app"];

static NUMBER_LIKE: Lazy<Regex> = Lazy::new(|| Regex::new(r"^\d[\d,.]*[KkMm]?$").unwrap());

fn strip_token(token: &str) -> &str {
    token.trim_matches(|c: char| !c.is_alphanumeric())
}

pub fn is_engagement_line(line: &str) -> bool {
    let tokens: Vec<&str> = line.split_whitespace().map(strip_token).collect();
    tokens.iter().enumerate().any(|(i, t)| {
        NUMBER_LIKE.is_match(t)
            && tokens[i + 1..]
                .iter()
                .any(|w| ENGAGEMENT_WORDS.contains(&w.to_ascii_lowercase().as_str()))
    })
}

pub fn is_client_line(line: &str) -> bool {
    let lower = line.to_lowercase();
    CLIENT_MARKERS.iter().any(|m| lower.contains(m))
}

/// Index of the first footer line strictly after `after`, if any.
fn footer_start(
    text: &OcrText,
    after: Option<usize>,
    timestamp: Option<&DateCandidate>,
) -> Option<usize> {
    let first = after.map_or(0, |h| h + 1);
    let from_timestamp = timestamp.map(|c| c.line_index).filter(|&i| i >= first);
    let from_markers = text
        .lines()
        .iter()
        .enumerate()
        .skip(first)
        .find(|(_, l)| is_engagement_line(l) || is_client_line(l))
        .map(|(i, _)| i);
    [from_timestamp, from_markers].into_iter().flatten().min()
}

/// Joins the lines between header and footer into one single-spaced string.
///
/// With no handle the body is taken from the top of the text.
pub fn extract_body(
    text: &OcrText,
    handle: Option<&Handle>,
    timestamp: Option<&DateCandidate>,
) -> Result<String, ExtractError> {
    let header = handle.map(|h| h.line_index);
    let start = header.map_or(0, |h| h + 1);
    let end = footer_start(text, header, timestamp).unwrap_or(text.len());
    let body = text
        .lines()
        .get(start..end)
        .unwrap_or_default()
        .iter()
        .flat_map(|l| l.split_whitespace())
        .collect::<Vec<_>>()
        .join(" ");
    if body.is_empty() {
        Err(ExtractError::EmptyBody)
    } else {
        Ok(body)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::handle::extract_handle;

    #[test]
    fn engagement_lines() {
        assert!(is_engagement_line(
            "©0453 Retweets 52 Quote Tweets 2,164 Likes"
        ));
        assert!(is_engagement_line("1.2K views"));
        assert!(!is_engagement_line("I like this"));
        assert!(!is_engagement_line("Retweets 12"));
    }

    #[test]
    fn body_between_handle_and_engagement() {
        let text = OcrText::from_lines([
            "Some Name @",
            "@somebody",
            "first line of text",
            "",
            "second   line",
            "1,024 Retweets 87 Likes",
        ]);
        let h = extract_handle(&text).unwrap();
        assert_eq!(
            extract_body(&text, Some(&h), None).unwrap(),
            "first line of text second line"
        );
    }

    #[test]
    fn timestamp_on_header_line_is_not_a_footer() {
        let text = OcrText::from_lines(["Name @somebody · Jun 24, 2022", "hello world"]);
        let h = extract_handle(&text).unwrap();
        let cand = DateCandidate {
            raw: "Jun 24, 2022".into(),
            line_index: 0,
            span: crate::extract::Span { start: 17, end: 29 },
            explicit_fields: Default::default(),
            date_part_raw: "Jun 24, 2022".into(),
        };
        assert_eq!(
            extract_body(&text, Some(&h), Some(&cand)).unwrap(),
            "hello world"
        );
    }

    #[test]
    fn header_then_footer_is_empty() {
        let text = OcrText::from_lines(["@somebody", "Twitter for iPhone"]);
        let h = extract_handle(&text).unwrap();
        assert_eq!(
            extract_body(&text, Some(&h), None),
            Err(ExtractError::EmptyBody)
        );
    }
}
