//! Turning archive evidence into a verdict.
//!
//! The score attached to a verdict is a fixed lookup on the status, not a
//! calibrated probability; JSON output labels it `heuristic-v1`.

use once_cell::sync::Lazy;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::archive::{ArchivedSnapshot, FetchError, Fetcher};
use crate::extract::ExtractedClaim;
use crate::parallel::parallel_map;

pub const SCORE_MODEL: &str = "heuristic-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerdictStatus {
    /// An archived page contains the claimed text.
    ConfirmedReal,
    /// Captures exist for the account and day, but none was confirmed.
    CandidateFound,
    NoArchiveEvidence,
    /// Every page fetch failed.
    Inconclusive,
}

impl VerdictStatus {
    pub fn score(self) -> f64 {
        match self {
            VerdictStatus::ConfirmedReal => 1.0,
            VerdictStatus::CandidateFound => 0.5,
            VerdictStatus::NoArchiveEvidence => 0.1,
            VerdictStatus::Inconclusive => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: VerdictStatus,
    pub score: f64,
    pub score_model: String,
    pub matched_snapshot: Option<ArchivedSnapshot>,
    pub notes: Vec<String>,
}

impl Verdict {
    fn new(
        status: VerdictStatus,
        matched_snapshot: Option<ArchivedSnapshot>,
        notes: Vec<String>,
    ) -> Self {
        Verdict {
            status,
            score: status.score(),
            score_model: SCORE_MODEL.to_owned(),
            matched_snapshot,
            notes,
        }
    }
}

const STRIPPED_PUNCTUATION: [char; 10] = [
    '.', ',', '!', '?', '\'', '"', '\u{2019}', '\u{201C}', '\u{201D}', '\u{2026}',
];

/// Lowercases, drops `.,!?'"’“”…`, and collapses whitespace.
pub fn normalize_text(s: &str) -> String {
    let lowered: String = s
        .to_lowercase()
        .chars()
        .filter(|c| !STRIPPED_PUNCTUATION.contains(c))
        .collect();
    lowered.split_whitespace().collect::<Vec<_>>().join(" ")
}

static INVISIBLE_BLOCK: Lazy<Regex> = Lazy::new(|| {
    Regex::new(r"(?is)<(script|style|noscript)\b.*?</(script|style|noscript)\s*>|<!--.*?-->")
        .unwrap()
});
static TAG: Lazy<Regex> = Lazy::new(|| Regex::new(r"(?s)<[^>]*>").unwrap());
static ENTITY: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"&(#[0-9]+|#[xX][0-9a-fA-F]+|[a-zA-Z]+);").unwrap());

fn decode_entity(name: &str) -> Option<String> {
    let c = match name {
        "amp" => '&',
        "lt" => '<',
        "gt" => '>',
        "quot" => '"',
        "apos" => '\'',
        "nbsp" => ' ',
        "hellip" => '\u{2026}',
        "rsquo" => '\u{2019}',
        "lsquo" => '\u{2018}',
        "ldquo" => '\u{201C}',
        "rdquo" => '\u{201D}',
        _ => {
            let num = name.strip_prefix('#')?;
            let code = match num.strip_prefix(['x', 'X']) {
                Some(hex) => u32::from_str_radix(hex, 16).ok()?,
                None => num.parse().ok()?,
            };
            char::from_u32(code)?
        }
    };
    Some(c.to_string())
}

/// Visible text of an HTML page: script/style blocks and comments removed,
/// tags replaced by spaces, common entities decoded.
pub fn visible_text(html: &str) -> String {
    let without_blocks = INVISIBLE_BLOCK.replace_all(html, " ");
    let without_tags = TAG.replace_all(&without_blocks, " ");
    ENTITY
        .replace_all(&without_tags, |caps: &regex::Captures<'_>| {
            decode_entity(&caps[1]).unwrap_or_else(|| caps[0].to_owned())
        })
        .into_owned()
}

/// True when the normalized body occurs in the normalized page text.
pub fn body_in_page(body: &str, page_html: &str) -> bool {
    let needle = normalize_text(body);
    !needle.is_empty() && normalize_text(&visible_text(page_html)).contains(&needle)
}

/// Fetches the snapshot's replay page and checks it for the claim's text.
/// A claim without body text never matches.
pub fn match_snapshot(
    claim: &ExtractedClaim,
    snapshot: &ArchivedSnapshot,
    fetcher: &Fetcher,
) -> Result<bool, FetchError> {
    let Some(body) = claim.body.as_deref().filter(|b| !b.trim().is_empty()) else {
        return Ok(false);
    };
    let page = fetcher.fetch(&snapshot.replay_url)?;
    Ok(body_in_page(body, &page))
}

/// Combines archive results into a verdict.
///
/// Page fetches run on up to `jobs` threads (still subject to the fetcher's
/// limiter) and are folded in snapshot order, so the verdict and its notes
/// do not depend on completion order.
pub fn verify(
    claim: &ExtractedClaim,
    snapshots: &[ArchivedSnapshot],
    fetcher: &Fetcher,
    fetch_pages: bool,
    jobs: usize,
) -> Verdict {
    let Some(first) = snapshots.first() else {
        return Verdict::new(
            VerdictStatus::NoArchiveEvidence,
            None,
            vec!["no archived captures in the search window".to_owned()],
        );
    };
    let mut notes = vec![format!(
        "{} archived capture(s); first candidate {}",
        snapshots.len(),
        first.replay_url
    )];
    if !fetch_pages {
        return Verdict::new(VerdictStatus::CandidateFound, None, notes);
    }
    if claim.body.as_deref().is_none_or(|b| b.trim().is_empty()) {
        notes.push("claim has no body text; page matching skipped".to_owned());
        return Verdict::new(VerdictStatus::CandidateFound, None, notes);
    }

    let outcomes = parallel_map(snapshots, jobs, |s| match_snapshot(claim, s, fetcher));
    let mut any_fetched = false;
    for (snapshot, outcome) in snapshots.iter().zip(outcomes) {
        match outcome {
            Ok(true) => {
                notes.push(format!("claimed text found in {}", snapshot.replay_url));
                return Verdict::new(VerdictStatus::ConfirmedReal, Some(snapshot.clone()), notes);
            }
            Ok(false) => {
                any_fetched = true;
                notes.push(format!("no match in {}", snapshot.replay_url));
            }
            Err(e) => notes.push(format!("fetch failed: {e}")),
        }
    }
    let status = if any_fetched {
        VerdictStatus::CandidateFound
    } else {
        VerdictStatus::Inconclusive
    };
    Verdict::new(status, None, notes)
}
