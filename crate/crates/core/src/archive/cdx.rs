//! CDX query construction and response handling.
//!
//! The CDX server answers with one capture per line, seven space-separated
//! fields: urlkey, timestamp, original, mimetype, statuscode, digest,
//! length.

use std::collections::BTreeMap;
use std::fmt;

use chrono::{Days, NaiveDate, NaiveDateTime};
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::ArchiveError;
use crate::extract::{Handle, Timestamp};

pub const DEFAULT_CDX_ENDPOINT: &str = "http://web.archive.org/cdx/search/cdx";
pub const REPLAY_PREFIX: &str = "https://web.archive.org/web/";

/// A calendar day rendered as `YYYYMMDD`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DayStamp(pub NaiveDate);

impl DayStamp {
    pub fn as_number(self) -> u32 {
        self.to_string().parse().expect("eight digits")
    }
}

impl fmt::Display for DayStamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.format("%Y%m%d"))
    }
}

/// `(day of ts, next day)`.
pub fn derive_time_range(ts: &Timestamp) -> (DayStamp, DayStamp) {
    derive_time_range_with_window(ts, 1)
}

/// Widens the one-day window: `window_days = n` covers `n - 1` days before
/// the timestamp's day through `n` days after it.
pub fn derive_time_range_with_window(ts: &Timestamp, window_days: u32) -> (DayStamp, DayStamp) {
    let n = window_days.max(1);
    let day = ts.date();
    let from = day
        .checked_sub_days(Days::new(u64::from(n - 1)))
        .unwrap_or(day);
    let to = day.checked_add_days(Days::new(u64::from(n))).unwrap_or(day);
    (DayStamp(from), DayStamp(to))
}

/// A prefix query for one account's status URLs over a day range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CdxQuery {
    pub handle: Handle,
    pub from_day: DayStamp,
    pub to_day: DayStamp,
}

impl CdxQuery {
    pub const MATCH_TYPE: &'static str = "prefix";

    pub fn target_url(&self) -> String {
        format!("https://twitter.com/{}/status", self.handle.name)
    }
}

pub fn build_query_url(q: &CdxQuery) -> Result<String, ArchiveError> {
    build_query_url_at(DEFAULT_CDX_ENDPOINT, q)
}

/// Parameters are emitted unencoded and in fixed order so recorded fixtures
/// can be keyed on the exact URL.
pub fn build_query_url_at(endpoint: &str, q: &CdxQuery) -> Result<String, ArchiveError> {
    if q.handle.truncated {
        return Err(ArchiveError::TruncatedHandleRejected {
            handle: q.handle.name.clone(),
        });
    }
    if q.from_day > q.to_day {
        return Err(ArchiveError::InvalidRange {
            from: q.from_day.to_string(),
            to: q.to_day.to_string(),
        });
    }
    Ok(format!(
        "{endpoint}?url={}&from={}&to={}&matchType={}",
        q.target_url(),
        q.from_day,
        q.to_day,
        CdxQuery::MATCH_TYPE
    ))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CdxRecord {
    pub urlkey: String,
    pub capture_ts: String,
    pub original: String,
    pub mimetype: String,
    pub statuscode: String,
    pub digest: String,
    pub length: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CdxWarning {
    /// 1-based line number in the response body.
    pub line_number: usize,
    pub line: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CdxParse {
    pub records: Vec<CdxRecord>,
    pub warnings: Vec<CdxWarning>,
}

pub fn is_capture_timestamp(ts: &str) -> bool {
    ts.len() == 14
        && ts.bytes().all(|b| b.is_ascii_digit())
        && NaiveDateTime::parse_from_str(ts, "%Y%m%d%H%M%S").is_ok()
}

fn parse_line(line: &str) -> Result<CdxRecord, String> {
    let fields: Vec<&str> = line.split(' ').collect();
    let [urlkey, ts, original, mimetype, statuscode, digest, length] = fields[..] else {
        return Err(format!("expected 7 fields, found {}", fields.len()));
    };
    if !is_capture_timestamp(ts) {
        return Err(format!("bad capture timestamp {ts:?}"));
    }
    if !(original.starts_with("http://") || original.starts_with("https://")) {
        return Err(format!("original is not an http(s) URL: {original:?}"));
    }
    let length = length
        .parse()
        .map_err(|_| format!("bad length {length:?}"))?;
    Ok(CdxRecord {
        urlkey: urlkey.to_owned(),
        capture_ts: ts.to_owned(),
        original: original.to_owned(),
        mimetype: mimetype.to_owned(),
        statuscode: statuscode.to_owned(),
        digest: digest.to_owned(),
        length,
    })
}

/// Parses a plain-text CDX body. Malformed lines are reported as warnings
/// rather than failing the whole response.
pub fn parse_cdx_response(body: &str) -> CdxParse {
    let mut out = CdxParse::default();
    for (i, line) in body.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        match parse_line(line) {
            Ok(r) => out.records.push(r),
            Err(reason) => out.warnings.push(CdxWarning {
                line_number: i + 1,
                line: line.to_owned(),
                reason,
            }),
        }
    }
    out
}

/// One archived capture of a URL, with its Wayback replay address.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchivedSnapshot {
    pub original: String,
    pub capture_ts: String,
    pub replay_url: String,
    pub tweet_id: Option<String>,
}

impl ArchivedSnapshot {
    pub fn new(capture_ts: impl Into<String>, original: impl Into<String>) -> Self {
        let capture_ts = capture_ts.into();
        let original = original.into();
        ArchivedSnapshot {
            replay_url: replay_url(&capture_ts, &original),
            tweet_id: tweet_id(&original),
            original,
            capture_ts,
        }
    }
}

pub fn replay_url(capture_ts: &str, original: &str) -> String {
    format!("{REPLAY_PREFIX}{capture_ts}/{original}")
}

/// Inverse of [`replay_url`]: `(capture_ts, original)`.
pub fn split_replay_url(url: &str) -> Option<(&str, &str)> {
    let rest = url.strip_prefix(REPLAY_PREFIX)?;
    let ts = rest.get(..14)?;
    let original = rest.get(14..)?.strip_prefix('/')?;
    is_capture_timestamp(ts).then_some((ts, original))
}

/// The decimal status id in a `/status/<id>` URL.
pub fn tweet_id(original: &str) -> Option<String> {
    let (_, tail) = original.split_once("/status/")?;
    let id: String = tail.chars().take_while(char::is_ascii_digit).collect();
    (!id.is_empty()).then_some(id)
}

/// True for captures of `https://twitter.com/<handle>/status/<digits>`,
/// allowing scheme, `www.`/`mobile.` host, port and query variations.
pub fn is_status_capture(original: &str, handle: &str) -> bool {
    let pattern = format!(
        r"(?i)^https?://(?:www\.|mobile\.)?twitter\.com(?::\d+)?/{}/status/\d+(?:[?#].*)?$",
        regex::escape(handle)
    );
    Regex::new(&pattern).is_ok_and(|re| re.is_match(original))
}

/// One snapshot per distinct original URL, keeping the earliest capture,
/// sorted by original URL.
pub fn dedupe_snapshots(records: &[CdxRecord]) -> Vec<ArchivedSnapshot> {
    let mut earliest: BTreeMap<&str, &str> = BTreeMap::new();
    for r in records {
        earliest
            .entry(&r.original)
            .and_modify(|ts| *ts = (*ts).min(r.capture_ts.as_str()))
            .or_insert(&r.capture_ts);
    }
    earliest
        .into_iter()
        .map(|(original, ts)| ArchivedSnapshot::new(ts, original))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::{DateMethod, ReferenceTime};
    use crate::ocr::OcrText;

    fn ts(s: &str) -> Timestamp {
        let r: ReferenceTime = s.parse().unwrap();
        let line = r.datetime().format("%Y-%m-%d %H:%M:%S").to_string();
        crate::extract::extract_timestamp(&OcrText::from_lines([line]), DateMethod::M2, &r).unwrap()
    }

    fn days(t: &str) -> (u32, u32) {
        let (a, b) = derive_time_range(&ts(t));
        (a.as_number(), b.as_number())
    }

    #[test]
    fn range_rollovers() {
        assert_eq!(days("2022-05-25 16:40:26"), (20220525, 20220526));
        assert_eq!(days("2022-12-31 23:59:00"), (20221231, 20230101));
        assert_eq!(days("2020-02-28 00:00:00"), (20200228, 20200229));
        assert_eq!(days("2021-02-28 00:00:00"), (20210228, 20210301));
    }

    #[test]
    fn wider_window() {
        let (a, b) = derive_time_range_with_window(&ts("2022-05-25 16:40:26"), 3);
        assert_eq!((a.as_number(), b.as_number()), (20220523, 20220528));
    }

    #[test]
    fn query_url_shape() {
        let q = CdxQuery {
            handle: Handle::new("NASA"),
            from_day: DayStamp(NaiveDate::from_ymd_opt(2022, 6, 1).unwrap()),
            to_day: DayStamp(NaiveDate::from_ymd_opt(2022, 6, 2).unwrap()),
        };
        assert_eq!(
            build_query_url(&q).unwrap(),
            "http://web.archive.org/cdx/search/cdx?url=https://twitter.com/NASA/status&from=20220601&to=20220602&matchType=prefix"
        );
    }

    #[test]
    fn reversed_range_rejected() {
        let q = CdxQuery {
            handle: Handle::new("NASA"),
            from_day: DayStamp(NaiveDate::from_ymd_opt(2022, 6, 2).unwrap()),
            to_day: DayStamp(NaiveDate::from_ymd_opt(2022, 6, 1).unwrap()),
        };
        assert!(matches!(
            build_query_url(&q),
            Err(ArchiveError::InvalidRange { .. })
        ));
    }

    #[test]
    fn malformed_lines_become_warnings() {
        let body = "a b c d e\n\ncom,twitter)/x/status/1 20220525164026 https://twitter.com/x/status/1 text/html 200 ABC 123\n";
        let p = parse_cdx_response(body);
        assert_eq!(p.records.len(), 1);
        assert_eq!(p.warnings.len(), 1);
        assert_eq!(p.warnings[0].line_number, 1);
    }

    #[test]
    fn rejects_bad_timestamp_and_scheme() {
        let p = parse_cdx_response(
            "k 2022052516402 https://t/x text/html 200 D 1\nk 20221325164026 https://t/x text/html 200 D 1\nk 20220525164026 ftp://t/x text/html 200 D 1",
        );
        assert!(p.records.is_empty());
        assert_eq!(p.warnings.len(), 3);
    }

    #[test]
    fn dedupe_keeps_earliest() {
        let rec = |t: &str, o: &str| CdxRecord {
            urlkey: String::new(),
            capture_ts: t.into(),
            original: o.into(),
            mimetype: "text/html".into(),
            statuscode: "200".into(),
            digest: "-".into(),
            length: 0,
        };
        let out = dedupe_snapshots(&[
            rec("20220526000000", "https://twitter.com/a/status/2"),
            rec("20220525000000", "https://twitter.com/a/status/2"),
            rec("20220525120000", "https://twitter.com/a/status/1"),
        ]);
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].tweet_id.as_deref(), Some("1"));
        assert_eq!(out[1].capture_ts, "20220525000000");
    }

    #[test]
    fn status_filter() {
        assert!(is_status_capture(
            "https://twitter.com/NickHanauer/status/1529220873697124353",
            "NickHanauer"
        ));
        assert!(is_status_capture(
            "http://twitter.com:80/nickhanauer/status/1?s=20",
            "NickHanauer"
        ));
        assert!(is_status_capture(
            "https://mobile.twitter.com/NickHanauer/status/15",
            "NickHanauer"
        ));
        assert!(!is_status_capture(
            "https://twitter.com/NickHanauer/status/",
            "NickHanauer"
        ));
        assert!(!is_status_capture(
            "https://twitter.com/NickHanauer/statuses/1",
            "NickHanauer"
        ));
        assert!(!is_status_capture(
            "https://twitter.com/NickHanauer/status/1/photo/1",
            "NickHanauer"
        ));
        assert!(!is_status_capture(
            "https://twitter.com/NickHanauerX/status/1",
            "NickHanauer"
        ));
    }

    #[test]
    fn replay_split() {
        let s = ArchivedSnapshot::new("20220525164026", "https://twitter.com/a/status/9");
        assert_eq!(
            split_replay_url(&s.replay_url),
            Some(("20220525164026", "https://twitter.com/a/status/9"))
        );
        assert_eq!(split_replay_url("https://web.archive.org/web/2022/x"), None);
    }
}
