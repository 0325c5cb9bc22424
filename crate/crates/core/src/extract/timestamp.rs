//! Date and time recovery from OCR text.
//!
//! Method 1 is a small date finder in the spirit of generic "find every
//! date-looking string" libraries, including their habit of reading bare
//! 3–4 digit numbers as years. Method 2 keeps only Method 1 candidates
//! whose date portion is at least 6 characters long and has at least 4
//! digits.

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike};
use once_cell::sync::Lazy;
use regex::{Captures, Regex};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::ExtractError;
use crate::ocr::OcrText;

/// One component of a date/time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DateField {
    Year,
    Month,
    Day,
    Hour,
    Minute,
    Second,
    Meridiem,
}

impl DateField {
    pub const ALL: [DateField; 7] = [
        DateField::Year,
        DateField::Month,
        DateField::Day,
        DateField::Hour,
        DateField::Minute,
        DateField::Second,
        DateField::Meridiem,
    ];

    fn bit(self) -> u8 {
        1 << self as u8
    }
}

/// Small bit set over [`DateField`].
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct FieldSet(u8);

impl FieldSet {
    pub const fn empty() -> Self {
        FieldSet(0)
    }

    pub fn of(fields: &[DateField]) -> Self {
        fields.iter().fold(Self::empty(), |s, &f| s.with(f))
    }

    pub fn with(self, field: DateField) -> Self {
        FieldSet(self.0 | field.bit())
    }

    pub fn insert(&mut self, field: DateField) {
        self.0 |= field.bit();
    }

    pub fn contains(self, field: DateField) -> bool {
        self.0 & field.bit() != 0
    }

    pub fn contains_all(self, other: FieldSet) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn union(self, other: FieldSet) -> Self {
        FieldSet(self.0 | other.0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = DateField> {
        DateField::ALL
            .into_iter()
            .filter(move |f| self.contains(*f))
    }

    fn has_full_date(self) -> bool {
        self.contains_all(FieldSet::of(&[
            DateField::Year,
            DateField::Month,
            DateField::Day,
        ]))
    }

    fn has_time(self) -> bool {
        self.contains(DateField::Hour)
    }
}

impl fmt::Debug for FieldSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl Serialize for FieldSet {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for FieldSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let fields = Vec::<DateField>::deserialize(d)?;
        Ok(FieldSet::of(&fields))
    }
}

/// Byte offsets of a match within its line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

/// A date/time-looking substring found in OCR text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateCandidate {
    pub raw: String,
    pub line_index: usize,
    pub span: Span,
    pub explicit_fields: FieldSet,
    /// The date portion of `raw`, time-of-day excluded. Empty for a
    /// time-only candidate.
    pub date_part_raw: String,
}

/// The "now" used to fill date fields that a candidate does not state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReferenceTime(NaiveDateTime);

impl ReferenceTime {
    pub const FORMAT: &'static str = "%Y-%m-%d %H:%M:%S";

    pub fn new(at: NaiveDateTime) -> Self {
        ReferenceTime(at)
    }

    /// Today's local date at midnight.
    pub fn today_midnight() -> Self {
        let today = chrono::Local::now().date_naive();
        ReferenceTime(today.and_hms_opt(0, 0, 0).expect("midnight exists"))
    }

    pub fn datetime(&self) -> NaiveDateTime {
        self.0
    }
}

impl FromStr for ReferenceTime {
    type Err = chrono::ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NaiveDateTime::parse_from_str(s.trim(), Self::FORMAT).map(ReferenceTime)
    }
}

impl fmt::Display for ReferenceTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.format(Self::FORMAT))
    }
}

/// A fully resolved, calendar-valid datetime and the text it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Timestamp {
    pub year: i32,
    pub month: u32,
    pub day: u32,
    pub hour: u32,
    pub minute: u32,
    pub second: u32,
    pub resolved_from: DateCandidate,
    /// Fields copied from the reference time rather than read from text.
    pub filled_fields: FieldSet,
}

impl Timestamp {
    pub fn date(&self) -> NaiveDate {
        NaiveDate::from_ymd_opt(self.year, self.month, self.day).expect("validated on construction")
    }

    pub fn naive(&self) -> NaiveDateTime {
        self.date()
            .and_hms_opt(self.hour, self.minute, self.second)
            .expect("validated on construction")
    }

    /// `YYYY-MM-DD HH:MM:SS`, zero padded.
    pub fn canonical(&self) -> String {
        self.to_string()
    }

    fn from_parts(
        dt: NaiveDateTime,
        resolved_from: DateCandidate,
        filled_fields: FieldSet,
    ) -> Self {
        Timestamp {
            year: dt.year(),
            month: dt.month(),
            day: dt.day(),
            hour: dt.hour(),
            minute: dt.minute(),
            second: dt.second(),
            resolved_from,
            filled_fields,
        }
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:04}-{:02}-{:02} {:02}:{:02}:{:02}",
            self.year, self.month, self.day, self.hour, self.minute, self.second
        )
    }
}

#[derive(Serialize, Deserialize)]
struct TimestampRecord {
    value: String,
    candidate: DateCandidate,
    filled_fields: FieldSet,
}

impl Serialize for Timestamp {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        TimestampRecord {
            value: self.canonical(),
            candidate: self.resolved_from.clone(),
            filled_fields: self.filled_fields,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Timestamp {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rec = TimestampRecord::deserialize(d)?;
        let dt = NaiveDateTime::parse_from_str(&rec.value, ReferenceTime::FORMAT)
            .map_err(|e| serde::de::Error::custom(format!("bad timestamp {:?}: {e}", rec.value)))?;
        Ok(Timestamp::from_parts(dt, rec.candidate, rec.filled_fields))
    }
}

/// Timestamp extraction strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DateMethod {
    /// Every date-looking candidate.
    M1,
    /// Method 1 gated by the 6-character / 4-digit date filter.
    M2,
}

impl DateMethod {
    pub fn name(self) -> &'static str {
        match self {
            DateMethod::M1 => "m1",
            DateMethod::M2 => "m2",
        }
    }
}

impl fmt::Display for DateMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DateMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "m1" | "1" => Ok(DateMethod::M1),
            "m2" | "2" => Ok(DateMethod::M2),
            other => Err(format!("unknown method {other:?} (expected m1 or m2)")),
        }
    }
}

const MONTH: &str = r"(?P<mon>jan(?:uary)?|feb(?:ruary)?|mar(?:ch)?|apr(?:il)?|may|june?|july?|aug(?:ust)?|sep(?:t(?:ember)?)?|oct(?:ober)?|nov(?:ember)?|dec(?:ember)?)";

static MONTH_DAY_YEAR: Lazy<Regex> = Lazy::new(|| {
    Regex::new(&format!(
        r"(?i)\b{MONTH}\.?\s+(?P<day>\d{{1,2}})(?:st|nd|rd|th)?,?\s+(?P<year>\d{{4}})\b"
    ))
    .unwrap()
});

static DAY_MONTH_YEAR: Lazy<Regex> = Lazy::new(|| {
    Regex::new(&format!(
        r"(?i)\b(?P<day>\d{{1,2}})(?:st|nd|rd|th)?\s+{MONTH}\.?,?\s+(?P<year>\d{{4}})\b"
    ))
    .unwrap()
});

static NUMERIC_YMD: Lazy<Regex> = Lazy::new(|| {
    Regex::new(r"\b(?P<year>\d{4})(?P<s1>[-/.])(?P<mon>\d{1,2})(?P<s2>[-/.])(?P<day>\d{1,2})\b")
        .unwrap()
});

static NUMERIC_MDY: Lazy<Regex> = Lazy::new(|| {
    Regex::new(
        r"\b(?P<mon>\d{1,2})(?P<s1>[-/.])(?P<day>\d{1,2})(?P<s2>[-/.])(?P<year>\d{4}|\d{2})\b",
    )
    .unwrap()
});

static TIME_OF_DAY: Lazy<Regex> = Lazy::new(|| {
    Regex::new(r"(?i)\b(?P<h>\d{1,2}):(?P<m>\d{2})(?::(?P<s>\d{2}))?(?:\s?(?P<mer>[ap])\.?m\b\.?)?")
        .unwrap()
});

static TOKEN: Lazy<Regex> = Lazy::new(|| Regex::new(r"\S+").unwrap());

static RELATIVE_AGE: Lazy<Regex> = Lazy::new(|| Regex::new(r"^\d+[smhdw]$").unwrap());

#[derive(Debug, Clone, Copy)]
enum Piece {
    Date {
        year: i32,
        month: u32,
        day: u32,
    },
    Time {
        hour: u32,
        minute: u32,
        second: Option<u32>,
        meridiem: bool,
    },
    Year(i32),
}

#[derive(Debug, Clone, Copy)]
struct Located {
    start: usize,
    end: usize,
    piece: Piece,
}

impl Located {
    fn overlaps(&self, start: usize, end: usize) -> bool {
        self.start < end && start < self.end
    }

    fn fields(&self) -> FieldSet {
        use DateField::*;
        match self.piece {
            Piece::Date { .. } => FieldSet::of(&[Year, Month, Day]),
            Piece::Time {
                second, meridiem, ..
            } => {
                let mut f = FieldSet::of(&[Hour, Minute]);
                if second.is_some() {
                    f.insert(Second);
                }
                if meridiem {
                    f.insert(Meridiem);
                }
                f
            }
            Piece::Year(_) => FieldSet::of(&[Year]),
        }
    }
}

fn month_number(name: &str) -> Option<u32> {
    let key = name.get(..3)?.to_ascii_lowercase();
    let months = [
        "jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec",
    ];
    months.iter().position(|m| *m == key).map(|i| i as u32 + 1)
}

/// Digits glued to either side of a match mean it was cut out of a longer
/// number.
fn digit_bounded(line: &str, start: usize, end: usize) -> bool {
    let before = line[..start].chars().next_back();
    let after = line[end..].chars().next();
    !before.is_some_and(|c| c.is_ascii_digit()) && !after.is_some_and(|c| c.is_ascii_digit())
}

fn parse_u32(caps: &Captures<'_>, name: &str) -> Option<u32> {
    caps.name(name)?.as_str().parse().ok()
}

fn date_from_caps(caps: &Captures<'_>, named_month: bool) -> Option<Piece> {
    if let (Some(a), Some(b)) = (caps.name("s1"), caps.name("s2")) {
        if a.as_str() != b.as_str() {
            return None;
        }
    }
    let month = if named_month {
        month_number(caps.name("mon")?.as_str())?
    } else {
        parse_u32(caps, "mon")?
    };
    let day = parse_u32(caps, "day")?;
    let year_raw = caps.name("year")?.as_str();
    let mut year: i32 = year_raw.parse().ok()?;
    if year_raw.len() == 2 {
        year += 2000;
    }
    NaiveDate::from_ymd_opt(year, month, day)?;
    Some(Piece::Date { year, month, day })
}

fn time_from_caps(caps: &Captures<'_>) -> Option<Piece> {
    let hour = parse_u32(caps, "h")?;
    let minute = parse_u32(caps, "m")?;
    let second = match caps.name("s") {
        Some(s) => Some(s.as_str().parse().ok()?),
        None => None,
    };
    if minute > 59 || second.is_some_and(|s| s > 59) {
        return None;
    }
    let hour = match caps.name("mer") {
        Some(mer) => {
            if !(1..=12).contains(&hour) {
                return None;
            }
            let pm = mer.as_str().eq_ignore_ascii_case("p");
            match (hour, pm) {
                (12, false) => 0,
                (12, true) => 12,
                (h, true) => h + 12,
                (h, false) => h,
            }
        }
        None if hour > 23 => return None,
        None => hour,
    };
    Some(Piece::Time {
        hour,
        minute,
        second,
        meridiem: caps.name("mer").is_some(),
    })
}

/// Bare integer tokens of 3–4 digits, with non-alphanumeric decoration
/// (such as an OCR'd icon glyph) stripped from both ends.
fn year_tokens(line: &str) -> Vec<(usize, usize, i32)> {
    let mut out = Vec::new();
    for m in TOKEN.find_iter(line) {
        let (token, token_start) = (m.as_str(), m.start());
        let lead = token.len()
            - token
                .trim_start_matches(|c: char| !c.is_alphanumeric())
                .len();
        let core = token.trim_matches(|c: char| !c.is_alphanumeric());
        if (3..=4).contains(&core.len()) && core.bytes().all(|b| b.is_ascii_digit()) {
            let start = token_start + lead;
            out.push((
                start,
                start + core.len(),
                core.parse().expect("ascii digits"),
            ));
        }
    }
    out
}

fn scan_line(line: &str) -> Vec<Located> {
    let mut found: Vec<Located> = Vec::new();
    let push = |found: &mut Vec<Located>, start: usize, end: usize, piece: Piece| {
        if digit_bounded(line, start, end) && !found.iter().any(|l| l.overlaps(start, end)) {
            found.push(Located { start, end, piece });
        }
    };

    for (re, named) in [
        (&*MONTH_DAY_YEAR, true),
        (&*DAY_MONTH_YEAR, true),
        (&*NUMERIC_YMD, false),
        (&*NUMERIC_MDY, false),
    ] {
        for caps in re.captures_iter(line) {
            let m = caps.get(0).unwrap();
            if let Some(piece) = date_from_caps(&caps, named) {
                push(&mut found, m.start(), m.end(), piece);
            }
        }
    }
    for caps in TIME_OF_DAY.captures_iter(line) {
        let m = caps.get(0).unwrap();
        if let Some(piece) = time_from_caps(&caps) {
            push(&mut found, m.start(), m.end(), piece);
        }
    }
    for (start, end, year) in year_tokens(line) {
        push(&mut found, start, end, Piece::Year(year));
    }
    found.sort_by_key(|l| l.start);
    found
}

const MAX_MERGE_GAP_TOKENS: usize = 3;

fn gap_tokens(line: &str, a: &Located, b: &Located) -> usize {
    let (lo, hi) = if a.end <= b.start {
        (a.end, b.start)
    } else {
        (b.end, a.start)
    };
    line[lo..hi].split_whitespace().count()
}

struct Group {
    date: Option<Located>,
    time: Option<Located>,
}

/// Pairs each time-of-day with the nearest full date on the same line, if
/// one lies within three tokens. Each date pairs with at most one time.
fn merge_pieces(line: &str, pieces: Vec<Located>) -> Vec<Group> {
    let dates: Vec<usize> = (0..pieces.len())
        .filter(|&i| matches!(pieces[i].piece, Piece::Date { .. }))
        .collect();
    let mut partner: Vec<Option<usize>> = vec![None; pieces.len()];
    for (ti, t) in pieces.iter().enumerate() {
        if !matches!(t.piece, Piece::Time { .. }) {
            continue;
        }
        let best = dates
            .iter()
            .copied()
            .filter(|&di| partner[di].is_none())
            .map(|di| (gap_tokens(line, t, &pieces[di]), di))
            .filter(|&(gap, _)| gap <= MAX_MERGE_GAP_TOKENS)
            .min();
        if let Some((_, di)) = best {
            partner[di] = Some(ti);
            partner[ti] = Some(di);
        }
    }

    let mut groups = Vec::new();
    for (i, p) in pieces.iter().enumerate() {
        match (p.piece, partner[i]) {
            (Piece::Time { .. }, Some(_)) => {}
            (Piece::Date { .. }, Some(ti)) => groups.push(Group {
                date: Some(*p),
                time: Some(pieces[ti]),
            }),
            (Piece::Time { .. }, None) => groups.push(Group {
                date: None,
                time: Some(*p),
            }),
            (_, _) => groups.push(Group {
                date: Some(*p),
                time: None,
            }),
        }
    }
    groups
}

fn resolve(line: &str, line_index: usize, group: &Group, reference: &ReferenceTime) -> Timestamp {
    use DateField::*;
    let r = reference.datetime();
    let mut explicit = FieldSet::empty();
    let (mut start, mut end) = (usize::MAX, 0);
    for p in [group.date, group.time].into_iter().flatten() {
        explicit = explicit.union(p.fields());
        start = start.min(p.start);
        end = end.max(p.end);
    }

    let (mut year, mut month, mut day) = (r.year(), r.month(), r.day());
    let (mut hour, mut minute, mut second) = (r.hour(), r.minute(), r.second());
    let mut date_part_raw = String::new();
    if let Some(d) = group.date {
        date_part_raw = line[d.start..d.end].to_owned();
        match d.piece {
            Piece::Date {
                year: y,
                month: m,
                day: dd,
            } => (year, month, day) = (y, m, dd),
            Piece::Year(y) => year = y,
            Piece::Time { .. } => unreachable!("times are never the date half"),
        }
    }
    if let Some(Located {
        piece:
            Piece::Time {
                hour: h,
                minute: m,
                second: s,
                ..
            },
        ..
    }) = group.time
    {
        hour = h;
        minute = m;
        second = s.unwrap_or(r.second());
    }

    // A reference day such as Feb 29 may not exist in a year taken from text.
    let last_day = days_in_month(year, month);
    day = day.min(last_day);
    let dt = NaiveDate::from_ymd_opt(year, month, day)
        .and_then(|d| d.and_hms_opt(hour, minute, second))
        .expect("fields validated");

    let filled = [Year, Month, Day, Hour, Minute, Second]
        .into_iter()
        .filter(|f| !explicit.contains(*f))
        .fold(FieldSet::empty(), FieldSet::with);

    let candidate = DateCandidate {
        raw: line[start..end].to_owned(),
        line_index,
        span: Span { start, end },
        explicit_fields: explicit,
        date_part_raw,
    };
    Timestamp::from_parts(dt, candidate, filled)
}

fn days_in_month(year: i32, month: u32) -> u32 {
    let (ny, nm) = if month == 12 {
        (year + 1, 1)
    } else {
        (year, month + 1)
    };
    NaiveDate::from_ymd_opt(ny, nm, 1)
        .and_then(|d| d.pred_opt())
        .map(|d| d.day())
        .unwrap_or(28)
}

/// Method 1: every date/time candidate in reading order, resolved against
/// `reference`.
pub fn find_date_candidates(text: &OcrText, reference: &ReferenceTime) -> Vec<Timestamp> {
    let mut out = Vec::new();
    for (line_index, line) in text.lines().iter().enumerate() {
        let pieces = scan_line(line);
        for group in merge_pieces(line, pieces) {
            out.push(resolve(line, line_index, &group, reference));
        }
    }
    out.sort_by_key(|t| (t.resolved_from.line_index, t.resolved_from.span.start));
    out
}

/// The Method 2 gate on a single candidate.
pub fn passes_date_filter(candidate: &DateCandidate) -> bool {
    let date = &candidate.date_part_raw;
    date.chars().count() >= 6 && date.chars().filter(|c| c.is_ascii_digit()).count() >= 4
}

/// Method 2: keeps candidates whose date portion is at least 6 characters
/// (separators included) and contains at least 4 digits.
pub fn filter_dates(candidates: Vec<Timestamp>) -> Vec<Timestamp> {
    candidates
        .into_iter()
        .filter(|t| passes_date_filter(&t.resolved_from))
        .collect()
}

pub fn candidates_for(
    text: &OcrText,
    method: DateMethod,
    reference: &ReferenceTime,
) -> Vec<Timestamp> {
    let all = find_date_candidates(text, reference);
    match method {
        DateMethod::M1 => all,
        DateMethod::M2 => filter_dates(all),
    }
}

fn selection_rank(t: &Timestamp) -> (u8, usize, usize) {
    let fields = t.resolved_from.explicit_fields;
    let tier = match (fields.has_full_date(), fields.has_time()) {
        (true, true) => 0,
        (true, false) => 1,
        _ => 2,
    };
    (tier, t.resolved_from.line_index, t.resolved_from.span.start)
}

/// Picks the single best candidate: full date with time, then full date,
/// then earliest in reading order.
pub fn select_timestamp(candidates: &[Timestamp]) -> Option<&Timestamp> {
    candidates.iter().min_by_key(|t| selection_rank(t))
}

/// True when some line carries a standalone relative age such as `27m`.
pub fn has_relative_age(text: &OcrText) -> bool {
    text.lines()
        .iter()
        .flat_map(|l| l.split_whitespace())
        .any(|token| {
            let core = token.trim_matches(|c: char| !c.is_alphanumeric());
            RELATIVE_AGE.is_match(core)
        })
}

pub fn extract_timestamp(
    text: &OcrText,
    method: DateMethod,
    reference: &ReferenceTime,
) -> Result<Timestamp, ExtractError> {
    let candidates = candidates_for(text, method, reference);
    match select_timestamp(&candidates) {
        Some(t) => Ok(t.clone()),
        None if has_relative_age(text) => Err(ExtractError::RelativeTimestampOnly),
        None => Err(ExtractError::NoTimestampFound),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> ReferenceTime {
        "2022-01-27 00:00:00".parse().unwrap()
    }

    fn find(lines: &[&str]) -> Vec<Timestamp> {
        find_date_candidates(&OcrText::from_lines(lines), &reference())
    }

    fn values(ts: &[Timestamp]) -> Vec<String> {
        ts.iter().map(Timestamp::canonical).collect()
    }

    #[test]
    fn time_and_date_merge() {
        let got = find(&["3:17 PM Jun 24, 2022 - Twitter Web App"]);
        assert_eq!(values(&got), ["2022-06-24 15:17:00"]);
        let c = &got[0].resolved_from;
        assert_eq!(c.raw, "3:17 PM Jun 24, 2022");
        assert_eq!(c.date_part_raw, "Jun 24, 2022");
        assert!(c.explicit_fields.contains(DateField::Meridiem));
        assert!(got[0].filled_fields.contains(DateField::Second));
    }

    #[test]
    fn date_before_time_with_separator_token() {
        let got = find(&["Jun 24, 2022 · 9:05 AM"]);
        assert_eq!(values(&got), ["2022-06-24 09:05:00"]);
    }

    #[test]
    fn distant_time_does_not_merge() {
        let got = find(&["Jun 24, 2022 was a long day and then at 9:05 AM"]);
        assert_eq!(got.len(), 2);
    }

    #[test]
    fn bare_number_is_year_only() {
        let got = find(&["©0453 Retweets"]);
        assert_eq!(values(&got), ["0453-01-27 00:00:00"]);
        assert_eq!(got[0].resolved_from.date_part_raw, "0453");
        assert_eq!(
            got[0].resolved_from.explicit_fields,
            FieldSet::of(&[DateField::Year])
        );
    }

    #[test]
    fn grouped_thousands_are_not_years() {
        assert!(find(&["1,234 Likes"]).is_empty());
        assert!(find(&["12.5K Views"]).is_empty());
    }

    #[test]
    fn relative_age_is_not_a_date() {
        assert!(find(&["27m"]).is_empty());
        let t = OcrText::from_lines(["Some Person @someone · 27m"]);
        assert!(has_relative_age(&t));
    }

    #[test]
    fn meridiem_edges() {
        assert_eq!(
            values(&find(&["12:05 AM Jan 1, 2021"])),
            ["2021-01-01 00:05:00"]
        );
        assert_eq!(
            values(&find(&["12:05 PM Jan 1, 2021"])),
            ["2021-01-01 12:05:00"]
        );
        assert_eq!(
            values(&find(&["11:59 p.m. Jan 1, 2021"])),
            ["2021-01-01 23:59:00"]
        );
        assert!(find(&["13:05 PM"]).is_empty());
    }

    #[test]
    fn numeric_orders() {
        assert_eq!(values(&find(&["2022-06-24"])), ["2022-06-24 00:00:00"]);
        assert_eq!(values(&find(&["6/24/2022"])), ["2022-06-24 00:00:00"]);
        assert_eq!(values(&find(&["6/24/22"])), ["2022-06-24 00:00:00"]);
        assert_eq!(values(&find(&["24 June 2022"])), ["2022-06-24 00:00:00"]);
        // mixed separators and impossible dates are rejected
        assert!(find(&["2022-06/24"])
            .iter()
            .all(|t| t.resolved_from.explicit_fields
                != FieldSet::of(&[DateField::Year, DateField::Month, DateField::Day])));
        assert!(find(&["Feb 30, 2022"])
            .iter()
            .all(|t| t.month != 2 || t.day != 30));
    }

    #[test]
    fn feb_29_reference_clamps_in_common_year() {
        let r: ReferenceTime = "2020-02-29 00:00:00".parse().unwrap();
        let got = find_date_candidates(&OcrText::from_lines(["2021"]), &r);
        assert_eq!(values(&got), ["2021-02-28 00:00:00"]);
    }

    #[test]
    fn filter_rule() {
        let got = find(&["3:17 PM Jun 24, 2022", "©0453 Retweets", "9:41"]);
        assert_eq!(got.len(), 3);
        let kept = filter_dates(got);
        assert_eq!(values(&kept), ["2022-06-24 15:17:00"]);
    }

    #[test]
    fn selection_prefers_full_datetime() {
        let text = OcrText::from_lines(["0453 Retweets", "Jun 24, 2022", "3:17 PM Jun 25, 2022"]);
        let t = extract_timestamp(&text, DateMethod::M1, &reference()).unwrap();
        assert_eq!(t.canonical(), "2022-06-25 15:17:00");
    }

    #[test]
    fn relative_only_error() {
        let text = OcrText::from_lines(["Someone @someone · 27m", "hello"]);
        assert_eq!(
            extract_timestamp(&text, DateMethod::M2, &reference()),
            Err(ExtractError::RelativeTimestampOnly)
        );
        let text = OcrText::from_lines(["hello"]);
        assert_eq!(
            extract_timestamp(&text, DateMethod::M2, &reference()),
            Err(ExtractError::NoTimestampFound)
        );
    }

    #[test]
    fn timestamp_json_round_trip() {
        let t = find(&["3:17 PM Jun 24, 2022"]).remove(0);
        let json = serde_json::to_string(&t).unwrap();
        let back: Timestamp = serde_json::from_str(&json).unwrap();
        assert_eq!(back, t);
    }
}
