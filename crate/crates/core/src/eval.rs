//! Scoring extraction against a gold-labelled corpus.
//!
//! Each item contributes one outcome per field: TP when the prediction
//! equals the gold value, FP when something was predicted that is wrong or
//! not expected, FN when nothing was predicted but a gold value exists, TN
//! when both are absent.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extract::{extract_claim, extract_handle, extract_timestamp, DateMethod, ReferenceTime};
use crate::ocr::{load_ocr_text, OcrError, OcrText};
use crate::parallel::parallel_map;
use crate::verify::normalize_text;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("cannot read manifest {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest {path} is not valid JSON: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("manifest item {id:?}: {reason}")]
    Schema { id: String, reason: String },
    #[error("manifest empty")]
    EmptyManifest,
    #[error("item {id:?}: {source}")]
    Ocr {
        id: String,
        #[source]
        source: OcrError,
    },
}

/// One labelled screenshot, as written in the manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoldLabel {
    pub item_id: String,
    /// Relative paths are resolved against the manifest's directory.
    pub ocr_text_path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_handle: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_timestamp: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_body: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

impl GoldLabel {
    fn gold(&self, field: EvalField) -> Option<&str> {
        match field {
            EvalField::Timestamp => self.gold_timestamp.as_deref(),
            EvalField::Handle => self.gold_handle.as_deref(),
            EvalField::Body => self.gold_body.as_deref(),
        }
    }
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Vec<GoldLabel>, EvalError> {
    let path = path.as_ref();
    let raw = std::fs::read_to_string(path).map_err(|source| EvalError::Io {
        path: path.to_owned(),
        source,
    })?;
    let labels: Vec<GoldLabel> = serde_json::from_str(&raw).map_err(|source| EvalError::Json {
        path: path.to_owned(),
        source,
    })?;
    let base = path.parent().unwrap_or(Path::new(""));
    validate(labels, base)
}

/// Checks ids, gold formats and file presence, resolving relative text
/// paths against `base`.
pub fn validate(labels: Vec<GoldLabel>, base: &Path) -> Result<Vec<GoldLabel>, EvalError> {
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(labels.len());
    for mut label in labels {
        let schema = |reason: String| EvalError::Schema {
            id: label.item_id.clone(),
            reason,
        };
        if label.item_id.is_empty() {
            return Err(schema("empty item_id".into()));
        }
        if !seen.insert(label.item_id.clone()) {
            return Err(schema("duplicate item_id".into()));
        }
        if let Some(ts) = &label.gold_timestamp {
            if NaiveDateTime::parse_from_str(ts, ReferenceTime::FORMAT).is_err() || ts.len() != 19 {
                return Err(schema(format!(
                    "gold_timestamp {ts:?} is not YYYY-MM-DD HH:MM:SS"
                )));
            }
        }
        if let Some(h) = label.gold_handle.take() {
            label.gold_handle = Some(h.trim_start_matches('@').to_owned());
        }
        if label.ocr_text_path.is_relative() {
            label.ocr_text_path = base.join(&label.ocr_text_path);
        }
        if !label.ocr_text_path.is_file() {
            return Err(schema(format!(
                "ocr_text_path {} does not exist",
                label.ocr_text_path.display()
            )));
        }
        out.push(label);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalField {
    Timestamp,
    Handle,
    Body,
}

impl fmt::Display for EvalField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvalField::Timestamp => "timestamp",
            EvalField::Handle => "handle",
            EvalField::Body => "body",
        })
    }
}

impl FromStr for EvalField {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "timestamp" => Ok(EvalField::Timestamp),
            "handle" => Ok(EvalField::Handle),
            "body" => Ok(EvalField::Body),
            other => Err(format!("unknown field {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    TP,
    FP,
    FN,
    TN,
}

pub fn score_item<T: ?Sized>(
    predicted: Option<&T>,
    gold: Option<&T>,
    equal: impl Fn(&T, &T) -> bool,
) -> Outcome {
    match (predicted, gold) {
        (Some(p), Some(g)) if equal(p, g) => Outcome::TP,
        (Some(_), _) => Outcome::FP,
        (None, Some(_)) => Outcome::FN,
        (None, None) => Outcome::TN,
    }
}

/// Field-specific equality: timestamps on canonical rendering, handles
/// case-insensitively, bodies after text normalization.
pub fn field_equal(field: EvalField, predicted: &str, gold: &str) -> bool {
    match field {
        EvalField::Timestamp => predicted == gold,
        EvalField::Handle => predicted.eq_ignore_ascii_case(gold),
        EvalField::Body => normalize_text(predicted) == normalize_text(gold),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn add(&mut self, outcome: Outcome) {
        match outcome {
            Outcome::TP => self.tp += 1,
            Outcome::FP => self.fp += 1,
            Outcome::FN => self.fn_ += 1,
            Outcome::TN => self.tn += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn accuracy(&self) -> Option<f64> {
        ratio(self.tp + self.tn, self.total())
    }

    pub fn precision(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// Harmonic mean of precision and recall; `None` when either is
    /// undefined or both are zero.
    pub fn f1(&self) -> Option<f64> {
        let (p, r) = (self.precision()?, self.recall()?);
        (p + r > 0.0).then(|| 2.0 * p * r / (p + r))
    }
}

impl FromIterator<Outcome> for ConfusionCounts {
    fn from_iter<I: IntoIterator<Item = Outcome>>(iter: I) -> Self {
        let mut c = ConfusionCounts::default();
        iter.into_iter().for_each(|o| c.add(o));
        c
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub field: EvalField,
    pub method: String,
    pub counts: ConfusionCounts,
    pub accuracy: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

impl MetricsReport {
    pub fn from_counts(
        field: EvalField,
        method: impl Into<String>,
        counts: ConfusionCounts,
    ) -> Self {
        MetricsReport {
            field,
            method: method.into(),
            accuracy: counts.accuracy().unwrap_or(0.0),
            precision: counts.precision(),
            recall: counts.recall(),
            f1: counts.f1(),
            counts,
        }
    }
}

/// Per-item scoring detail.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ItemResult {
    pub item_id: String,
    pub predicted: Option<String>,
    pub gold: Option<String>,
    pub outcome: Outcome,
}

/// What the extractor under test reports for one item and field.
pub fn predict(
    text: &OcrText,
    field: EvalField,
    method: DateMethod,
    reference: &ReferenceTime,
) -> Option<String> {
    match field {
        EvalField::Timestamp => extract_timestamp(text, method, reference)
            .ok()
            .map(|t| t.canonical()),
        EvalField::Handle => extract_handle(text).ok().map(|h| h.name),
        EvalField::Body => extract_claim(text, method, reference).body,
    }
}

fn method_label(field: EvalField, method: DateMethod) -> String {
    match field {
        EvalField::Handle => "first-at-token".to_owned(),
        _ => method.name().to_owned(),
    }
}

pub fn evaluate_items(
    manifest: &[GoldLabel],
    field: EvalField,
    method: DateMethod,
    reference: &ReferenceTime,
    jobs: usize,
) -> Result<Vec<ItemResult>, EvalError> {
    parallel_map(manifest, jobs, |label| {
        let text = load_ocr_text(&label.ocr_text_path).map_err(|source| EvalError::Ocr {
            id: label.item_id.clone(),
            source,
        })?;
        let predicted = predict(&text, field, method, reference);
        let gold = label.gold(field).map(str::to_owned);
        let outcome = score_item(predicted.as_deref(), gold.as_deref(), |p, g| {
            field_equal(field, p, g)
        });
        Ok(ItemResult {
            item_id: label.item_id.clone(),
            predicted,
            gold,
            outcome,
        })
    })
    .into_iter()
    .collect()
}

pub fn evaluate(
    manifest: &[GoldLabel],
    field: EvalField,
    method: DateMethod,
    reference: &ReferenceTime,
    jobs: usize,
) -> Result<MetricsReport, EvalError> {
    if manifest.is_empty() {
        return Err(EvalError::EmptyManifest);
    }
    let items = evaluate_items(manifest, field, method, reference, jobs)?;
    let counts = items.iter().map(|i| i.outcome).collect();
    Ok(MetricsReport::from_counts(
        field,
        method_label(field, method),
        counts,
    ))
}

/// The standard report set: timestamp under both methods, then handle.
pub fn evaluate_standard(
    manifest: &[GoldLabel],
    reference: &ReferenceTime,
    jobs: usize,
) -> Result<Vec<MetricsReport>, EvalError> {
    [
        (EvalField::Timestamp, DateMethod::M1),
        (EvalField::Timestamp, DateMethod::M2),
        (EvalField::Handle, DateMethod::M2),
    ]
    .into_iter()
    .map(|(field, method)| evaluate(manifest, field, method, reference, jobs))
    .collect()
}

fn percent(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_owned(), |v| format!("{:.1}%", v * 100.0))
}

/// Aligned plain-text table with Accuracy / Precision / Recall / F1 Score
/// columns.
pub fn render_table(reports: &[MetricsReport]) -> String {
    let mut out = format!(
        "{:<10} {:<15} {:>9} {:>10} {:>8} {:>9}   {}\n",
        "Field", "Method", "Accuracy", "Precision", "Recall", "F1 Score", "TP/FP/FN/TN"
    );
    for r in reports {
        out.push_str(&format!(
            "{:<10} {:<15} {:>9} {:>10} {:>8} {:>9}   {}/{}/{}/{}\n",
            r.field.to_string(),
            r.method,
            percent(Some(r.accuracy)),
            percent(r.precision),
            percent(r.recall),
            percent(r.f1),
            r.counts.tp,
            r.counts.fp,
            r.counts.fn_,
            r.counts.tn
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outcome_rules() {
        let eq = |a: &str, b: &str| a == b;
        assert_eq!(
            score_item(Some("2022-06-24 15:17:00"), Some("2022-06-24 15:17:00"), eq),
            Outcome::TP
        );
        assert_eq!(
            score_item(Some("0453-01-27 00:00:00"), Some("2022-06-24 15:17:00"), eq),
            Outcome::FP
        );
        assert_eq!(score_item(Some("x"), None, eq), Outcome::FP);
        assert_eq!(score_item(None, Some("x"), eq), Outcome::FN);
        assert_eq!(score_item::<str>(None, None, eq), Outcome::TN);
    }

    #[test]
    fn metrics_from_counts() {
        let c = ConfusionCounts {
            tp: 6,
            fp: 2,
            fn_: 1,
            tn: 1,
        };
        let r = MetricsReport::from_counts(EvalField::Timestamp, "m2", c);
        assert!((r.accuracy - 0.7).abs() < 1e-12);
        assert!((r.precision.unwrap() - 0.75).abs() < 1e-12);
        assert!((r.recall.unwrap() - 6.0 / 7.0).abs() < 1e-12);
        // 2 * 0.75 * (6/7) / (0.75 + 6/7) = 0.8 exactly
        assert!((r.f1.unwrap() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn undefined_metrics_are_null() {
        let c = ConfusionCounts {
            tp: 0,
            fp: 0,
            fn_: 0,
            tn: 3,
        };
        let r = MetricsReport::from_counts(EvalField::Handle, "x", c);
        assert_eq!(r.accuracy, 1.0);
        assert_eq!((r.precision, r.recall, r.f1), (None, None, None));
        let json = serde_json::to_value(&r).unwrap();
        assert!(json["precision"].is_null());
        let c = ConfusionCounts {
            tp: 0,
            fp: 1,
            fn_: 1,
            tn: 0,
        };
        assert_eq!(c.f1(), None);
    }

    #[test]
    fn handle_and_body_equality() {
        assert!(field_equal(EvalField::Handle, "nickhanauer", "NickHanauer"));
        assert!(field_equal(
            EvalField::Body,
            "Evil.  Period",
            "evil period."
        ));
        assert!(!field_equal(
            EvalField::Timestamp,
            "2022-06-24 15:17:00",
            "2022-06-24 15:17:01"
        ));
    }

    fn write_manifest(dir: &Path, json: &str) -> PathBuf {
        std::fs::write(dir.join("a.txt"), "@someone\nhi\n").unwrap();
        let p = dir.join("manifest.json");
        std::fs::write(&p, json).unwrap();
        p
    }

    #[test]
    fn duplicate_ids_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_manifest(
            dir.path(),
            r#"[{"item_id":"x","ocr_text_path":"a.txt"},{"item_id":"x","ocr_text_path":"a.txt"}]"#,
        );
        match load_manifest(p) {
            Err(EvalError::Schema { id, reason }) => {
                assert_eq!(id, "x");
                assert!(reason.contains("duplicate"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dangling_path_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_manifest(
            dir.path(),
            r#"[{"item_id":"y","ocr_text_path":"missing.txt"}]"#,
        );
        match load_manifest(p) {
            Err(EvalError::Schema { id, reason }) => {
                assert_eq!(id, "y");
                assert!(reason.contains("missing.txt"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_gold_timestamp_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_manifest(
            dir.path(),
            r#"[{"item_id":"z","ocr_text_path":"a.txt","gold_timestamp":"2022-6-24 15:17"}]"#,
        );
        assert!(matches!(load_manifest(p), Err(EvalError::Schema { .. })));
    }

    #[test]
    fn valid_manifest_loads_and_strips_at() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_manifest(
            dir.path(),
            r#"[{"item_id":"a","ocr_text_path":"a.txt","gold_handle":"@someone"},
                {"item_id":"b","ocr_text_path":"a.txt"},
                {"item_id":"c","ocr_text_path":"a.txt","notes":"dup text"}]"#,
        );
        let labels = load_manifest(p).unwrap();
        assert_eq!(labels.len(), 3);
        assert_eq!(labels[0].gold_handle.as_deref(), Some("someone"));
        let r: ReferenceTime = "2022-01-27 00:00:00".parse().unwrap();
        let rep = evaluate(&labels, EvalField::Handle, DateMethod::M2, &r, 2).unwrap();
        assert_eq!(
            rep.counts,
            ConfusionCounts {
                tp: 1,
                fp: 2,
                fn_: 0,
                tn: 0
            }
        );
    }

    #[test]
    fn empty_manifest_is_an_error() {
        let r: ReferenceTime = "2022-01-27 00:00:00".parse().unwrap();
        assert!(matches!(
            evaluate(&[], EvalField::Handle, DateMethod::M2, &r, 1),
            Err(EvalError::EmptyManifest)
        ));
    }
}
