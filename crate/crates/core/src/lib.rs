//! Screenshot-of-a-tweet verification toolkit.
//!
//! The pipeline runs OCR over a screenshot ([`ocr`]), pulls out the handle,
//! timestamp and tweet text ([`extract`]), looks for archived copies of the
//! account's tweets around that day in the Wayback Machine ([`archive`]),
//! and folds the evidence into a verdict ([`verify`]). [`eval`] scores the
//! extractors against a labelled corpus.

pub mod archive;
pub mod eval;
pub mod extract;
pub mod ocr;
mod parallel;
pub mod verify;

pub use archive::{ArchiveClient, ArchiveError, ArchivedSnapshot, FetchError};
pub use extract::{extract_claim, DateMethod, ExtractedClaim, ReferenceTime};
pub use ocr::{OcrEngine, OcrText};
pub use verify::{verify, Verdict, VerdictStatus};
