//! OCR text acquisition.
//!
//! Text either comes from an external OCR engine run as a subprocess
//! (Tesseract by default) or from a pre-extracted text file. Both paths
//! produce the same line-structured [`OcrText`].

use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::parallel::parallel_map;

/// Default engine command. `{input}` is replaced by the image path.
pub const DEFAULT_ENGINE_CMD: &str = "tesseract {input} stdout";

/// Environment variable overriding [`DEFAULT_ENGINE_CMD`].
pub const ENGINE_CMD_ENV: &str = "TWEETSHOT_OCR_CMD";

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

const INPUT_PLACEHOLDER: &str = "{input}";

#[derive(Debug, Error)]
pub enum OcrError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} is not valid UTF-8 (first bad byte at offset {offset})")]
    Encoding { path: PathBuf, offset: usize },
    #[error("invalid OCR command template {template:?}: {reason}")]
    BadTemplate {
        template: String,
        reason: &'static str,
    },
    #[error("OCR engine {program:?} could not be executed: {source}")]
    EngineNotFound {
        program: String,
        #[source]
        source: std::io::Error,
    },
    #[error("OCR engine failed ({status}): {stderr}")]
    EngineFailed { status: String, stderr: String },
    #[error("OCR engine produced no text for {path}")]
    EmptyOutput { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OcrSource {
    EngineRun,
    TextFile,
}

/// Line-structured text recovered from a screenshot.
///
/// Lines are kept in reading order, blank lines included, and are stored
/// in NFC form. No line contains a line-break character.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OcrText {
    lines: Vec<String>,
    source: OcrSource,
    image_ref: Option<String>,
    replacements: usize,
}

impl OcrText {
    /// Splits `text` into lines. Accepts `\n`, `\r\n` and lone `\r`
    /// terminators as well as the Unicode line/paragraph separators.
    pub fn parse(text: &str, source: OcrSource) -> Self {
        Self {
            lines: split_lines(text),
            source,
            image_ref: None,
            replacements: 0,
        }
    }

    pub fn from_lines<I, S>(lines: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let joined: Vec<String> = lines.into_iter().map(|l| l.as_ref().to_owned()).collect();
        Self::parse(&join_terminated(&joined), OcrSource::TextFile)
    }

    pub fn with_image_ref(mut self, image_ref: impl Into<String>) -> Self {
        self.image_ref = Some(image_ref.into());
        self
    }

    pub fn lines(&self) -> &[String] {
        &self.lines
    }

    pub fn line(&self, index: usize) -> Option<&str> {
        self.lines.get(index).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn source(&self) -> OcrSource {
        self.source
    }

    pub fn image_ref(&self) -> Option<&str> {
        self.image_ref.as_deref()
    }

    /// Number of undecodable byte sequences the engine emitted that were
    /// replaced with U+FFFD.
    pub fn replacements(&self) -> usize {
        self.replacements
    }

    /// Renders the text with every line terminated by `\n`. Loading the
    /// result again yields an identical line sequence.
    pub fn to_text(&self) -> String {
        join_terminated(&self.lines)
    }
}

fn join_terminated(lines: &[String]) -> String {
    let mut out = String::with_capacity(lines.iter().map(|l| l.len() + 1).sum());
    for line in lines {
        out.push_str(line);
        out.push('\n');
    }
    out
}

fn is_break(c: char) -> bool {
    matches!(
        c,
        '\n' | '\r' | '\u{0B}' | '\u{0C}' | '\u{85}' | '\u{2028}' | '\u{2029}'
    )
}

fn split_lines(text: &str) -> Vec<String> {
    let text: String = text.nfc().collect();
    let mut lines = Vec::new();
    let mut current = String::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if is_break(c) {
            if c == '\r' && chars.peek() == Some(&'\n') {
                chars.next();
            }
            lines.push(std::mem::take(&mut current));
        } else {
            current.push(c);
        }
    }
    if !current.is_empty() {
        lines.push(current);
    }
    lines
}

/// Loads pre-extracted OCR output from a UTF-8 text file.
pub fn load_ocr_text(path: impl AsRef<Path>) -> Result<OcrText, OcrError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| OcrError::Io {
        path: path.to_owned(),
        source,
    })?;
    let text = std::str::from_utf8(&bytes).map_err(|e| OcrError::Encoding {
        path: path.to_owned(),
        offset: e.valid_up_to(),
    })?;
    Ok(OcrText::parse(text, OcrSource::TextFile).with_image_ref(path.display().to_string()))
}

/// How to invoke the external engine.
#[derive(Debug, Clone)]
pub struct OcrEngine {
    template: String,
    timeout: Duration,
}

impl Default for OcrEngine {
    fn default() -> Self {
        Self::new(DEFAULT_ENGINE_CMD)
    }
}

impl OcrEngine {
    pub fn new(template: impl Into<String>) -> Self {
        Self {
            template: template.into(),
            timeout: DEFAULT_TIMEOUT,
        }
    }

    /// Uses `TWEETSHOT_OCR_CMD` when set, the Tesseract default otherwise.
    pub fn from_env() -> Self {
        match std::env::var(ENGINE_CMD_ENV) {
            Ok(cmd) if !cmd.trim().is_empty() => Self::new(cmd),
            _ => Self::default(),
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn template(&self) -> &str {
        &self.template
    }

    fn argv(&self, input: &Path) -> Result<Vec<String>, OcrError> {
        let bad = |reason| OcrError::BadTemplate {
            template: self.template.clone(),
            reason,
        };
        if !self.template.contains(INPUT_PLACEHOLDER) {
            return Err(bad("missing {input} placeholder"));
        }
        let words = shlex::split(&self.template).ok_or_else(|| bad("unbalanced quotes"))?;
        if words.is_empty() {
            return Err(bad("empty command"));
        }
        let input = input.to_string_lossy();
        Ok(words
            .into_iter()
            .map(|w| w.replace(INPUT_PLACEHOLDER, &input))
            .collect())
    }

    /// Runs the engine on one image.
    pub fn run(&self, image: impl AsRef<Path>) -> Result<OcrText, OcrError> {
        let image = image.as_ref();
        std::fs::metadata(image).map_err(|source| OcrError::Io {
            path: image.to_owned(),
            source,
        })?;
        let argv = self.argv(image)?;

        let mut child = Command::new(&argv[0])
            .args(&argv[1..])
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|source| OcrError::EngineNotFound {
                program: argv[0].clone(),
                source,
            })?;

        let stdout = drain(child.stdout.take().expect("piped stdout"));
        let stderr = drain(child.stderr.take().expect("piped stderr"));

        let deadline = Instant::now() + self.timeout;
        let status = loop {
            match child.try_wait() {
                Ok(Some(status)) => break status,
                Ok(None) if Instant::now() >= deadline => {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Err(OcrError::EngineFailed {
                        status: format!("timed out after {:?}", self.timeout),
                        stderr: String::new(),
                    });
                }
                Ok(None) => thread::sleep(Duration::from_millis(10)),
                Err(e) => {
                    return Err(OcrError::EngineFailed {
                        status: format!("wait failed: {e}"),
                        stderr: String::new(),
                    })
                }
            }
        };

        let stdout = stdout.join().unwrap_or_default();
        let stderr = stderr.join().unwrap_or_default();
        if !status.success() {
            return Err(OcrError::EngineFailed {
                status: status.to_string(),
                stderr: String::from_utf8_lossy(&stderr).trim().to_owned(),
            });
        }

        let (text, replacements) = decode_lossy(&stdout);
        let mut ocr = OcrText::parse(&text, OcrSource::EngineRun);
        for line in &mut ocr.lines {
            line.truncate(line.trim_end().len());
        }
        if ocr.lines.iter().all(|l| l.is_empty()) {
            return Err(OcrError::EmptyOutput {
                path: image.to_owned(),
            });
        }
        ocr.replacements = replacements;
        Ok(ocr.with_image_ref(image.display().to_string()))
    }

    /// Runs the engine over several images with at most `jobs` processes
    /// alive at once. Results are returned in input order.
    pub fn run_many<P>(&self, images: &[P], jobs: usize) -> Vec<Result<OcrText, OcrError>>
    where
        P: AsRef<Path> + Sync,
    {
        parallel_map(images, jobs, |p| self.run(p))
    }
}

/// Convenience wrapper for [`OcrEngine::run`].
pub fn run_ocr(image: impl AsRef<Path>, engine: &OcrEngine) -> Result<OcrText, OcrError> {
    engine.run(image)
}

fn drain<R: Read + Send + 'static>(mut r: R) -> thread::JoinHandle<Vec<u8>> {
    thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = r.read_to_end(&mut buf);
        buf
    })
}

fn decode_lossy(bytes: &[u8]) -> (String, usize) {
    let mut out = String::with_capacity(bytes.len());
    let mut replaced = 0;
    for chunk in bytes.utf8_chunks() {
        out.push_str(chunk.valid());
        if !chunk.invalid().is_empty() {
            out.push(char::REPLACEMENT_CHARACTER);
            replaced += 1;
        }
    }
    (out, replaced)
}
