use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use tweetshot::archive::{ArchiveClient, ArchivedSnapshot, FixtureTransport};
use tweetshot::eval::{evaluate_standard, load_manifest, render_table};
use tweetshot::extract::{extract_claim, DateMethod, ExtractedClaim, ReferenceTime};
use tweetshot::ocr::{load_ocr_text, OcrEngine, OcrText};
use tweetshot::verify::{verify, Verdict};

/// Extract, search and verify tweet screenshot claims against the Wayback Machine.
#[derive(Parser)]
#[command(name = "tweetshot", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand)]
enum Command {
    /// Extract handle, timestamp and body from OCR text or an image.
    Extract {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Look up archived captures for a claim (claim JSON, OCR text or image).
    Search { input: PathBuf },
    /// Extract, search and check archived pages for the claimed text.
    Verify { input: PathBuf },
    /// Score timestamp (m1 and m2) and handle extraction on a labelled manifest.
    Eval { manifest: PathBuf },
}

#[derive(Args)]
struct Opts {
    /// Date filtering method for timestamp extraction.
    #[arg(long, global = true, value_enum, default_value_t = Method::M2)]
    method: Method,
    /// Fills date fields the screenshot omits, "YYYY-MM-DD HH:MM:SS". Defaults to
    /// today at midnight; required for eval.
    #[arg(long, global = true)]
    reference: Option<ReferenceTime>,
    /// CDX search endpoint.
    #[arg(long, global = true)]
    cdx_endpoint: Option<String>,
    /// Days on each side of the claimed date to search.
    #[arg(long, global = true, default_value_t = 1)]
    window_days: u32,
    /// Fetch replay pages and look for the claimed text.
    #[arg(long, global = true)]
    fetch_pages: bool,
    /// Serve HTTP from a recorded fixture directory instead of the network.
    #[arg(long, global = true)]
    fixtures: Option<PathBuf>,
    /// Worker threads for OCR, page fetches and evaluation.
    #[arg(long, global = true, default_value_t = 4)]
    jobs: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    M1,
    M2,
}

impl From<Method> for DateMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::M1 => DateMethod::M1,
            Method::M2 => DateMethod::M2,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

/// A hard failure, printed as `{"error": {...}}`.
#[derive(Debug, Serialize)]
struct Failure {
    stage: &'static str,
    kind: String,
    message: String,
}

#[derive(Serialize)]
struct ErrorOutput<'a> {
    error: &'a Failure,
}

impl Failure {
    fn new(stage: &'static str, kind: impl Into<String>, message: impl ToString) -> Self {
        Failure {
            stage,
            kind: kind.into(),
            message: message.to_string(),
        }
    }
}

/// Like `println!`, but a closed stdout (e.g. `| head`) is not a panic.
macro_rules! out {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

const EXIT_OK: u8 = 0;
const EXIT_FAILURE: u8 = 1;
const EXIT_PARTIAL: u8 = 2;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::from(EXIT_OK);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_FAILURE);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("tweetshot: {} failed: {}", f.stage, f.message);
            out!("{}", to_json(&ErrorOutput { error: &f }));
            ExitCode::from(EXIT_FAILURE)
        }
    }
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    let o = &cli.opts;
    match &cli.command {
        Command::Extract { inputs } => {
            let texts = read_inputs(inputs, o.jobs)?;
            let claims: Vec<ExtractedClaim> = texts
                .iter()
                .map(|t| extract_claim(t, o.method.into(), &reference(o)))
                .collect();
            let partial = claims.iter().any(|c| !c.flags.is_empty());
            match (o.format, claims.as_slice()) {
                (Format::Json, [one]) => out!("{}", to_json(one)),
                (Format::Json, many) => out!("{}", to_json(&many)),
                (Format::Text, many) => many.iter().for_each(print_claim),
            }
            Ok(if partial { EXIT_PARTIAL } else { EXIT_OK })
        }
        Command::Search { input } => {
            let claim = claim_from(input, o)?;
            let snaps = search(&claim, &client(o)?)?;
            match o.format {
                Format::Json => out!("{}", to_json(&snaps)),
                Format::Text => snaps.iter().for_each(|s| out!("{}", s.replay_url)),
            }
            Ok(EXIT_OK)
        }
        Command::Verify { input } => {
            let claim = claim_from(input, o)?;
            let client = client(o)?;
            let snaps = search(&claim, &client)?;
            let verdict = verify(&claim, &snaps, client.fetcher(), o.fetch_pages, o.jobs);
            match o.format {
                Format::Json => out!("{}", to_json(&verdict)),
                Format::Text => print_verdict(&verdict),
            }
            Ok(EXIT_OK)
        }
        Command::Eval { manifest } => {
            let reference = o.reference.ok_or_else(|| {
                Failure::new(
                    "eval",
                    "MissingReference",
                    "--reference is required for eval",
                )
            })?;
            let labels =
                load_manifest(manifest).map_err(|e| Failure::new("eval", "ManifestError", e))?;
            let reports = evaluate_standard(&labels, &reference, o.jobs)
                .map_err(|e| Failure::new("eval", "EvalError", e))?;
            match o.format {
                Format::Json => out!("{}", to_json(&reports)),
                Format::Text => out!("{}", render_table(&reports).trim_end()),
            }
            Ok(EXIT_OK)
        }
    }
}

fn reference(o: &Opts) -> ReferenceTime {
    o.reference.unwrap_or_else(ReferenceTime::today_midnight)
}

fn is_text_file(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("txt"))
}

/// `.txt` files are read as OCR output; anything else goes through the engine.
fn read_inputs(inputs: &[PathBuf], jobs: usize) -> Result<Vec<OcrText>, Failure> {
    let images: Vec<&PathBuf> = inputs.iter().filter(|p| !is_text_file(p)).collect();
    let mut ocr = if images.is_empty() {
        Vec::new()
    } else {
        OcrEngine::from_env().run_many(&images, jobs)
    }
    .into_iter();
    inputs
        .iter()
        .map(|p| {
            if is_text_file(p) {
                load_ocr_text(p).map_err(|e| Failure::new("ocr", "OcrError", e))
            } else {
                ocr.next()
                    .expect("one OCR result per image")
                    .map_err(|e| Failure::new("ocr", "OcrError", e))
            }
        })
        .collect()
}

fn claim_from(input: &Path, o: &Opts) -> Result<ExtractedClaim, Failure> {
    if input
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
    {
        let raw = std::fs::read_to_string(input)
            .map_err(|e| Failure::new("extract", "Io", format!("{}: {e}", input.display())))?;
        return serde_json::from_str(&raw).map_err(|e| {
            Failure::new(
                "extract",
                "InvalidClaim",
                format!("{}: {e}", input.display()),
            )
        });
    }
    let text = read_inputs(std::slice::from_ref(&input.to_owned()), 1)?.remove(0);
    Ok(extract_claim(&text, o.method.into(), &reference(o)))
}

fn client(o: &Opts) -> Result<ArchiveClient, Failure> {
    let client = match &o.fixtures {
        Some(dir) => ArchiveClient::offline(
            FixtureTransport::load_dir(dir)
                .map_err(|e| Failure::new("search", "FixtureError", e))?,
        ),
        None => ArchiveClient::live(),
    };
    let client = client.with_window_days(o.window_days);
    Ok(match &o.cdx_endpoint {
        Some(endpoint) => client.with_endpoint(endpoint.clone()),
        None => client,
    })
}

fn search(
    claim: &ExtractedClaim,
    client: &ArchiveClient,
) -> Result<Vec<ArchivedSnapshot>, Failure> {
    client
        .search_archives(claim)
        .map_err(|e| Failure::new("search", e.kind(), e))
}

fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("output types always serialize")
}

fn print_claim(c: &ExtractedClaim) {
    let handle = c.handle.as_ref().map_or("-".to_owned(), |h| {
        format!("@{}{}", h.name, if h.truncated { "..." } else { "" })
    });
    out!("handle:    {handle}");
    out!(
        "timestamp: {}",
        c.timestamp
            .as_ref()
            .map_or("-".to_owned(), |t| t.canonical())
    );
    out!("body:      {}", c.body.as_deref().unwrap_or("-"));
    if !c.flags.is_empty() {
        let flags: Vec<String> = c.flags.iter().map(|f| format!("{f:?}")).collect();
        out!("flags:     {}", flags.join(", "));
    }
}

fn print_verdict(v: &Verdict) {
    out!("{:?} ({} {})", v.status, v.score, v.score_model);
    if let Some(s) = &v.matched_snapshot {
        out!("matched: {}", s.replay_url);
    }
    for note in &v.notes {
        out!("- {note}");
    }
}
