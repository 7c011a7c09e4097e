//! The `annotator` command line.
//!
//! ```text
//! annotator ingest   --from-ndjson raw.ndjson --out store.ndjson
//! annotator ingest   --from-archive 2018-01..2018-12 --out store.ndjson
//! annotator features --series s.csv --granularity month --kind peak --out features.json
//! annotator annotate --series s.csv --granularity month --keywords "wildfire,fire" \
//!                    --features features.json --target 1 --store store.ndjson --out ann/1.json
//! annotator render   --series s.csv --granularity month --annotations-dir ann --out chart.json
//! ```
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error or missing input.

use std::ffi::OsString;
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::thread;
use std::time::Duration;

use annotator_archive::{months_between, ArchiveClient, KEY_ENV};
use annotator_core::chart::{render_chart_spec, AnnotationSet, Selection};
use annotator_core::detector::{detect_features, DetectOptions, ExtremumKind};
use annotator_core::error::StoreError;
use annotator_core::model::{read_series_csv, Feature, Granularity, TimeSeries};
use annotator_core::recommender::{get_annotations, split_target};
use annotator_core::store::{ingest, load_store, save_store, IngestConfig, IngestStats, RawArticle};
use clap::{ArgGroup, Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failure(_) => 1,
        }
    }
}

fn failure(e: impl std::fmt::Display) -> CliError {
    CliError::Failure(e.to_string())
}

#[derive(Parser, Debug)]
#[command(
    name = "annotator",
    version,
    about = "Annotation recommendations for time-series charts"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a headline store from the news archive or a raw NDJSON dump.
    Ingest(IngestArgs),
    /// Detect prominent peaks or valleys of a series.
    Features(FeaturesArgs),
    /// Rank headlines for one detected feature against the others.
    Annotate(AnnotateArgs),
    /// Emit a chart spec labeled with the top headline of each annotation file.
    Render(RenderArgs),
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("source").required(true).args(["from_archive", "from_ndjson"])))]
struct IngestArgs {
    /// Month range: YYYY, YYYY-MM, or START..END of either form.
    #[arg(long, value_name = "RANGE")]
    from_archive: Option<String>,
    /// Environment variable holding the archive API key.
    #[arg(long, default_value = KEY_ENV, requires = "from_archive")]
    key_env: String,
    #[arg(long, hide = true)]
    archive_base_url: Option<String>,
    /// Pause between archive requests, in milliseconds.
    #[arg(long, default_value_t = 12_000)]
    request_interval_ms: u64,
    /// Newline-delimited JSON file of raw article records.
    #[arg(long, value_name = "PATH")]
    from_ndjson: Option<PathBuf>,
    /// Accepted article type. Repeatable; defaults to "news".
    #[arg(long = "allow-type", value_name = "TYPE")]
    allow_types: Vec<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SeriesArgs {
    /// CSV with a `date,value` header.
    #[arg(long)]
    series: PathBuf,
    /// year, month, week or day.
    #[arg(long, default_value = "day")]
    granularity: Granularity,
}

#[derive(Args, Debug)]
struct FeaturesArgs {
    #[command(flatten)]
    series: SeriesArgs,
    #[arg(long, value_parser = parse_kind)]
    kind: ExtremumKind,
    #[arg(long)]
    max_count: Option<usize>,
    #[arg(long)]
    min_prominence: Option<f64>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AnnotateArgs {
    #[command(flatten)]
    series: SeriesArgs,
    /// Comma-separated domain keywords.
    #[arg(long)]
    keywords: String,
    /// Output of `annotator features`.
    #[arg(long)]
    features: PathBuf,
    /// Rank of the feature to annotate; every other feature is context.
    #[arg(long)]
    target: u32,
    #[arg(long)]
    store: PathBuf,
    /// Keep only the best N headlines.
    #[arg(long)]
    top: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RenderArgs {
    #[command(flatten)]
    series: SeriesArgs,
    /// Directory of `annotator annotate` outputs, read in file-name order.
    #[arg(long)]
    annotations_dir: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_kind(s: &str) -> Result<ExtremumKind, String> {
    match s.to_ascii_lowercase().as_str() {
        "peak" => Ok(ExtremumKind::Peak),
        "valley" => Ok(ExtremumKind::Valley),
        other => Err(format!("expected peak or valley, got {other:?}")),
    }
}

/// On-disk shape of `annotator features` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturesFile {
    pub features: Vec<Feature>,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Ingest(a) => cmd_ingest(a),
        Command::Features(a) => cmd_features(a),
        Command::Annotate(a) => cmd_annotate(a),
        Command::Render(a) => cmd_render(a),
    }
}

fn cmd_ingest(args: IngestArgs) -> Result<(), CliError> {
    let config = if args.allow_types.is_empty() {
        IngestConfig::default()
    } else {
        IngestConfig::with_types(args.allow_types.iter().map(String::as_str))
    };
    let (raw, unparsed) = match (&args.from_archive, &args.from_ndjson) {
        (Some(range), None) => (fetch_archive(range, &args)?, 0),
        (None, Some(path)) => read_raw_ndjson(path)?,
        _ => {
            return Err(CliError::Usage(
                "give exactly one of --from-archive or --from-ndjson".into(),
            ))
        }
    };
    let (store, mut stats) = ingest(raw, &config);
    stats.malformed += unparsed;
    save_store(&store, &args.out).map_err(failure)?;
    print_stats(&stats, &args.out);
    Ok(())
}

fn print_stats(stats: &IngestStats, out: &Path) {
    println!(
        "wrote {} records to {} (skipped: {} malformed, {} filtered by type, {} duplicates)",
        stats.accepted,
        out.display(),
        stats.malformed,
        stats.filtered,
        stats.duplicates
    );
}

/// Reads raw records; lines that are not JSON objects count as malformed.
fn read_raw_ndjson(path: &Path) -> Result<(Vec<RawArticle>, usize), CliError> {
    let file = fs::File::open(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let mut records = Vec::new();
    let mut unparsed = 0;
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| failure(format!("{}: {e}", path.display())))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<RawArticle>(&line) {
            Ok(r) => records.push(r),
            Err(_) => unparsed += 1,
        }
    }
    Ok((records, unparsed))
}

fn parse_month(s: &str, is_end: bool) -> Option<Month> {
    let s = s.trim();
    match s.split_once('-') {
        Some((y, m)) => Some((y.parse().ok()?, m.parse().ok().filter(|m| (1..=12).contains(m))?)),
        None => Some((s.parse().ok()?, if is_end { 12 } else { 1 })),
    }
}

/// A `(year, month)` pair.
pub type Month = (i32, u32);

/// Parses `YYYY`, `YYYY-MM` or `START..END` into inclusive month bounds.
pub fn parse_month_range(s: &str) -> Result<(Month, Month), String> {
    let (a, b) = s.split_once("..").unwrap_or((s, s));
    let bad = || format!("invalid month range {s:?}");
    let start = parse_month(a, false).ok_or_else(bad)?;
    let end = parse_month(b, true).ok_or_else(bad)?;
    if start > end {
        return Err(format!("range {s:?} ends before it starts"));
    }
    Ok((start, end))
}

fn fetch_archive(range: &str, args: &IngestArgs) -> Result<Vec<RawArticle>, CliError> {
    let (start, end) = parse_month_range(range).map_err(CliError::Usage)?;
    let key = std::env::var(&args.key_env)
        .ok()
        .filter(|k| !k.trim().is_empty())
        .ok_or_else(|| CliError::Usage(format!("environment variable {} is not set", args.key_env)))?;
    let mut client = ArchiveClient::new(Some(key)).map_err(failure)?;
    if let Some(url) = &args.archive_base_url {
        client = client.with_base_url(url);
    }
    let months = months_between(start, end);
    let mut raw = Vec::new();
    for (i, &(year, month)) in months.iter().enumerate() {
        if i > 0 {
            thread::sleep(Duration::from_millis(args.request_interval_ms));
        }
        let docs = client
            .fetch_month(year, month)
            .map_err(|e| failure(format!("{year}-{month:02}: {e}")))?;
        log::info!("{year}-{month:02}: {} documents", docs.len());
        raw.extend(docs);
    }
    Ok(raw)
}

fn read_series(args: &SeriesArgs, keywords: Vec<String>) -> Result<TimeSeries, CliError> {
    let file = fs::File::open(&args.series).map_err(|e| CliError::Usage(format!("{}: {e}", args.series.display())))?;
    read_series_csv(file, args.granularity, keywords).map_err(|e| failure(format!("{}: {e}", args.series.display())))
}

fn write_json(value: &impl Serialize, out: Option<&Path>) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(failure)?;
    text.push('\n');
    match out {
        Some(path) => fs::write(path, text).map_err(|e| failure(format!("{}: {e}", path.display()))),
        None => io::stdout().write_all(text.as_bytes()).map_err(failure),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| failure(format!("{}: {e}", path.display())))
}

fn cmd_features(args: FeaturesArgs) -> Result<(), CliError> {
    let series = read_series(&args.series, Vec::new())?;
    let options = DetectOptions {
        max_count: args.max_count,
        min_prominence: args.min_prominence,
    };
    let features = detect_features(&series, args.kind, options).map_err(failure)?;
    write_json(&FeaturesFile { features }, args.out.as_deref())
}

fn split_keywords(s: &str) -> Vec<String> {
    s.split(',')
        .map(str::trim)
        .filter(|k| !k.is_empty())
        .map(str::to_string)
        .collect()
}

fn cmd_annotate(args: AnnotateArgs) -> Result<(), CliError> {
    let series = read_series(&args.series, split_keywords(&args.keywords))?;
    let file: FeaturesFile = read_json(&args.features)?;
    let (target, context) = split_target(&file.features, args.target).ok_or_else(|| {
        CliError::Usage(format!(
            "no feature with rank {} in {}",
            args.target,
            args.features.display()
        ))
    })?;
    let store = load_store(&args.store).map_err(|e| match e {
        StoreError::Io { .. } => CliError::Usage(e.to_string()),
        other => failure(other),
    })?;
    let mut annotations = get_annotations(&target, &context, &series, &store).map_err(failure)?;
    if let Some(n) = args.top {
        annotations.truncate(n);
    }
    if annotations.is_empty() {
        eprintln!("no matching headlines; feature {} stays unlabeled", args.target);
    }
    write_json(&AnnotationSet { target, annotations }, args.out.as_deref())
}

/// Default selections of every `*.json` annotation file in `dir`, in
/// file-name order. Unlabeled features contribute nothing.
pub fn collect_selections(dir: &Path) -> Result<Vec<Selection>, CliError> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::Usage(format!("{}: {e}", dir.display())))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(failure)?.path();
        if path.extension().is_some_and(|e| e == "json") {
            paths.push(path);
        }
    }
    paths.sort();
    let mut selections = Vec::new();
    for path in paths {
        let set: AnnotationSet = read_json(&path)?;
        selections.extend(set.default_selection());
    }
    Ok(selections)
}

fn cmd_render(args: RenderArgs) -> Result<(), CliError> {
    let series = read_series(&args.series, Vec::new())?;
    let selections = match &args.annotations_dir {
        Some(dir) => collect_selections(dir)?,
        None => Vec::new(),
    };
    let spec = render_chart_spec(&series, &selections).map_err(failure)?;
    write_json(&spec, args.out.as_deref())
}
