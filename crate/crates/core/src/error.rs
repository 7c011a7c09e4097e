use std::path::PathBuf;

use chrono::NaiveDate;
use thiserror::Error;

use crate::model::Granularity;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("no data points")]
    EmptyInput,
    #[error("a series needs at least 2 points, got {count}")]
    TooFewPoints { count: usize },
    #[error("two points fall into the period starting {date}")]
    DuplicateTimestamp { date: NaiveDate },
    #[error("timestamps must strictly increase (point {index})")]
    NotIncreasing { index: usize },
    #[error("{date} is not aligned to {granularity} granularity")]
    Misaligned { date: NaiveDate, granularity: Granularity },
    #[error("non-finite value at {date}")]
    NonFiniteValue { date: NaiveDate },
    #[error("keywords must be non-empty strings")]
    EmptyKeyword,
    #[error("range start {start} is after end {end}")]
    InvalidRange { start: NaiveDate, end: NaiveDate },
    #[error("invalid feature: {0}")]
    InvalidFeature(String),
    #[error("unknown granularity `{0}` (expected year, month, week or day)")]
    UnknownGranularity(String),
    #[error("csv line {line}: {message}")]
    Csv { line: u64, message: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DetectError {
    #[error("persistence needs at least 2 values, got {0}")]
    TooShort(usize),
    #[error("value at index {0} is not finite")]
    NonFiniteValue(usize),
    #[error("features can only be detected as peaks or valleys")]
    UnsupportedKind,
    #[error("min_prominence must be finite and non-negative")]
    InvalidThreshold,
    #[error("max_count must be positive")]
    InvalidMaxCount,
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("at least one keyword is required")]
    EmptyKeywords,
    #[error("duplicate article id `{0}`")]
    DuplicateId(String),
    #[error("article with empty id")]
    EmptyId,
    #[error("article `{0}` has an empty headline")]
    EmptyHeadline(String),
    #[error("unsupported store schema version {found} (expected {expected})")]
    SchemaVersionMismatch { found: u32, expected: u32 },
    #[error("store file {path}: {message}")]
    Corrupt { path: PathBuf, message: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RecommendError {
    #[error("the series has no keywords to filter headlines with")]
    EmptyKeywords,
    #[error("at least one context feature is required")]
    EmptyContext,
    #[error("the target feature also appears in the context set")]
    TargetInContext,
    #[error("document has no terms")]
    EmptyDocument,
    #[error("a corpus needs at least 2 documents, got {0}")]
    CorpusTooSmall(usize),
    #[error("term `{0}` appears in no document")]
    TermAbsentEverywhere(String),
    #[error("article `{0}` is not part of the target document")]
    ArticleNotInDocument(String),
    #[error("target document index {index} out of range for {len} documents")]
    InvalidTarget { index: usize, len: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChartError {
    #[error("annotation for {date} does not match any series timestamp")]
    AbsentTimestamp { date: NaiveDate },
}
