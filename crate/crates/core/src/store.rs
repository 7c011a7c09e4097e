//! The annotation database: curated news-article metadata indexed by day.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::StoreError;
use crate::model::TimeRange;

pub const SCHEMA_VERSION: u32 = 1;

/// Metadata of one news article.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArticleRecord {
    pub id: String,
    pub headline: String,
    pub publish_date: NaiveDate,
    pub article_type: String,
    #[serde(default)]
    pub lede: String,
    #[serde(default)]
    pub url: String,
}

/// Article metadata as it arrives from a source, before validation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RawArticle {
    pub id: Option<String>,
    pub headline: Option<String>,
    /// `YYYY-MM-DD`, optionally followed by a time part.
    pub publish_date: Option<String>,
    pub article_type: Option<String>,
    pub lede: Option<String>,
    pub url: Option<String>,
}

impl From<&ArticleRecord> for RawArticle {
    fn from(r: &ArticleRecord) -> Self {
        Self {
            id: Some(r.id.clone()),
            headline: Some(r.headline.clone()),
            publish_date: Some(r.publish_date.to_string()),
            article_type: Some(r.article_type.clone()),
            lede: Some(r.lede.clone()),
            url: Some(r.url.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestConfig {
    /// Accepted `article_type` values, compared case-insensitively.
    pub allowed_types: BTreeSet<String>,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            allowed_types: BTreeSet::from(["news".to_string()]),
        }
    }
}

impl IngestConfig {
    pub fn with_types<I, S>(types: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            allowed_types: types.into_iter().map(|t| t.as_ref().trim().to_lowercase()).collect(),
        }
    }

    fn allows(&self, article_type: &str) -> bool {
        self.allowed_types.contains(&article_type.trim().to_lowercase())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct IngestStats {
    pub accepted: usize,
    pub malformed: usize,
    pub filtered: usize,
    pub duplicates: usize,
}

/// Immutable, day-indexed collection of articles.
///
/// Records are kept sorted by `(publish_date, id)`.
#[derive(Debug, Clone, Default)]
pub struct HeadlineStore {
    records: Vec<ArticleRecord>,
    date_index: BTreeMap<NaiveDate, Vec<usize>>,
    // Lowercased (headline, lede) per record for keyword matching.
    folded: Vec<(String, String)>,
}

impl PartialEq for HeadlineStore {
    fn eq(&self, other: &Self) -> bool {
        self.records == other.records && self.date_index == other.date_index
    }
}

impl HeadlineStore {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a store from validated records.
    pub fn from_records(mut records: Vec<ArticleRecord>) -> Result<Self, StoreError> {
        let mut ids = HashSet::with_capacity(records.len());
        for r in &records {
            if r.id.is_empty() {
                return Err(StoreError::EmptyId);
            }
            if r.headline.trim().is_empty() {
                return Err(StoreError::EmptyHeadline(r.id.clone()));
            }
            if !ids.insert(r.id.as_str()) {
                return Err(StoreError::DuplicateId(r.id.clone()));
            }
        }
        records.sort_by(|a, b| a.publish_date.cmp(&b.publish_date).then_with(|| a.id.cmp(&b.id)));
        let mut date_index: BTreeMap<NaiveDate, Vec<usize>> = BTreeMap::new();
        for (i, r) in records.iter().enumerate() {
            date_index.entry(r.publish_date).or_default().push(i);
        }
        let folded = records
            .iter()
            .map(|r| (r.headline.to_lowercase(), r.lede.to_lowercase()))
            .collect();
        Ok(Self {
            records,
            date_index,
            folded,
        })
    }

    pub fn records(&self) -> &[ArticleRecord] {
        &self.records
    }

    pub fn date_index(&self) -> &BTreeMap<NaiveDate, Vec<usize>> {
        &self.date_index
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Articles published within `range` whose headline or lede contains at
    /// least one of `keywords` (case-insensitive, whole phrase).
    ///
    /// Results are ordered by publish date, then id.
    pub fn query(&self, range: &TimeRange, keywords: &[String]) -> Result<Vec<&ArticleRecord>, StoreError> {
        let needles = fold_keywords(keywords)?;
        let hits = self
            .date_index
            .range(range.start()..=range.end())
            .flat_map(|(_, idx)| idx.iter().copied())
            .filter(|&i| {
                let (headline, lede) = &self.folded[i];
                needles
                    .iter()
                    .any(|k| headline.contains(k.as_str()) || lede.contains(k.as_str()))
            })
            .map(|i| &self.records[i])
            .collect();
        Ok(hits)
    }

    pub fn to_raw(&self) -> Vec<RawArticle> {
        self.records.iter().map(RawArticle::from).collect()
    }
}

fn fold_keywords(keywords: &[String]) -> Result<Vec<String>, StoreError> {
    if keywords.is_empty() || keywords.iter().any(|k| k.trim().is_empty()) {
        return Err(StoreError::EmptyKeywords);
    }
    Ok(keywords.iter().map(|k| k.to_lowercase()).collect())
}

/// Validates, filters and deduplicates raw article metadata.
///
/// Records missing a headline or a parseable date are skipped and counted.
/// Duplicates are detected by id, or by `(headline, publish_date)` for
/// records without one; the first occurrence wins.
pub fn ingest<I>(raw_records: I, config: &IngestConfig) -> (HeadlineStore, IngestStats)
where
    I: IntoIterator<Item = RawArticle>,
{
    let mut stats = IngestStats::default();
    let mut seen_ids = HashSet::new();
    let mut seen_content = HashSet::new();
    let mut records = Vec::new();

    for raw in raw_records {
        let headline = match raw.headline.as_deref().map(str::trim) {
            Some(h) if !h.is_empty() => h.to_string(),
            _ => {
                stats.malformed += 1;
                continue;
            }
        };
        let Some(publish_date) = raw.publish_date.as_deref().and_then(parse_publish_date) else {
            stats.malformed += 1;
            continue;
        };
        let article_type = raw.article_type.as_deref().unwrap_or("").trim().to_lowercase();
        if !config.allows(&article_type) {
            stats.filtered += 1;
            continue;
        }
        let id = match raw.id.as_deref().map(str::trim) {
            Some(id) if !id.is_empty() => {
                if !seen_ids.insert(id.to_string()) {
                    stats.duplicates += 1;
                    continue;
                }
                id.to_string()
            }
            _ => {
                if !seen_content.insert((headline.clone(), publish_date)) {
                    stats.duplicates += 1;
                    continue;
                }
                let id = derived_id(&headline, publish_date);
                if !seen_ids.insert(id.clone()) {
                    stats.duplicates += 1;
                    continue;
                }
                id
            }
        };
        records.push(ArticleRecord {
            id,
            headline,
            publish_date,
            article_type,
            lede: raw.lede.unwrap_or_default().trim().to_string(),
            url: raw.url.unwrap_or_default().trim().to_string(),
        });
    }

    stats.accepted = records.len();
    let store = HeadlineStore::from_records(records).expect("ingest output is deduplicated and validated");
    (store, stats)
}

/// Stable id for records that arrive without one.
fn derived_id(headline: &str, date: NaiveDate) -> String {
    let mut h = Sha256::new();
    h.update(date.to_string().as_bytes());
    h.update([0x1f]);
    h.update(headline.as_bytes());
    let digest = h.finalize();
    let hex: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
    format!("derived:{hex}")
}

pub(crate) fn parse_publish_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    let head = s.get(..10)?;
    match s.as_bytes().get(10) {
        None | Some(b'T') | Some(b' ') => NaiveDate::parse_from_str(head, "%Y-%m-%d").ok(),
        _ => None,
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct StoreHeader {
    schema_version: u32,
    record_count: usize,
}

/// Writes the store as a header line followed by one JSON record per line.
///
/// The file is written next to `path` and renamed into place.
pub fn save_store(store: &HeadlineStore, path: &Path) -> Result<(), StoreError> {
    let io_err = |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    };
    let tmp = tmp_path(path);
    let write = || -> std::io::Result<()> {
        let mut out = BufWriter::new(File::create(&tmp)?);
        let header = StoreHeader {
            schema_version: SCHEMA_VERSION,
            record_count: store.len(),
        };
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n")?;
        for r in store.records() {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        out.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        std::fs::rename(&tmp, path)
    };
    write().map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        io_err(e)
    })
}

fn tmp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(format!(".tmp-{}", std::process::id()));
    path.with_file_name(name)
}

pub fn load_store(path: &Path) -> Result<HeadlineStore, StoreError> {
    let io_err = |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    };
    let corrupt = |message: String| StoreError::Corrupt {
        path: path.to_path_buf(),
        message,
    };

    let file = File::open(path).map_err(io_err)?;
    let mut lines = BufReader::new(file).lines();
    let header_line = lines
        .next()
        .ok_or_else(|| corrupt("missing header line".into()))?
        .map_err(io_err)?;
    let header: serde_json::Value = serde_json::from_str(&header_line).map_err(|e| corrupt(format!("header: {e}")))?;
    let version = header
        .get("schema_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| corrupt("header has no schema_version".into()))?;
    if version != u64::from(SCHEMA_VERSION) {
        return Err(StoreError::SchemaVersionMismatch {
            found: u32::try_from(version).unwrap_or(u32::MAX),
            expected: SCHEMA_VERSION,
        });
    }
    let header: StoreHeader = serde_json::from_value(header).map_err(|e| corrupt(format!("header: {e}")))?;

    let mut records = Vec::with_capacity(header.record_count);
    for (i, line) in lines.enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ArticleRecord = serde_json::from_str(&line).map_err(|e| corrupt(format!("line {}: {e}", i + 2)))?;
        records.push(record);
    }
    if records.len() != header.record_count {
        return Err(corrupt(format!(
            "header declares {} records, found {}",
            header.record_count,
            records.len()
        )));
    }
    HeadlineStore::from_records(records)
}
