//! Blocking client for a monthly news-archive metadata endpoint.
//!
//! One `GET {base}/{year}/{month}.json?api-key=KEY` returns every article
//! published in that month. Responses are converted to
//! [`RawArticle`]s; curation (type filter, dedup) happens in
//! [`annotator_core::store::ingest`].

use std::thread;
use std::time::Duration;

use annotator_core::store::RawArticle;
use chrono::Datelike;
use log::{debug, warn};
use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde::Deserialize;
use thiserror::Error;

pub const DEFAULT_BASE_URL: &str = "https://api.nytimes.com/svc/archive/v1";
pub const KEY_ENV: &str = "ALMANAC_ARCHIVE_KEY";
/// The archive starts in September 1851.
pub const FIRST_MONTH: (i32, u32) = (1851, 9);

#[derive(Debug, Error)]
pub enum ArchiveError {
    #[error("{year}-{month:02} is outside the archive's range")]
    InvalidMonth { year: i32, month: u32 },
    #[error("authentication failed: {0}")]
    AuthError(String),
    #[error("rate limited after {attempts} attempts")]
    RateLimited { attempts: u32 },
    #[error("network error: {0}")]
    NetworkError(String),
    #[error("unexpected response body: {0}")]
    Decode(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    /// Retries after the first attempt for rate-limit and 5xx responses.
    pub max_retries: u32,
    pub initial_backoff: Duration,
    pub max_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 5,
            initial_backoff: Duration::from_secs(12),
            max_backoff: Duration::from_secs(120),
        }
    }
}

impl RetryPolicy {
    fn delay(&self, attempt: u32, retry_after: Option<Duration>) -> Duration {
        let exp = self.initial_backoff.saturating_mul(2u32.saturating_pow(attempt));
        retry_after.unwrap_or(exp).min(self.max_backoff)
    }
}

pub struct ArchiveClient {
    http: Client,
    base_url: String,
    api_key: Option<String>,
    retry: RetryPolicy,
}

impl ArchiveClient {
    pub fn new(api_key: Option<String>) -> Result<Self, ArchiveError> {
        let http = Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| ArchiveError::NetworkError(e.to_string()))?;
        Ok(Self {
            http,
            base_url: DEFAULT_BASE_URL.to_string(),
            api_key: api_key.filter(|k| !k.trim().is_empty()),
            retry: RetryPolicy::default(),
        })
    }

    /// Reads the key from `var` (usually [`KEY_ENV`]).
    pub fn from_env(var: &str) -> Result<Self, ArchiveError> {
        Self::new(std::env::var(var).ok())
    }

    pub fn with_base_url(mut self, base_url: impl Into<String>) -> Self {
        self.base_url = base_url.into().trim_end_matches('/').to_string();
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn has_key(&self) -> bool {
        self.api_key.is_some()
    }

    /// Fetches the metadata of every article published in `year`-`month`.
    ///
    /// The month is validated and the key checked before any request.
    pub fn fetch_month(&self, year: i32, month: u32) -> Result<Vec<RawArticle>, ArchiveError> {
        validate_month(year, month)?;
        let key = self
            .api_key
            .as_deref()
            .ok_or_else(|| ArchiveError::AuthError(format!("no API key (set {KEY_ENV})")))?;
        let url = format!("{}/{}/{}.json", self.base_url, year, month);

        let mut attempt = 0;
        loop {
            debug!("GET {url} (attempt {})", attempt + 1);
            let resp = self
                .http
                .get(&url)
                .query(&[("api-key", key)])
                .send()
                .map_err(|e| ArchiveError::NetworkError(e.without_url().to_string()))?;
            let status = resp.status();
            if status.is_success() {
                let body = resp
                    .text()
                    .map_err(|e| ArchiveError::NetworkError(e.without_url().to_string()))?;
                return parse_archive_response(&body);
            }
            if status == StatusCode::UNAUTHORIZED || status == StatusCode::FORBIDDEN {
                return Err(ArchiveError::AuthError(format!("server answered {status}")));
            }
            let retryable = status == StatusCode::TOO_MANY_REQUESTS || status.is_server_error();
            if !retryable {
                return Err(ArchiveError::NetworkError(format!("server answered {status}")));
            }
            if attempt >= self.retry.max_retries {
                return Err(if status == StatusCode::TOO_MANY_REQUESTS {
                    ArchiveError::RateLimited { attempts: attempt + 1 }
                } else {
                    ArchiveError::NetworkError(format!("server answered {status}"))
                });
            }
            let retry_after = resp
                .headers()
                .get(reqwest::header::RETRY_AFTER)
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.trim().parse::<u64>().ok())
                .map(Duration::from_secs);
            let delay = self.retry.delay(attempt, retry_after);
            warn!("{url}: {status}, retrying in {delay:?}");
            thread::sleep(delay);
            attempt += 1;
        }
    }
}

/// Fetches one month with the given key.
pub fn fetch_archive_month(year: i32, month: u32, api_key: Option<&str>) -> Result<Vec<RawArticle>, ArchiveError> {
    ArchiveClient::new(api_key.map(str::to_string))?.fetch_month(year, month)
}

pub fn validate_month(year: i32, month: u32) -> Result<(), ArchiveError> {
    let today = chrono::Utc::now().date_naive();
    let valid =
        (1..=12).contains(&month) && (year, month) >= FIRST_MONTH && (year, month) <= (today.year(), today.month());
    if valid {
        Ok(())
    } else {
        Err(ArchiveError::InvalidMonth { year, month })
    }
}

/// Months from `start` to `end` inclusive, as `(year, month)`.
pub fn months_between(start: (i32, u32), end: (i32, u32)) -> Vec<(i32, u32)> {
    let mut out = Vec::new();
    let (mut y, mut m) = start;
    while (y, m) <= end {
        out.push((y, m));
        if m == 12 {
            y += 1;
            m = 1;
        } else {
            m += 1;
        }
    }
    out
}

#[derive(Deserialize)]
struct ArchiveBody {
    response: ArchiveResponse,
}

#[derive(Deserialize)]
struct ArchiveResponse {
    #[serde(default)]
    docs: Vec<ArchiveDoc>,
}

#[derive(Deserialize, Default)]
#[serde(default)]
struct ArchiveDoc {
    #[serde(rename = "_id")]
    id: Option<String>,
    uri: Option<String>,
    web_url: Option<String>,
    headline: Option<Headline>,
    pub_date: Option<String>,
    type_of_material: Option<String>,
    lead_paragraph: Option<String>,
    #[serde(rename = "abstract")]
    summary: Option<String>,
    snippet: Option<String>,
}

#[derive(Deserialize, Default)]
#[serde(default)]
struct Headline {
    main: Option<String>,
}

fn non_empty(s: Option<String>) -> Option<String> {
    s.filter(|s| !s.trim().is_empty())
}

/// Converts an archive response body into raw article metadata.
pub fn parse_archive_response(body: &str) -> Result<Vec<RawArticle>, ArchiveError> {
    let body: ArchiveBody = serde_json::from_str(body).map_err(|e| ArchiveError::Decode(e.to_string()))?;
    Ok(body
        .response
        .docs
        .into_iter()
        .map(|d| RawArticle {
            id: non_empty(d.id).or(non_empty(d.uri)),
            headline: d.headline.and_then(|h| non_empty(h.main)),
            publish_date: d.pub_date,
            article_type: d.type_of_material,
            lede: non_empty(d.lead_paragraph)
                .or(non_empty(d.summary))
                .or(non_empty(d.snippet)),
            url: d.web_url,
        })
        .collect())
}
