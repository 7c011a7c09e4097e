//! Shared domain types: sampled series, chart features and day ranges.
//!
//! Everything here is immutable once constructed. Constructors enforce the
//! invariants; the loaders (`normalize_series`, `read_series_csv`) are the
//! only place where raw input is snapped or reordered.

use std::fmt;
use std::io::Read;
use std::str::FromStr;

use chrono::{Datelike, Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Sample rate of a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Year,
    Month,
    Week,
    Day,
}

impl Granularity {
    pub const ALL: [Granularity; 4] = [Self::Year, Self::Month, Self::Week, Self::Day];

    /// First day of the sampling period containing `date`.
    ///
    /// Weeks start on the ISO Monday.
    pub fn snap(self, date: NaiveDate) -> NaiveDate {
        match self {
            Self::Year => NaiveDate::from_ymd_opt(date.year(), 1, 1).expect("january 1st exists"),
            Self::Month => date.with_day(1).expect("every month has a first day"),
            Self::Week => date - Days::new(u64::from(date.weekday().num_days_from_monday())),
            Self::Day => date,
        }
    }

    pub fn is_aligned(self, date: NaiveDate) -> bool {
        self.snap(date) == date
    }

    /// The full calendar period (inclusive, in days) containing `date`.
    pub fn period(self, date: NaiveDate) -> TimeRange {
        let start = self.snap(date);
        let end = match self {
            Self::Year => NaiveDate::from_ymd_opt(start.year(), 12, 31).expect("december 31st exists"),
            Self::Month => {
                let (y, m) = if start.month() == 12 {
                    (start.year() + 1, 1)
                } else {
                    (start.year(), start.month() + 1)
                };
                NaiveDate::from_ymd_opt(y, m, 1).expect("valid month start") - Days::new(1)
            }
            Self::Week => start + Days::new(6),
            Self::Day => start,
        };
        TimeRange { start, end }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Year => "year",
            Self::Month => "month",
            Self::Week => "week",
            Self::Day => "day",
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Granularity {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "year" => Ok(Self::Year),
            "month" => Ok(Self::Month),
            "week" => Ok(Self::Week),
            "day" => Ok(Self::Day),
            _ => Err(ModelError::UnknownGranularity(s.to_string())),
        }
    }
}

/// One sample of a series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataPoint {
    pub date: NaiveDate,
    pub value: f64,
}

impl DataPoint {
    pub fn new(date: NaiveDate, value: f64) -> Self {
        Self { date, value }
    }
}

/// A validated time series with its sample granularity and domain keywords.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSeries {
    points: Vec<DataPoint>,
    granularity: Granularity,
    keywords: Vec<String>,
}

impl TimeSeries {
    /// Builds a series from points that are already sorted and aligned.
    ///
    /// Use [`normalize_series`] for raw input.
    pub fn new(points: Vec<DataPoint>, granularity: Granularity, keywords: Vec<String>) -> Result<Self, ModelError> {
        if points.len() < 2 {
            return Err(ModelError::TooFewPoints { count: points.len() });
        }
        for (i, p) in points.iter().enumerate() {
            if !p.value.is_finite() {
                return Err(ModelError::NonFiniteValue { date: p.date });
            }
            if !granularity.is_aligned(p.date) {
                return Err(ModelError::Misaligned {
                    date: p.date,
                    granularity,
                });
            }
            if i > 0 && points[i - 1].date >= p.date {
                return Err(ModelError::NotIncreasing { index: i });
            }
        }
        validate_keywords(&keywords)?;
        Ok(Self {
            points,
            granularity,
            keywords,
        })
    }

    pub fn points(&self) -> &[DataPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn granularity(&self) -> Granularity {
        self.granularity
    }

    pub fn keywords(&self) -> &[String] {
        &self.keywords
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.points.iter().map(|p| p.date)
    }

    pub fn value_at(&self, date: NaiveDate) -> Option<f64> {
        self.points
            .binary_search_by(|p| p.date.cmp(&date))
            .ok()
            .map(|i| self.points[i].value)
    }

    /// Same series with every value negated.
    pub fn negated(&self) -> Self {
        Self {
            points: self.points.iter().map(|p| DataPoint::new(p.date, -p.value)).collect(),
            granularity: self.granularity,
            keywords: self.keywords.clone(),
        }
    }

    pub fn with_keywords(self, keywords: Vec<String>) -> Result<Self, ModelError> {
        validate_keywords(&keywords)?;
        Ok(Self { keywords, ..self })
    }

    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<Self, ModelError> {
        let points = self.points.iter().map(|p| DataPoint::new(p.date, f(p.value))).collect();
        Self::new(points, self.granularity, self.keywords.clone())
    }
}

fn validate_keywords(keywords: &[String]) -> Result<(), ModelError> {
    if keywords.iter().any(|k| k.trim().is_empty()) {
        return Err(ModelError::EmptyKeyword);
    }
    Ok(())
}

/// Snaps raw samples to their granularity boundary, sorts them and builds a
/// [`TimeSeries`].
///
/// Two samples landing in the same period is an error; nothing is merged.
pub fn normalize_series(
    raw_points: &[DataPoint],
    granularity: Granularity,
    keywords: Vec<String>,
) -> Result<TimeSeries, ModelError> {
    if raw_points.is_empty() {
        return Err(ModelError::EmptyInput);
    }
    if let Some(p) = raw_points.iter().find(|p| !p.value.is_finite()) {
        return Err(ModelError::NonFiniteValue { date: p.date });
    }
    let mut points: Vec<DataPoint> = raw_points
        .iter()
        .map(|p| DataPoint::new(granularity.snap(p.date), p.value))
        .collect();
    points.sort_by_key(|p| p.date);
    if let Some(w) = points.windows(2).find(|w| w[0].date == w[1].date) {
        return Err(ModelError::DuplicateTimestamp { date: w[0].date });
    }
    TimeSeries::new(points, granularity, keywords)
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    date: String,
    value: String,
}

/// Reads `date,value` CSV rows (ISO-8601 dates) without any normalization.
pub fn read_points_csv<R: Read>(reader: R) -> Result<Vec<DataPoint>, ModelError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| ModelError::Csv {
        line: 1,
        message: e.to_string(),
    })?;
    if headers.iter().collect::<Vec<_>>() != ["date", "value"] {
        return Err(ModelError::Csv {
            line: 1,
            message: format!(
                "expected header `date,value`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut points = Vec::new();
    for (i, row) in rdr.deserialize::<CsvRow>().enumerate() {
        let line = i as u64 + 2;
        let row = row.map_err(|e| ModelError::Csv {
            line,
            message: e.to_string(),
        })?;
        let date = parse_iso_date(&row.date).ok_or_else(|| ModelError::Csv {
            line,
            message: format!("invalid date `{}`", row.date),
        })?;
        let value = row.value.parse::<f64>().map_err(|_| ModelError::Csv {
            line,
            message: format!("invalid value `{}`", row.value),
        })?;
        points.push(DataPoint::new(date, value));
    }
    Ok(points)
}

/// Reads a CSV series and normalizes it.
pub fn read_series_csv<R: Read>(
    reader: R,
    granularity: Granularity,
    keywords: Vec<String>,
) -> Result<TimeSeries, ModelError> {
    let points = read_points_csv(reader)?;
    normalize_series(&points, granularity, keywords)
}

pub(crate) fn parse_iso_date(s: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").ok()
}

/// An inclusive span of whole days.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawRange")]
pub struct TimeRange {
    start: NaiveDate,
    end: NaiveDate,
}

#[derive(Deserialize)]
struct RawRange {
    start: NaiveDate,
    end: NaiveDate,
}

impl TryFrom<RawRange> for TimeRange {
    type Error = ModelError;

    fn try_from(r: RawRange) -> Result<Self, Self::Error> {
        TimeRange::new(r.start, r.end)
    }
}

impl TimeRange {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self, ModelError> {
        if start > end {
            return Err(ModelError::InvalidRange { start, end });
        }
        Ok(Self { start, end })
    }

    pub fn day(date: NaiveDate) -> Self {
        Self { start: date, end: date }
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    pub fn end(&self) -> NaiveDate {
        self.end
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date <= self.end
    }

    pub fn contains_range(&self, other: &TimeRange) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    /// Smallest range covering both.
    pub fn span(&self, other: &TimeRange) -> TimeRange {
        TimeRange {
            start: self.start.min(other.start),
            end: self.end.max(other.end),
        }
    }

    pub fn num_days(&self) -> i64 {
        (self.end - self.start).num_days() + 1
    }
}

impl fmt::Display for TimeRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Peak,
    Valley,
    Trend,
}

impl FeatureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Peak => "peak",
            Self::Valley => "valley",
            Self::Trend => "trend",
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where a feature sits on the time axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Locus {
    Point { date: NaiveDate },
    Interval { start: NaiveDate, end: NaiveDate },
}

impl Locus {
    pub fn point(date: NaiveDate) -> Self {
        Self::Point { date }
    }

    pub fn interval(start: NaiveDate, end: NaiveDate) -> Self {
        Self::Interval { start, end }
    }

    /// The date an annotation for this locus is anchored at.
    pub fn anchor(&self) -> NaiveDate {
        match *self {
            Self::Point { date } => date,
            Self::Interval { start, .. } => start,
        }
    }
}

/// Topological persistence of a feature. `Global` marks the series' global
/// extremum, whose component never dies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Prominence {
    Finite(f64),
    Global,
}

impl Prominence {
    pub fn is_global(&self) -> bool {
        matches!(self, Self::Global)
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            Self::Finite(v) => Some(v),
            Self::Global => None,
        }
    }

    /// Total order with `Global` above every finite value.
    pub fn cmp_desc_key(&self, other: &Self) -> std::cmp::Ordering {
        use std::cmp::Ordering;
        match (self, other) {
            (Self::Global, Self::Global) => Ordering::Equal,
            (Self::Global, _) => Ordering::Greater,
            (_, Self::Global) => Ordering::Less,
            (Self::Finite(a), Self::Finite(b)) => a.total_cmp(b),
        }
    }

    pub fn at_least(&self, threshold: f64) -> bool {
        match *self {
            Self::Global => true,
            Self::Finite(v) => v >= threshold,
        }
    }
}

/// A chart feature to be annotated.
///
/// Peaks and valleys sit at a point; trends span an interval and only ever
/// come from manual marking, so they never carry `Global` prominence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FeatureWire", into = "FeatureWire")]
pub struct Feature {
    kind: FeatureKind,
    locus: Locus,
    prominence: Prominence,
    rank: u32,
}

impl Feature {
    pub fn new(kind: FeatureKind, locus: Locus, prominence: Prominence, rank: u32) -> Result<Self, ModelError> {
        match (kind, locus) {
            (FeatureKind::Trend, Locus::Point { .. }) => {
                return Err(ModelError::InvalidFeature(
                    "trend features need an interval locus".into(),
                ))
            }
            (FeatureKind::Peak | FeatureKind::Valley, Locus::Interval { .. }) => {
                return Err(ModelError::InvalidFeature(format!(
                    "{kind} features need a point locus"
                )))
            }
            (_, Locus::Interval { start, end }) if start > end => return Err(ModelError::InvalidRange { start, end }),
            _ => {}
        }
        match prominence {
            Prominence::Global if kind == FeatureKind::Trend => {
                return Err(ModelError::InvalidFeature("trend features cannot be global".into()))
            }
            Prominence::Finite(v) if !(v.is_finite() && v >= 0.0) => {
                return Err(ModelError::InvalidFeature(format!(
                    "prominence must be finite and non-negative, got {v}"
                )))
            }
            _ => {}
        }
        if rank == 0 {
            return Err(ModelError::InvalidFeature("rank must be positive".into()));
        }
        Ok(Self {
            kind,
            locus,
            prominence,
            rank,
        })
    }

    pub fn point(kind: FeatureKind, date: NaiveDate, prominence: Prominence, rank: u32) -> Result<Self, ModelError> {
        Self::new(kind, Locus::point(date), prominence, rank)
    }

    pub fn trend(start: NaiveDate, end: NaiveDate, prominence: f64, rank: u32) -> Result<Self, ModelError> {
        Self::new(
            FeatureKind::Trend,
            Locus::interval(start, end),
            Prominence::Finite(prominence),
            rank,
        )
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn locus(&self) -> Locus {
        self.locus
    }

    pub fn prominence(&self) -> Prominence {
        self.prominence
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }
}

/// JSON shape of a [`Feature`]: global persistence is `null` plus a flag.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureWire {
    pub kind: FeatureKind,
    pub locus: Locus,
    pub persistence: Option<f64>,
    #[serde(default)]
    pub global: bool,
    pub rank: u32,
}

impl From<Feature> for FeatureWire {
    fn from(f: Feature) -> Self {
        Self {
            kind: f.kind,
            locus: f.locus,
            persistence: f.prominence.finite(),
            global: f.prominence.is_global(),
            rank: f.rank,
        }
    }
}

impl TryFrom<FeatureWire> for Feature {
    type Error = ModelError;

    fn try_from(w: FeatureWire) -> Result<Self, Self::Error> {
        let prominence = match (w.persistence, w.global) {
            (None, true) => Prominence::Global,
            (Some(v), false) => Prominence::Finite(v),
            (Some(_), true) => {
                return Err(ModelError::InvalidFeature(
                    "global features must have null persistence".into(),
                ))
            }
            (None, false) => {
                return Err(ModelError::InvalidFeature(
                    "persistence is null but global is false".into(),
                ))
            }
        };
        Feature::new(w.kind, w.locus, prominence, w.rank)
    }
}
