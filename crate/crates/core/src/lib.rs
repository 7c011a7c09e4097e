//! Annotation recommendations for time-series charts.
//!
//! [`detector`] ranks the peaks or valleys of a series by topological
//! persistence. [`recommender`] ranks news headlines for one feature
//! against the others with a per-time-range TF-IDF, drawing articles from a
//! [`store::HeadlineStore`]. [`chart`] turns the chosen headlines into a
//! declarative chart spec.

pub mod chart;
pub mod detector;
pub mod error;
pub mod model;
pub mod recommender;
pub mod store;

pub use detector::{detect_features, persistence_pairs, DetectOptions, ExtremumKind, PersistencePair};
pub use error::{ChartError, DetectError, ModelError, RecommendError, StoreError};
pub use model::{
    normalize_series, read_series_csv, DataPoint, Feature, FeatureKind, Granularity, Locus, Prominence, TimeRange,
    TimeSeries,
};
pub use recommender::{get_annotations, ScoredHeadline};
pub use store::{ArticleRecord, HeadlineStore, IngestConfig, RawArticle};
