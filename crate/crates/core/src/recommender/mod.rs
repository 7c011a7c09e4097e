//! Ranks candidate headlines for one chart feature against the others.
//!
//! Every feature in `{target} ∪ context` gets a day range derived from the
//! series granularity. The headlines of keyword-matching articles inside a
//! range form one document; the documents of all features form the corpus.
//! A target headline scores the sum over its terms of
//! `tf(term, target) * idf(term, corpus)`, so words that are frequent around
//! the target and absent around the other features rank highest.

mod tokenize;
mod weight;

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{RecommendError, StoreError};
use crate::model::{Feature, Granularity, Locus, TimeRange, TimeSeries};
use crate::store::{ArticleRecord, HeadlineStore};

pub use tokenize::{is_stopword, tokenize};
use weight::LogCombination;

/// Day range of the sampling period (or periods) a feature covers.
pub fn feature_time_range(feature: &Feature, granularity: Granularity) -> TimeRange {
    match feature.locus() {
        Locus::Point { date } => granularity.period(date),
        Locus::Interval { start, end } => granularity.period(start).span(&granularity.period(end)),
    }
}

/// The headlines found in one feature's time range.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDocument {
    range: TimeRange,
    articles: Vec<ArticleRecord>,
    term_counts: BTreeMap<String, u64>,
    total_terms: u64,
}

impl FeatureDocument {
    /// Counts headline terms of `articles`; ledes are not counted.
    pub fn new(range: TimeRange, articles: Vec<ArticleRecord>) -> Self {
        let mut term_counts = BTreeMap::new();
        let mut total_terms = 0;
        for article in &articles {
            for term in tokenize(&article.headline) {
                *term_counts.entry(term).or_insert(0) += 1;
                total_terms += 1;
            }
        }
        Self {
            range,
            articles,
            term_counts,
            total_terms,
        }
    }

    pub fn range(&self) -> TimeRange {
        self.range
    }

    pub fn articles(&self) -> &[ArticleRecord] {
        &self.articles
    }

    pub fn term_counts(&self) -> &BTreeMap<String, u64> {
        &self.term_counts
    }

    pub fn total_terms(&self) -> u64 {
        self.total_terms
    }

    pub fn count(&self, term: &str) -> u64 {
        self.term_counts.get(term).copied().unwrap_or(0)
    }

    pub fn contains(&self, term: &str) -> bool {
        self.term_counts.contains_key(term)
    }
}

/// One document per feature; `target_index` points at the target's.
#[derive(Debug, Clone, PartialEq)]
pub struct DocumentCorpus {
    documents: Vec<FeatureDocument>,
    target_index: usize,
}

impl DocumentCorpus {
    pub fn new(documents: Vec<FeatureDocument>, target_index: usize) -> Result<Self, RecommendError> {
        if documents.len() < 2 {
            return Err(RecommendError::CorpusTooSmall(documents.len()));
        }
        if target_index >= documents.len() {
            return Err(RecommendError::InvalidTarget {
                index: target_index,
                len: documents.len(),
            });
        }
        Ok(Self {
            documents,
            target_index,
        })
    }

    pub fn documents(&self) -> &[FeatureDocument] {
        &self.documents
    }

    pub fn target(&self) -> &FeatureDocument {
        &self.documents[self.target_index]
    }

    pub fn target_index(&self) -> usize {
        self.target_index
    }

    /// Number of documents containing `term`.
    pub fn document_frequency(&self, term: &str) -> usize {
        self.documents.iter().filter(|d| d.contains(term)).count()
    }
}

/// Logarithm used for idf. Only the scale of scores depends on it; the
/// ranking does not.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    #[default]
    Natural,
    Two,
    Ten,
}

impl LogBase {
    fn ln_of_base(self) -> f64 {
        match self {
            Self::Natural => 1.0,
            Self::Two => std::f64::consts::LN_2,
            Self::Ten => std::f64::consts::LN_10,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RecommenderConfig {
    pub log_base: LogBase,
}

/// Relative frequency of `term` among the headline terms of `doc`.
pub fn term_frequency(term: &str, doc: &FeatureDocument) -> Result<f64, RecommendError> {
    if doc.total_terms == 0 {
        return Err(RecommendError::EmptyDocument);
    }
    Ok(doc.count(term) as f64 / doc.total_terms as f64)
}

/// `ln(documents / documents containing term)`.
pub fn inverse_document_frequency(term: &str, corpus: &DocumentCorpus) -> Result<f64, RecommendError> {
    let df = corpus.document_frequency(term);
    if df == 0 {
        return Err(RecommendError::TermAbsentEverywhere(term.to_string()));
    }
    Ok((corpus.documents.len() as f64 / df as f64).ln())
}

/// A headline score together with its exact form, used to order ties.
#[derive(Debug, Clone, PartialEq)]
struct Score {
    value: f64,
    // Σ count·ln(n/df) in natural log, before dividing by the term total.
    natural_sum: f64,
    exact: LogCombination,
}

fn score_terms(headline: &str, target: &FeatureDocument, corpus: &DocumentCorpus, log_base: LogBase) -> Score {
    let n = corpus.documents.len() as u64;
    let mut exact = LogCombination::default();
    for term in tokenize(headline) {
        let count = target.count(&term);
        if count == 0 {
            continue;
        }
        let df = corpus.document_frequency(&term) as u64;
        exact.add_log_ratio(n, df, count as i64);
    }
    if exact == LogCombination::default() {
        return Score {
            value: 0.0,
            natural_sum: 0.0,
            exact,
        };
    }
    let natural_sum = exact.ln_value();
    let value = natural_sum / target.total_terms as f64 / log_base.ln_of_base();
    Score {
        value,
        natural_sum,
        exact,
    }
}

/// Sum of `tf * idf` over the headline's terms, counting repeats.
pub fn score_headline(
    article: &ArticleRecord,
    target_doc: &FeatureDocument,
    corpus: &DocumentCorpus,
) -> Result<f64, RecommendError> {
    score_headline_with(article, target_doc, corpus, LogBase::Natural)
}

pub fn score_headline_with(
    article: &ArticleRecord,
    target_doc: &FeatureDocument,
    corpus: &DocumentCorpus,
    log_base: LogBase,
) -> Result<f64, RecommendError> {
    if !target_doc.articles.iter().any(|a| a.id == article.id) {
        return Err(RecommendError::ArticleNotInDocument(article.id.clone()));
    }
    if target_doc.total_terms == 0 {
        return Err(RecommendError::EmptyDocument);
    }
    Ok(score_terms(&article.headline, target_doc, corpus, log_base).value)
}

/// A ranked annotation candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredHeadline {
    pub rank: u32,
    pub score: f64,
    #[serde(flatten)]
    pub article: ArticleRecord,
}

/// Builds the document corpus for `target` against `context`.
pub fn build_corpus(
    target: &Feature,
    context: &[Feature],
    series: &TimeSeries,
    store: &HeadlineStore,
) -> Result<DocumentCorpus, RecommendError> {
    validate_request(target, context, series)?;
    let granularity = series.granularity();
    let documents = std::iter::once(target)
        .chain(context)
        .map(|feature| {
            let range = feature_time_range(feature, granularity);
            let articles = store
                .query(&range, series.keywords())
                .map_err(|e| match e {
                    StoreError::EmptyKeywords => RecommendError::EmptyKeywords,
                    other => unreachable!("query only fails on keywords: {other}"),
                })?
                .into_iter()
                .cloned()
                .collect();
            Ok(FeatureDocument::new(range, articles))
        })
        .collect::<Result<Vec<_>, RecommendError>>()?;
    DocumentCorpus::new(documents, 0)
}

fn validate_request(target: &Feature, context: &[Feature], series: &TimeSeries) -> Result<(), RecommendError> {
    if series.keywords().is_empty() {
        return Err(RecommendError::EmptyKeywords);
    }
    if context.is_empty() {
        return Err(RecommendError::EmptyContext);
    }
    if context.contains(target) {
        return Err(RecommendError::TargetInContext);
    }
    Ok(())
}

/// Ranked headlines for `target`, most relevant first.
///
/// An empty list means no article in the target's range matched the
/// series keywords and the feature stays unlabeled.
pub fn get_annotations(
    target: &Feature,
    context: &[Feature],
    series: &TimeSeries,
    store: &HeadlineStore,
) -> Result<Vec<ScoredHeadline>, RecommendError> {
    get_annotations_with(target, context, series, store, &RecommenderConfig::default())
}

pub fn get_annotations_with(
    target: &Feature,
    context: &[Feature],
    series: &TimeSeries,
    store: &HeadlineStore,
    config: &RecommenderConfig,
) -> Result<Vec<ScoredHeadline>, RecommendError> {
    let corpus = build_corpus(target, context, series, store)?;
    Ok(rank_target(&corpus, config.log_base))
}

/// Scores and ranks every article of the corpus' target document.
///
/// Order: score descending, then earlier publish date, then headline, then
/// id. Scores that are mathematically equal always tie.
pub fn rank_target(corpus: &DocumentCorpus, log_base: LogBase) -> Vec<ScoredHeadline> {
    let target = corpus.target();
    let mut scored: Vec<(Score, &ArticleRecord)> = target
        .articles
        .iter()
        .map(|a| (score_terms(&a.headline, target, corpus, log_base), a))
        .collect();
    scored.sort_by(|(sa, a), (sb, b)| {
        sb.natural_sum
            .total_cmp(&sa.natural_sum)
            .then_with(|| {
                if sa.exact == sb.exact {
                    Ordering::Equal
                } else {
                    sb.exact.cmp(&sa.exact)
                }
            })
            .then_with(|| a.publish_date.cmp(&b.publish_date))
            .then_with(|| a.headline.cmp(&b.headline))
            .then_with(|| a.id.cmp(&b.id))
    });
    scored
        .into_iter()
        .enumerate()
        .map(|(i, (s, a))| ScoredHeadline {
            rank: i as u32 + 1,
            score: s.value,
            article: a.clone(),
        })
        .collect()
}

/// Convenience for callers holding a detector result: the feature with
/// `rank` becomes the target and every other feature the context.
pub fn split_target(features: &[Feature], rank: u32) -> Option<(Feature, Vec<Feature>)> {
    let target = *features.iter().find(|f| f.rank() == rank)?;
    let context = features.iter().filter(|f| **f != target).copied().collect();
    Some((target, context))
}
