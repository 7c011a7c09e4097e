//! Converts generated oracle instances into library values.

use annotator_core::model::{DataPoint, Feature, FeatureKind, Granularity, Prominence, TimeSeries};
use annotator_core::normalize_series;
use annotator_core::recommender::ScoredHeadline;
use annotator_core::store::{ArticleRecord, HeadlineStore};
use annotator_oracles::instance::{Instance, NaiveFeature};
use annotator_oracles::NaiveArticle;
use chrono::NaiveDate;

pub fn date(s: &str) -> NaiveDate {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
}

pub fn store_of(articles: &[NaiveArticle]) -> HeadlineStore {
    let records = articles
        .iter()
        .map(|a| ArticleRecord {
            id: a.id.clone(),
            headline: a.headline.clone(),
            publish_date: date(&a.date),
            article_type: "news".into(),
            lede: a.lede.clone(),
            url: format!("https://example.com/{}", a.id),
        })
        .collect();
    HeadlineStore::from_records(records).unwrap()
}

pub fn monthly_series(keywords: &[String]) -> TimeSeries {
    let points: Vec<_> = (0..24)
        .map(|i| {
            DataPoint::new(
                NaiveDate::from_ymd_opt(2018 + i / 12, (i % 12) as u32 + 1, 1).unwrap(),
                (i * 7 % 11) as f64,
            )
        })
        .collect();
    normalize_series(&points, Granularity::Month, keywords.to_vec()).unwrap()
}

pub fn feature_of(f: &NaiveFeature, rank: u32) -> Feature {
    match *f {
        NaiveFeature::Point { year, month } => Feature::point(
            FeatureKind::Peak,
            NaiveDate::from_ymd_opt(year, month, 1).unwrap(),
            Prominence::Finite(rank as f64),
            rank,
        )
        .unwrap(),
        NaiveFeature::Interval { start, end } => Feature::trend(
            NaiveDate::from_ymd_opt(start.0, start.1, 1).unwrap(),
            NaiveDate::from_ymd_opt(end.0, end.1, 1).unwrap(),
            0.0,
            rank,
        )
        .unwrap(),
    }
}

pub struct Materialized {
    pub store: HeadlineStore,
    pub series: TimeSeries,
    pub target: Feature,
    pub context: Vec<Feature>,
}

pub fn materialize(instance: &Instance) -> Materialized {
    let features: Vec<Feature> = instance
        .features
        .iter()
        .enumerate()
        .map(|(i, f)| feature_of(f, i as u32 + 1))
        .collect();
    Materialized {
        store: store_of(&instance.articles),
        series: monthly_series(&instance.keywords),
        target: features[0],
        context: features[1..].to_vec(),
    }
}

/// Checks `ranked` against independently computed scores: same articles,
/// scores within `tol`, non-increasing order, and date/headline/id order
/// among exact ties.
pub fn check_against_naive(ranked: &[ScoredHeadline], naive: &[(String, f64)], tol: f64) -> Result<(), String> {
    if ranked.len() != naive.len() {
        return Err(format!("{} ranked vs {} expected", ranked.len(), naive.len()));
    }
    let expected: std::collections::HashMap<&str, f64> = naive.iter().map(|(id, s)| (id.as_str(), *s)).collect();
    for (i, s) in ranked.iter().enumerate() {
        if s.rank as usize != i + 1 {
            return Err(format!("rank {} at position {}", s.rank, i));
        }
        let want = *expected
            .get(s.article.id.as_str())
            .ok_or_else(|| format!("unexpected article {}", s.article.id))?;
        if (s.score - want).abs() > tol {
            return Err(format!("{}: score {} vs naive {}", s.article.id, s.score, want));
        }
    }
    for w in ranked.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let (sa, sb) = (expected[a.article.id.as_str()], expected[b.article.id.as_str()]);
        if sa < sb - tol {
            return Err(format!("{} ({sa}) ranked above {} ({sb})", a.article.id, b.article.id));
        }
        let tie = (sa - sb).abs() <= 1e-12 * sa.abs().max(1.0);
        let key = |s: &ScoredHeadline| (s.article.publish_date, s.article.headline.clone(), s.article.id.clone());
        if tie && key(a) > key(b) {
            return Err(format!(
                "tie between {} and {} not broken by date/headline",
                a.article.id, b.article.id
            ));
        }
    }
    Ok(())
}

pub fn naive_articles_in(instance: &Instance) -> Vec<(String, String)> {
    instance.features.iter().map(NaiveFeature::month_range).collect()
}

/// Scores `instance` with the naive reference, natural log.
pub fn naive_scores(instance: &Instance) -> Vec<(String, f64)> {
    annotator_oracles::naive_tfidf_scores(
        &instance.articles,
        &naive_articles_in(instance),
        0,
        &instance.keywords,
        annotator_core::recommender::tokenize,
        f64::ln,
    )
}
