//! One verdict line per acceptance criterion. Exits non-zero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use annotator_archive::{ArchiveClient, RetryPolicy, KEY_ENV};
use annotator_core::detector::{detect_features, persistence_pairs, DetectOptions, ExtremumKind};
use annotator_core::model::{DataPoint, Feature, FeatureKind, Granularity, Prominence, TimeSeries};
use annotator_core::normalize_series;
use annotator_core::recommender::{
    build_corpus, get_annotations, get_annotations_with, tokenize, LogBase, RecommenderConfig, ScoredHeadline,
};
use annotator_core::store::{ingest, load_store, save_store, HeadlineStore, IngestConfig};
use annotator_fixtures::{check_against_naive, feature_of, materialize, monthly_series, naive_scores, store_of};
use annotator_oracles::instance::{random_instance, NaiveFeature};
use annotator_oracles::{superlevel_persistence, NaiveArticle};
use annotator_service::{
    router, AnnotationsRequest, AnnotationsResponse, AppState, FeaturesRequest, FeaturesResponse, SeriesPayload,
    ServiceConfig,
};
use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use chrono::{Days, NaiveDate};
use http_body_util::BodyExt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tower::ServiceExt;

const TFIDF_INSTANCES: u64 = 500;
const DETECTOR_SERIES: u64 = 1000;
const SCORE_TOLERANCE: f64 = 1e-9;

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = fn() -> Verdict;

fn verdict(result: Result<String, String>) -> Verdict {
    match result {
        Ok(detail) => Verdict::Pass(detail),
        Err(detail) => Verdict::Fail(detail),
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn daily_series(values: &[f64]) -> TimeSeries {
    let start = NaiveDate::from_ymd_opt(2001, 1, 1).unwrap();
    let points: Vec<_> = values
        .iter()
        .enumerate()
        .map(|(i, &v)| DataPoint::new(start + Days::new(i as u64), v))
        .collect();
    normalize_series(&points, Granularity::Day, vec![]).unwrap()
}

fn sorted(mut pairs: Vec<(usize, Option<f64>)>) -> Vec<(usize, Option<f64>)> {
    pairs.sort_by_key(|p| p.0);
    pairs
}

fn persistence_oracle() -> Verdict {
    let started = Instant::now();
    let mut checked = 0;
    let result = (|| {
        for code in 0..4u32.pow(8) {
            let values: Vec<f64> = (0..8).map(|i| ((code >> (2 * i)) & 3) as f64).collect();
            let got: Vec<_> = persistence_pairs(&values)
                .map_err(|e| e.to_string())?
                .iter()
                .map(|p| (p.extremum_index, p.persistence.finite()))
                .collect();
            let want = superlevel_persistence(&values);
            ensure(sorted(got.clone()) == sorted(want.clone()), || {
                format!("{values:?}: {got:?} vs {want:?}")
            })?;
            checked += 1;
        }
        let elapsed = started.elapsed();
        ensure(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
        Ok(format!("{checked} series, {:.2}s", elapsed.as_secs_f64()))
    })();
    verdict(result)
}

fn same_shape(a: &[Feature], b: &[Feature]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| x.locus() == y.locus() && x.rank() == y.rank())
}

fn detector_invariants() -> Verdict {
    let result = (|| {
        let opts = DetectOptions::default;
        for seed in 0..DETECTOR_SERIES {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let len = rng.random_range(2..=64);
            // Quarter-integers keep shifted and scaled values exact.
            let values: Vec<f64> = (0..len).map(|_| rng.random_range(-400..=400) as f64 / 4.0).collect();
            let series = daily_series(&values);
            let ctx = |what: &str| format!("seed {seed}: {what} violated for {values:?}");
            let peaks = detect_features(&series, ExtremumKind::Peak, opts()).map_err(|e| e.to_string())?;

            let shift = rng.random_range(-64..=64) as f64 / 2.0;
            let shifted =
                detect_features(&series.map_values(|v| v + shift).unwrap(), ExtremumKind::Peak, opts()).unwrap();
            ensure(shifted == peaks, || ctx("translation invariance"))?;

            for k in [0.5, 2.0, 10.0] {
                let scaled =
                    detect_features(&series.map_values(|v| v * k).unwrap(), ExtremumKind::Peak, opts()).unwrap();
                let prominences_scale =
                    scaled
                        .iter()
                        .zip(&peaks)
                        .all(|(s, p)| match (s.prominence(), p.prominence()) {
                            (Prominence::Global, Prominence::Global) => true,
                            (Prominence::Finite(a), Prominence::Finite(b)) => a == b * k,
                            _ => false,
                        });
                ensure(same_shape(&scaled, &peaks) && prominences_scale, || {
                    ctx(&format!("scale equivariance k={k}"))
                })?;
            }

            let valleys = detect_features(&series, ExtremumKind::Valley, opts()).unwrap();
            let mirrored = detect_features(&series.negated(), ExtremumKind::Peak, opts()).unwrap();
            let dual = same_shape(&valleys, &mirrored)
                && valleys
                    .iter()
                    .zip(&mirrored)
                    .all(|(v, m)| v.kind() == FeatureKind::Valley && v.prominence() == m.prominence());
            ensure(dual, || ctx("valley/peak duality"))?;

            let again = detect_features(&series, ExtremumKind::Peak, opts()).unwrap();
            let json = |f: &[Feature]| serde_json::to_string(f).unwrap();
            ensure(json(&again) == json(&peaks), || ctx("determinism"))?;
        }
        Ok(format!("{DETECTOR_SERIES} series, 0 violations"))
    })();
    verdict(result)
}

fn tfidf_oracle() -> Verdict {
    let result = (|| {
        let mut labeled = 0;
        for seed in 0..TFIDF_INSTANCES {
            let inst = random_instance(seed);
            let m = materialize(&inst);
            let out =
                get_annotations(&m.target, &m.context, &m.series, &m.store).map_err(|e| format!("seed {seed}: {e}"))?;
            check_against_naive(&out, &naive_scores(&inst), SCORE_TOLERANCE)
                .map_err(|e| format!("seed {seed}: {e}"))?;
            labeled += usize::from(!out.is_empty());
        }
        Ok(format!(
            "{TFIDF_INSTANCES} instances ({labeled} labeled), tolerance {SCORE_TOLERANCE:e}"
        ))
    })();
    verdict(result)
}

fn ubiquitous_terms_score_zero() -> Verdict {
    let result = (|| {
        let art = |id: &str, d: &str, h: &str| NaiveArticle {
            id: id.into(),
            date: d.into(),
            headline: h.into(),
            lede: String::new(),
        };
        let store = store_of(&[
            art("1", "2018-07-03", "Fire Season"),
            art("2", "2018-07-09", "Carr Fire Season"),
            art("3", "2018-03-03", "fire season"),
            art("4", "2019-11-03", "Season of Fire"),
        ]);
        let series = monthly_series(&["fire".to_string()]);
        let f = |year, month, rank| feature_of(&NaiveFeature::Point { year, month }, rank);
        let out = get_annotations(&f(2018, 7, 1), &[f(2018, 3, 2), f(2019, 11, 3)], &series, &store)
            .map_err(|e| e.to_string())?;
        let fixed = out.iter().find(|s| s.article.id == "1").map(|s| s.score);
        ensure(fixed == Some(0.0), || {
            format!("all-ubiquitous headline scored {fixed:?}")
        })?;

        let mut zero_checked = 0;
        for seed in 0..TFIDF_INSTANCES {
            let m = materialize(&random_instance(seed));
            let corpus = build_corpus(&m.target, &m.context, &m.series, &m.store).unwrap();
            let n = corpus.documents().len();
            for s in get_annotations(&m.target, &m.context, &m.series, &m.store).unwrap() {
                let tokens = tokenize(&s.article.headline);
                if !tokens.is_empty() && tokens.iter().all(|t| corpus.document_frequency(t) == n) {
                    ensure(s.score == 0.0, || {
                        format!("seed {seed}: {} scored {}", s.article.id, s.score)
                    })?;
                    zero_checked += 1;
                }
            }
        }
        Ok(format!(
            "fixture exact 0.0; {zero_checked} all-ubiquitous headlines in generated instances"
        ))
    })();
    verdict(result)
}

fn ids(out: &[ScoredHeadline]) -> Vec<&str> {
    out.iter().map(|s| s.article.id.as_str()).collect()
}

fn log_base_invariance() -> Verdict {
    let result = (|| {
        for seed in 0..TFIDF_INSTANCES {
            let m = materialize(&random_instance(seed));
            let with = |log_base| {
                get_annotations_with(
                    &m.target,
                    &m.context,
                    &m.series,
                    &m.store,
                    &RecommenderConfig { log_base },
                )
                .unwrap()
            };
            let ln = with(LogBase::Natural);
            for base in [LogBase::Two, LogBase::Ten] {
                ensure(ids(&with(base)) == ids(&ln), || {
                    format!("seed {seed}: order differs under {base:?}")
                })?;
            }
        }
        Ok(format!("{TFIDF_INSTANCES} instances, ln/log2/log10 orders identical"))
    })();
    verdict(result)
}

fn runtime() -> tokio::runtime::Runtime {
    tokio::runtime::Builder::new_current_thread().build().unwrap()
}

fn post_json(store: HeadlineStore, path: &str, body: Vec<u8>) -> (StatusCode, Vec<u8>) {
    let config = ServiceConfig::new("127.0.0.1:0".parse().unwrap(), "unused");
    let app = router(AppState::new(store), &config).unwrap();
    let req = Request::post(path)
        .header(header::CONTENT_TYPE, "application/json")
        .body(Body::from(body))
        .unwrap();
    runtime().block_on(async {
        let resp = app.oneshot(req).await.unwrap();
        let status = resp.status();
        (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
    })
}

fn cli(args: &[&str]) -> i32 {
    annotator_cli::run(std::iter::once("annotator").chain(args.iter().copied()))
}

fn write_series_csv(path: &Path, series: &TimeSeries) {
    let mut text = String::from("date,value\n");
    for p in series.points() {
        text.push_str(&format!("{},{}\n", p.date, p.value));
    }
    std::fs::write(path, text).unwrap();
}

fn unlabeled_feature() -> Verdict {
    let result = (|| {
        let art = |id: &str, d: &str, h: &str| NaiveArticle {
            id: id.into(),
            date: d.into(),
            headline: h.into(),
            lede: String::new(),
        };
        // March 2018 has an article, but it does not mention the keyword.
        let store = store_of(&[
            art("a", "2018-03-10", "Budget Talks Stall"),
            art("b", "2018-07-28", "Carr Fire Spreads"),
        ]);
        let series = monthly_series(&["fire".to_string()]);
        let f = |year, month, rank| feature_of(&NaiveFeature::Point { year, month }, rank);
        let (target, context) = (f(2018, 3, 2), vec![f(2018, 7, 1)]);

        let lib = get_annotations(&target, &context, &series, &store).map_err(|e| format!("library: {e}"))?;
        ensure(lib.is_empty(), || format!("library returned {} headlines", lib.len()))?;

        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("series.csv");
        write_series_csv(&csv, &series);
        let store_path = dir.path().join("store.ndjson");
        save_store(&store, &store_path).unwrap();
        let features_path = dir.path().join("features.json");
        let features = serde_json::json!({ "features": [context[0], target] });
        std::fs::write(&features_path, features.to_string()).unwrap();
        let out = dir.path().join("out.json");
        let code = cli(&[
            "annotate",
            "--series",
            csv.to_str().unwrap(),
            "--granularity",
            "month",
            "--keywords",
            "fire",
            "--features",
            features_path.to_str().unwrap(),
            "--target",
            "2",
            "--store",
            store_path.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        ensure(code == 0, || format!("CLI exit {code}"))?;
        let written: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
        ensure(written["annotations"] == serde_json::json!([]), || {
            format!("CLI wrote {written}")
        })?;

        let req = AnnotationsRequest {
            series: SeriesPayload::from_series(&series),
            target,
            context,
        };
        let (status, body) = post_json(store, "/v1/annotations", serde_json::to_vec(&req).unwrap());
        let body: serde_json::Value = serde_json::from_slice(&body).unwrap();
        ensure(
            status == StatusCode::OK && body == serde_json::json!({"annotations": []}),
            || format!("HTTP {status}: {body}"),
        )?;
        Ok("library [], CLI exit 0 with [], HTTP 200 with []".into())
    })();
    verdict(result)
}

fn service_equivalence() -> Verdict {
    let result = (|| {
        let mut feature_cases = 0;
        for seed in 0..200u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(10_000 + seed);
            let len = rng.random_range(2..=64);
            let values: Vec<f64> = (0..len).map(|_| rng.random_range(-1000.0..1000.0)).collect();
            let series = daily_series(&values);
            for kind in [ExtremumKind::Peak, ExtremumKind::Valley] {
                let max_count = rng.random_bool(0.5).then(|| rng.random_range(1..6));
                let min_prominence = rng.random_bool(0.5).then(|| rng.random_range(0.0..500.0));
                let req = FeaturesRequest {
                    series: SeriesPayload::from_series(&series),
                    kind,
                    max_count,
                    min_prominence,
                };
                let (status, body) = post_json(
                    HeadlineStore::empty(),
                    "/v1/features",
                    serde_json::to_vec(&req).unwrap(),
                );
                let resp: FeaturesResponse = serde_json::from_slice(&body).map_err(|e| format!("seed {seed}: {e}"))?;
                let lib = detect_features(
                    &series,
                    kind,
                    DetectOptions {
                        max_count,
                        min_prominence,
                    },
                )
                .unwrap();
                ensure(status == StatusCode::OK && resp.features == lib, || {
                    format!("features seed {seed}")
                })?;
                feature_cases += 1;
            }
        }

        let dir = tempfile::tempdir().unwrap();
        for seed in 0..TFIDF_INSTANCES {
            let m = materialize(&random_instance(seed));
            let lib = get_annotations(&m.target, &m.context, &m.series, &m.store).unwrap();
            let req = AnnotationsRequest {
                series: SeriesPayload::from_series(&m.series),
                target: m.target,
                context: m.context.clone(),
            };
            let (status, body) = post_json(m.store.clone(), "/v1/annotations", serde_json::to_vec(&req).unwrap());
            let resp: AnnotationsResponse = serde_json::from_slice(&body).map_err(|e| format!("seed {seed}: {e}"))?;
            ensure(status == StatusCode::OK && resp.annotations == lib, || {
                format!("annotations seed {seed}")
            })?;

            let path = dir.path().join(format!("{seed}.ndjson"));
            save_store(&m.store, &path).unwrap();
            let loaded = load_store(&path).map_err(|e| format!("seed {seed}: {e}"))?;
            ensure(loaded == m.store, || format!("store round-trip seed {seed}"))?;
            let (reingested, _) = ingest(loaded.to_raw(), &IngestConfig::default());
            ensure(reingested == m.store, || format!("re-ingest seed {seed}"))?;
        }
        Ok(format!(
            "{feature_cases} feature requests, {TFIDF_INSTANCES} annotation requests and store round-trips"
        ))
    })();
    verdict(result)
}

/// Live archive check. Needs network access and an API key.
fn live_carr_fire() -> Verdict {
    let Ok(key) = std::env::var(KEY_ENV) else {
        return Verdict::Skip(format!("{KEY_ENV} not set"));
    };
    let result = (|| {
        let retry = RetryPolicy {
            max_retries: 5,
            initial_backoff: Duration::from_secs(12),
            max_backoff: Duration::from_secs(60),
        };
        let client = ArchiveClient::new(Some(key))
            .map_err(|e| e.to_string())?
            .with_retry(retry);
        // Target month plus two other wildfire peaks as context.
        let months = [(2018, 7), (2018, 11), (2013, 7)];
        let mut raw = Vec::new();
        for (i, (y, m)) in months.into_iter().enumerate() {
            if i > 0 {
                std::thread::sleep(Duration::from_secs(12));
            }
            raw.extend(client.fetch_month(y, m).map_err(|e| format!("{y}-{m:02}: {e}"))?);
        }
        let (store, stats) = ingest(raw, &IngestConfig::default());
        let points: Vec<_> = (0..96)
            .map(|i| {
                DataPoint::new(
                    NaiveDate::from_ymd_opt(2013 + i / 12, (i % 12) as u32 + 1, 1).unwrap(),
                    0.0,
                )
            })
            .collect();
        let keywords = vec![
            "california wildfires".to_string(),
            "wildfire".to_string(),
            "fire".to_string(),
        ];
        let series = normalize_series(&points, Granularity::Month, keywords).unwrap();
        let month = |y, m, rank| {
            Feature::point(
                FeatureKind::Peak,
                NaiveDate::from_ymd_opt(y, m, 1).unwrap(),
                Prominence::Finite(1.0),
                rank,
            )
            .unwrap()
        };
        let out = get_annotations(
            &month(2018, 7, 1),
            &[month(2018, 11, 2), month(2013, 7, 3)],
            &series,
            &store,
        )
        .map_err(|e| e.to_string())?;
        let top = out.first().map(|s| s.article.headline.clone()).unwrap_or_default();
        ensure(top.contains("Carr Fire"), || {
            format!("rank-1 headline was {top:?} ({} candidates)", out.len())
        })?;
        Ok(format!("{} records ingested; rank 1: {top}", stats.accepted))
    })();
    verdict(result)
}

fn main() {
    let criteria: [(&str, Check); 8] = [
        ("persistence oracle (exhaustive 4^8)", persistence_oracle),
        ("detector invariants", detector_invariants),
        ("tf-idf oracle", tfidf_oracle),
        ("ubiquitous terms score zero", ubiquitous_terms_score_zero),
        ("log-base invariance", log_base_invariance),
        ("unlabeled feature path", unlabeled_feature),
        ("service equivalence and store round-trip", service_equivalence),
        ("live archive: Carr Fire at rank 1", live_carr_fire),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let started = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Verdict::Fail(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = started.elapsed().as_secs_f64();
        match v {
            Verdict::Pass(d) => println!("PASS  {name}: {d} [{secs:.1}s]"),
            Verdict::Skip(d) => println!("SKIP  {name}: {d}"),
            Verdict::Fail(d) => {
                failed += 1;
                println!("FAIL  {name}: {d} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
