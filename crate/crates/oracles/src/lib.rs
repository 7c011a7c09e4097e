//! Independent reference implementations for testing.
//!
//! Nothing here shares code with `annotator-core`: the persistence oracle
//! recomputes superlevel-set components level by level, and the TF-IDF
//! oracle filters, counts and scores from the definitions with plain loops.
//! Inputs and outputs are plain std types.

use std::collections::HashMap;

pub mod instance;

/// Persistence of every local maximum, computed by enumerating superlevel
/// sets directly.
///
/// For each distinct value `h` (descending) the set `{i : v[i] >= h}` is
/// split into runs. A run holding no component from the previous level
/// starts a new one, represented by its leftmost index. A run holding
/// several components keeps the one born highest (leftmost on ties) and
/// ends the others with persistence `birth - h`. The last survivor gets
/// `None`.
pub fn superlevel_persistence(values: &[f64]) -> Vec<(usize, Option<f64>)> {
    #[derive(Clone, Copy)]
    struct Component {
        rep: usize,
        birth: f64,
    }

    let mut levels: Vec<f64> = values.to_vec();
    levels.sort_by(|a, b| b.partial_cmp(a).unwrap());
    levels.dedup_by(|a, b| a == b);

    let mut live: Vec<Component> = Vec::new();
    let mut out = Vec::new();
    for &h in &levels {
        let mut next = Vec::new();
        let mut i = 0;
        while i < values.len() {
            if values[i] < h {
                i += 1;
                continue;
            }
            let start = i;
            while i < values.len() && values[i] >= h {
                i += 1;
            }
            let run = start..i;
            let mut inside: Vec<Component> = live.iter().copied().filter(|c| run.contains(&c.rep)).collect();
            if inside.is_empty() {
                next.push(Component { rep: start, birth: h });
                continue;
            }
            inside.sort_by(|a, b| b.birth.partial_cmp(&a.birth).unwrap().then(a.rep.cmp(&b.rep)));
            for dead in &inside[1..] {
                out.push((dead.rep, Some(dead.birth - h)));
            }
            next.push(inside[0]);
        }
        live = next;
    }
    assert_eq!(live.len(), 1, "the lowest level is one run");
    out.push((live[0].rep, None));
    out
}

/// Local maxima counted with plateaus collapsed: a maximal run of equal
/// values whose neighbours on both sides (where present) are lower. A
/// constant series counts once.
pub fn count_local_maxima(values: &[f64]) -> usize {
    let mut count = 0;
    let mut i = 0;
    while i < values.len() {
        let start = i;
        while i + 1 < values.len() && values[i + 1] == values[start] {
            i += 1;
        }
        let left_lower = start == 0 || values[start - 1] < values[start];
        let right_lower = i + 1 == values.len() || values[i + 1] < values[start];
        if left_lower && right_lower {
            count += 1;
        }
        i += 1;
    }
    count
}

#[derive(Debug, Clone)]
pub struct NaiveArticle {
    pub id: String,
    /// ISO `YYYY-MM-DD`, so string order is date order.
    pub date: String,
    pub headline: String,
    pub lede: String,
}

/// Scores every article of the target range from the TF-IDF definitions.
///
/// `ranges` are inclusive `(start, end)` ISO dates, `ranges[target]` is the
/// target feature's. `log` is the logarithm applied in idf.
pub fn naive_tfidf_scores(
    articles: &[NaiveArticle],
    ranges: &[(String, String)],
    target: usize,
    keywords: &[String],
    tokenize: impl Fn(&str) -> Vec<String>,
    log: impl Fn(f64) -> f64,
) -> Vec<(String, f64)> {
    let matches = |a: &NaiveArticle| {
        let h = a.headline.to_lowercase();
        let l = a.lede.to_lowercase();
        keywords.iter().any(|k| {
            let k = k.to_lowercase();
            h.contains(&k) || l.contains(&k)
        })
    };
    let documents: Vec<Vec<&NaiveArticle>> = ranges
        .iter()
        .map(|(start, end)| {
            articles
                .iter()
                .filter(|a| a.date.as_str() >= start.as_str() && a.date.as_str() <= end.as_str() && matches(a))
                .collect()
        })
        .collect();
    let doc_terms: Vec<Vec<String>> = documents
        .iter()
        .map(|doc| doc.iter().flat_map(|a| tokenize(&a.headline)).collect())
        .collect();

    let target_terms = &doc_terms[target];
    let total = target_terms.len() as f64;
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in target_terms {
        *counts.entry(t.as_str()).or_default() += 1;
    }
    let tf = |t: &str| counts.get(t).copied().unwrap_or(0) as f64 / total;
    let idf = |t: &str| {
        let containing = doc_terms.iter().filter(|terms| terms.iter().any(|x| x == t)).count();
        log(ranges.len() as f64 / containing as f64)
    };

    documents[target]
        .iter()
        .map(|a| {
            let score = tokenize(&a.headline).iter().map(|t| tf(t) * idf(t)).sum();
            (a.id.clone(), score)
        })
        .collect()
}
