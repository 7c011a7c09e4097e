//! Prominence ranking of peaks and valleys by 0-dimensional persistence.
//!
//! The series is flooded from the top: indices are visited in decreasing
//! value order and joined to already-visited neighbours with a union-find.
//! A local maximum starts a component; when two components meet, the one
//! born lower dies at the current level (elder rule). The component of the
//! global maximum never dies.
//!
//! Equal values are visited left to right, so a flat-topped peak is
//! reported at its leftmost index. A component that is born and absorbed
//! at the same level is the shoulder of a higher plateau, not an extremum,
//! and is not reported.

use serde::{Deserialize, Serialize};

use crate::error::DetectError;
use crate::model::{Feature, FeatureKind, Prominence, TimeSeries};

/// Persistence of one local maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PersistencePair {
    pub extremum_index: usize,
    pub birth_value: f64,
    /// `None` for the component that never dies.
    pub death_value: Option<f64>,
    pub persistence: Prominence,
}

/// Which extrema to rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtremumKind {
    Peak,
    Valley,
}

impl From<ExtremumKind> for FeatureKind {
    fn from(k: ExtremumKind) -> Self {
        match k {
            ExtremumKind::Peak => FeatureKind::Peak,
            ExtremumKind::Valley => FeatureKind::Valley,
        }
    }
}

impl TryFrom<FeatureKind> for ExtremumKind {
    type Error = DetectError;

    fn try_from(k: FeatureKind) -> Result<Self, Self::Error> {
        match k {
            FeatureKind::Peak => Ok(Self::Peak),
            FeatureKind::Valley => Ok(Self::Valley),
            FeatureKind::Trend => Err(DetectError::UnsupportedKind),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DetectOptions {
    /// Keep at most this many features. `None` keeps all.
    pub max_count: Option<usize>,
    /// Drop features whose persistence is below this. The global extremum
    /// always passes.
    pub min_prominence: Option<f64>,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
}

/// Computes one persistence pair per local maximum of `values`.
///
/// Pairs are ordered by persistence, largest first with the global
/// maximum leading; equal persistence is ordered by index.
pub fn persistence_pairs(values: &[f64]) -> Result<Vec<PersistencePair>, DetectError> {
    if values.len() < 2 {
        return Err(DetectError::TooShort(values.len()));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(DetectError::NonFiniteValue(i));
    }

    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    // partial_cmp so that -0.0 and 0.0 tie.
    order.sort_by(|&a, &b| {
        values[b]
            .partial_cmp(&values[a])
            .expect("finite values")
            .then(a.cmp(&b))
    });
    let mut visit_pos = vec![0usize; n];
    for (pos, &i) in order.iter().enumerate() {
        visit_pos[i] = pos;
    }

    let mut uf = UnionFind::new(n);
    // Root of each component -> index where the component was born.
    let mut birth = vec![usize::MAX; n];
    let mut visited = vec![false; n];
    let mut pairs = Vec::new();

    for &i in &order {
        visited[i] = true;
        let left = (i > 0 && visited[i - 1]).then(|| i - 1);
        let right = (i + 1 < n && visited[i + 1]).then(|| i + 1);
        match (left, right) {
            (None, None) => birth[i] = i,
            (Some(nb), None) | (None, Some(nb)) => {
                let root = uf.find(nb);
                uf.parent[i] = root;
            }
            (Some(l), Some(r)) => {
                let (rl, rr) = (uf.find(l), uf.find(r));
                let (bl, br) = (birth[rl], birth[rr]);
                let (elder_root, younger_root, younger_birth) = if visit_pos[bl] < visit_pos[br] {
                    (rl, rr, br)
                } else {
                    (rr, rl, bl)
                };
                let birth_value = values[younger_birth];
                let death_value = values[i];
                let persistence = birth_value - death_value;
                if persistence > 0.0 {
                    pairs.push(PersistencePair {
                        extremum_index: younger_birth,
                        birth_value,
                        death_value: Some(death_value),
                        persistence: Prominence::Finite(persistence),
                    });
                }
                uf.parent[younger_root] = elder_root;
                uf.parent[i] = elder_root;
            }
        }
    }

    let global = order[0];
    pairs.push(PersistencePair {
        extremum_index: global,
        birth_value: values[global],
        death_value: None,
        persistence: Prominence::Global,
    });
    pairs.sort_by(|a, b| {
        b.persistence
            .cmp_desc_key(&a.persistence)
            .then(a.extremum_index.cmp(&b.extremum_index))
    });
    Ok(pairs)
}

/// Ranks the peaks (or valleys) of `series` by persistence.
pub fn detect_features(
    series: &TimeSeries,
    kind: ExtremumKind,
    options: DetectOptions,
) -> Result<Vec<Feature>, DetectError> {
    if options.max_count == Some(0) {
        return Err(DetectError::InvalidMaxCount);
    }
    let min_prominence = options.min_prominence.unwrap_or(0.0);
    if !(min_prominence.is_finite() && min_prominence >= 0.0) {
        return Err(DetectError::InvalidThreshold);
    }

    let mut values = series.values();
    if kind == ExtremumKind::Valley {
        values.iter_mut().for_each(|v| *v = -*v);
    }
    let pairs = persistence_pairs(&values)?;
    let limit = options.max_count.unwrap_or(usize::MAX);
    let points = series.points();

    let features = pairs
        .into_iter()
        .filter(|p| p.persistence.at_least(min_prominence))
        .take(limit)
        .enumerate()
        .map(|(i, p)| {
            Feature::point(kind.into(), points[p.extremum_index].date, p.persistence, i as u32 + 1)
                .expect("detector output satisfies feature invariants")
        })
        .collect();
    Ok(features)
}
