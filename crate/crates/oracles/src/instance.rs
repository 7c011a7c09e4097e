//! Random recommender instances for oracle comparisons.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::NaiveArticle;

const VOCAB: &[&str] = &[
    "Fire",
    "fire",
    "FIRE",
    "Wildfire",
    "flood",
    "Flood",
    "storm",
    "warning",
    "Carr",
    "camp",
    "toll",
    "rises",
    "smoke",
    "city",
    "the",
    "in",
    "another",
    "COVID-19",
    "evacuations",
    "ordered",
    "near",
    "Yosemite",
];
const LEDE_VOCAB: &[&str] = &["fire", "storm warning", "quiet", "day", "flooding", "report"];

/// Month-granularity feature, as (year, month) pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NaiveFeature {
    Point { year: i32, month: u32 },
    Interval { start: (i32, u32), end: (i32, u32) },
}

impl NaiveFeature {
    /// Inclusive ISO day range covered at month granularity.
    pub fn month_range(&self) -> (String, String) {
        let (s, e) = match *self {
            Self::Point { year, month } => ((year, month), (year, month)),
            Self::Interval { start, end } => (start, end),
        };
        (
            format!("{:04}-{:02}-01", s.0, s.1),
            format!("{:04}-{:02}-{:02}", e.0, e.1, days_in_month(e.0, e.1)),
        )
    }
}

pub fn days_in_month(year: i32, month: u32) -> u32 {
    match month {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 if (year % 4 == 0 && year % 100 != 0) || year % 400 == 0 => 29,
        2 => 28,
        _ => panic!("month {month}"),
    }
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub articles: Vec<NaiveArticle>,
    /// `features[0]` is the target.
    pub features: Vec<NaiveFeature>,
    pub keywords: Vec<String>,
}

fn month_of(index: u32) -> (i32, u32) {
    (2018 + (index / 12) as i32, index % 12 + 1)
}

/// A store of at most 200 articles over 2018-2019 and 2 to 6 distinct
/// features, some of them two-month trends.
pub fn random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let n_features = rng.random_range(2..=6);
    let mut features: Vec<NaiveFeature> = Vec::with_capacity(n_features);
    while features.len() < n_features {
        let m = rng.random_range(0..24u32);
        let f = if rng.random_bool(0.15) && m < 23 {
            NaiveFeature::Interval {
                start: month_of(m),
                end: month_of(m + 1),
            }
        } else {
            let (year, month) = month_of(m);
            NaiveFeature::Point { year, month }
        };
        if !features.contains(&f) {
            features.push(f);
        }
    }

    // Concentrate articles in the feature months so documents are non-trivial.
    let n_articles = rng.random_range(0..=200);
    let articles = (0..n_articles)
        .map(|i| {
            let (year, month) = if rng.random_bool(0.7) {
                let (s, _) = features.choose(&mut rng).unwrap().month_range();
                (s[..4].parse().unwrap(), s[5..7].parse().unwrap())
            } else {
                month_of(rng.random_range(0..24))
            };
            let day = rng.random_range(1..=days_in_month(year, month));
            let words = rng.random_range(1..=6);
            let headline = (0..words)
                .map(|_| *VOCAB.choose(&mut rng).unwrap())
                .collect::<Vec<_>>()
                .join(" ");
            let lede = if rng.random_bool(0.4) {
                LEDE_VOCAB.choose(&mut rng).unwrap().to_string()
            } else {
                String::new()
            };
            NaiveArticle {
                id: format!("a{i:03}"),
                date: format!("{year:04}-{month:02}-{day:02}"),
                headline,
                lede,
            }
        })
        .collect();

    let keywords = match rng.random_range(0..3) {
        0 => vec!["fire".to_string()],
        1 => vec!["fire".to_string(), "flood".to_string()],
        _ => vec!["storm warning".to_string(), "wildfire".to_string(), "camp".to_string()],
    };
    Instance {
        articles,
        features,
        keywords,
    }
}
