//! Declarative chart specs with one text layer per chosen annotation.
//!
//! The output is a Vega-Lite document: the series as a line layer plus a
//! text-mark layer for every selected headline, anchored at the feature's
//! date and the series value there.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::ChartError;
use crate::model::{Feature, TimeSeries};
use crate::recommender::ScoredHeadline;

pub const VEGA_LITE_SCHEMA: &str = "https://vega.github.io/schema/vega-lite/v5.json";

/// Ranked headlines for one target feature, as written by the annotate
/// command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationSet {
    pub target: Feature,
    pub annotations: Vec<ScoredHeadline>,
}

impl AnnotationSet {
    /// The default choice: the top-ranked headline, if any.
    pub fn default_selection(&self) -> Option<Selection> {
        self.annotations.iter().min_by_key(|a| a.rank).map(|a| Selection {
            date: self.target.locus().anchor(),
            text: a.article.headline.clone(),
            url: a.article.url.clone(),
        })
    }
}

/// A headline chosen to label the chart at `date`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub date: NaiveDate,
    pub text: String,
    pub url: String,
}

pub fn render_chart_spec(series: &TimeSeries, selections: &[Selection]) -> Result<Value, ChartError> {
    let values: Vec<Value> = series
        .points()
        .iter()
        .map(|p| json!({ "date": p.date.to_string(), "value": p.value }))
        .collect();

    let mut layers = vec![json!({
        "mark": { "type": "line" },
        "encoding": {
            "x": { "field": "date", "type": "temporal" },
            "y": { "field": "value", "type": "quantitative" }
        }
    })];
    for s in selections {
        let value = series
            .value_at(s.date)
            .ok_or(ChartError::AbsentTimestamp { date: s.date })?;
        layers.push(json!({
            "data": { "values": [{ "date": s.date.to_string(), "value": value, "text": s.text, "url": s.url }] },
            "mark": { "type": "text", "align": "left", "baseline": "bottom", "dx": 4, "dy": -4 },
            "encoding": {
                "x": { "field": "date", "type": "temporal" },
                "y": { "field": "value", "type": "quantitative" },
                "text": { "field": "text", "type": "nominal" },
                "href": { "field": "url", "type": "nominal" }
            }
        }));
    }

    Ok(json!({
        "$schema": VEGA_LITE_SCHEMA,
        "data": { "values": values },
        "layer": layers
    }))
}
