//! Question tagging, entity extraction and query-type classification.

mod classifier;
mod extract;
mod tag;
pub mod words;

use std::collections::BTreeMap;

use nlst_geo::text::{format_period, parse_period};
use nlst_geo::Period;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{Database, KnowledgeBase};
use crate::corpus::QueryType;

pub use classifier::{features, train_classifier, TypeClassifier, EPOCHS, LEARNING_RATE, MODEL_VERSION};
pub use extract::{fine_extract, EntityMatch};
pub use tag::{coarse_tag, tokenize, Label, TaggedSpan, Tagging, Token};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NluError {
    #[error("empty question")]
    EmptyInput,
    #[error("unknown entity '{span}'")]
    UnknownEntity { span: String, suggestions: Vec<String> },
    #[error("'{span}' is ambiguous: {}", candidates.join(", "))]
    AmbiguousEntity { span: String, candidates: Vec<String> },
    #[error("invalid time period: {0}")]
    InvalidPeriod(String),
    #[error("class {0} has fewer than 10 training examples")]
    InsufficientData(QueryType),
    #[error("model error: {0}")]
    Model(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistUnit {
    M,
    Km,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Distance {
    pub value: f64,
    pub unit: DistUnit,
}

impl Distance {
    pub fn meters(&self) -> f64 {
        match self.unit {
            DistUnit::M => self.value,
            DistUnit::Km => self.value * 1000.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggKind {
    Count,
    Avg,
    Max,
    Min,
}

impl AggKind {
    pub fn name(self) -> &'static str {
        match self {
            AggKind::Count => "count",
            AggKind::Avg => "avg",
            AggKind::Max => "max",
            AggKind::Min => "min",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "count" => AggKind::Count,
            "avg" => AggKind::Avg,
            "max" => AggKind::Max,
            "min" => AggKind::Min,
            _ => return None,
        })
    }
}

/// Spatial relationship word found in the question.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpatialCue {
    Contains,
    Intersects,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ObjectRef {
    pub relation: String,
    pub tuple_id: usize,
    pub name: String,
}

/// Typed query slots distilled from the two lists.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ExtractionResult {
    pub relations: Vec<String>,
    /// Location-KB ids.
    pub locations: Vec<usize>,
    pub objects: Vec<ObjectRef>,
    pub k: Option<usize>,
    pub distance: Option<Distance>,
    pub period: Option<Period>,
    pub nn_flag: bool,
    pub similar_flag: bool,
    pub agg: Option<AggKind>,
    pub spatial_cue: Option<SpatialCue>,
    /// Numeric attribute named in the question.
    pub measure: Option<String>,
    /// Resolved entity spans, for the parse trace.
    pub entities: Vec<EntityMatch>,
}

/// Slot keys each query type is judged on.
pub fn slot_keys(t: QueryType) -> &'static [&'static str] {
    match t {
        QueryType::BasicSpatial => &["relation", "location"],
        QueryType::TimeInterval => &["relation", "object", "period"],
        QueryType::Range => &["relation", "location", "distance"],
        QueryType::NearestNeighbor => &["relation", "object", "location", "k", "period"],
        QueryType::Join => &["relation", "relation2", "cue", "distance"],
        QueryType::Similarity => &["object", "k"],
        QueryType::Aggregation => &["relation", "agg", "measure", "location", "distance", "period"],
    }
}

pub fn format_meters(m: f64) -> String {
    if m.fract() == 0.0 && m.abs() < 1e15 {
        format!("{}", m as i64)
    } else {
        m.to_string()
    }
}

impl ExtractionResult {
    /// Slot map restricted to the keys relevant for `t`.
    pub fn to_slots(&self, t: QueryType, kb: &KnowledgeBase) -> BTreeMap<String, String> {
        let mut all: BTreeMap<&str, String> = BTreeMap::new();
        if let Some(r) = self.relations.first() {
            all.insert("relation", r.clone());
        }
        if let Some(r) = self.relations.get(1) {
            all.insert("relation2", r.clone());
        }
        if let Some(l) = self.locations.first().and_then(|&i| kb.location(i)) {
            all.insert("location", l.surface_name.clone());
        }
        if let Some(o) = self.objects.first() {
            all.insert("object", o.name.clone());
        }
        if let Some(k) = self.k {
            all.insert("k", k.to_string());
        }
        if let Some(d) = self.distance {
            all.insert("distance", format_meters(d.meters()));
        } else if let Some(c) = self.spatial_cue {
            all.insert("cue", if c == SpatialCue::Contains { "contains" } else { "intersects" }.to_string());
        }
        if let Some(p) = self.period {
            all.insert("period", format_period(&p));
        }
        if let Some(a) = self.agg {
            all.insert("agg", a.name().to_string());
            if a != AggKind::Count {
                if let Some(m) = &self.measure {
                    all.insert("measure", m.clone());
                }
            }
        }
        let keys = slot_keys(t);
        all.into_iter().filter(|(k, _)| keys.contains(k)).map(|(k, v)| (k.to_string(), v)).collect()
    }

    /// Rebuilds an extraction from bound corpus slots.
    pub fn from_slots(slots: &BTreeMap<String, String>, db: &Database) -> Result<Self, String> {
        let kb = db.kb();
        let mut ex = ExtractionResult::default();
        for key in ["relation", "relation2"] {
            if let Some(r) = slots.get(key) {
                if db.relation(r).is_none() {
                    return Err(format!("{key}: unknown relation '{r}'"));
                }
                ex.relations.push(r.clone());
            }
        }
        if let Some(l) = slots.get("location") {
            let loc = kb.locations_named(l).into_iter().next().ok_or_else(|| format!("location: unknown '{l}'"))?;
            ex.locations.push(loc.id);
        }
        if let Some(o) = slots.get("object") {
            let obj = kb.objects_named(o).into_iter().next().ok_or_else(|| format!("object: unknown '{o}'"))?;
            ex.objects.push(ObjectRef { relation: obj.relation.clone(), tuple_id: obj.tuple_id, name: obj.surface_name.clone() });
        }
        if let Some(k) = slots.get("k") {
            ex.k = Some(k.parse().map_err(|_| format!("k: bad value '{k}'"))?);
        }
        if let Some(d) = slots.get("distance") {
            ex.distance = Some(Distance { value: d.parse().map_err(|_| format!("distance: bad value '{d}'"))?, unit: DistUnit::M });
        }
        if let Some(p) = slots.get("period") {
            ex.period = Some(parse_period(p).map_err(|e| format!("period: {e}"))?);
        }
        if let Some(a) = slots.get("agg") {
            ex.agg = Some(AggKind::parse(a).ok_or_else(|| format!("agg: bad value '{a}'"))?);
        }
        if let Some(c) = slots.get("cue") {
            ex.spatial_cue = Some(match c.as_str() {
                "contains" => SpatialCue::Contains,
                "intersects" => SpatialCue::Intersects,
                _ => return Err(format!("cue: bad value '{c}'")),
            });
        }
        ex.measure = slots.get("measure").cloned();
        Ok(ex)
    }
}
