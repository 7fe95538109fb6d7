//! Dataset ingestion, relations, statistics and the knowledge base.

mod kb;
mod load;

use std::collections::BTreeMap;
use std::sync::Arc;

use nlst_geo::rtree::DEFAULT_FANOUT;
use nlst_geo::{Period, RTree, Rect};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use kb::{
    build_kb, kb_lookup, normalize, similarity, EntryRef, KbMatch, KnowledgeBase, LocationKBEntry, MatchKind,
    ObjectKBEntry, RelationKBEntry, FUZZY_THRESHOLD,
};
pub use load::load_dataset;

use crate::value::{AttrKind, AttributeDef, Tuple, Value};

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("no catalog.json in {0}")]
    MissingCatalog(String),
    #[error("schema mismatch in relation '{relation}' at row {row}: {msg}")]
    SchemaMismatch { relation: String, row: usize, msg: String },
    #[error("bad geometry in relation '{relation}' at row {row}: {msg}")]
    BadGeometry { relation: String, row: usize, msg: String },
    #[error("unknown relation '{0}'")]
    UnknownRelation(String),
    #[error("invalid catalog: {0}")]
    InvalidCatalog(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Relation {
    pub name: String,
    pub attributes: Vec<AttributeDef>,
    pub tuples: Vec<Tuple>,
    /// attribute name -> R-tree over tuple ids
    pub indexes: BTreeMap<String, RTree>,
    /// Source relation when this is a unit-ordered companion.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derived_from: Option<String>,
}

impl Relation {
    /// Validates tuple arity and kinds, then builds the flagged indexes.
    pub fn new(name: impl Into<String>, attributes: Vec<AttributeDef>, tuples: Vec<Tuple>) -> Result<Self, CatalogError> {
        let name = name.into();
        for (i, a) in attributes.iter().enumerate() {
            if attributes[..i].iter().any(|b| b.name == a.name) {
                return Err(CatalogError::InvalidCatalog(format!("duplicate attribute '{}' in '{name}'", a.name)));
            }
            if a.indexed && !a.kind.is_spatial() {
                return Err(CatalogError::InvalidCatalog(format!(
                    "attribute '{}' of kind {} cannot be indexed",
                    a.name, a.kind
                )));
            }
        }
        for (row, t) in tuples.iter().enumerate() {
            if t.len() != attributes.len() {
                return Err(CatalogError::SchemaMismatch {
                    relation: name.clone(),
                    row: row + 1,
                    msg: format!("{} values for {} attributes", t.len(), attributes.len()),
                });
            }
            for (v, a) in t.iter().zip(&attributes) {
                if v.kind() != a.kind {
                    return Err(CatalogError::SchemaMismatch {
                        relation: name.clone(),
                        row: row + 1,
                        msg: format!("attribute '{}' expects {}, got {}", a.name, a.kind, v.kind()),
                    });
                }
            }
        }
        let mut rel = Relation { name, attributes, tuples, indexes: BTreeMap::new(), derived_from: None };
        rel.build_indexes();
        Ok(rel)
    }

    fn build_indexes(&mut self) {
        self.indexes.clear();
        for (i, a) in self.attributes.iter().enumerate() {
            if !a.indexed || self.tuples.is_empty() {
                continue;
            }
            let entries: Vec<(Rect, u64)> = self
                .tuples
                .iter()
                .enumerate()
                .filter_map(|(id, t)| t[i].bbox().map(|r| (r, id as u64)))
                .collect();
            if let Ok(tree) = RTree::bulk_load(entries, DEFAULT_FANOUT) {
                self.indexes.insert(a.name.clone(), tree);
            }
        }
    }

    pub fn attr_index(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    pub fn attribute(&self, name: &str) -> Option<&AttributeDef> {
        self.attributes.iter().find(|a| a.name == name)
    }

    /// Lexicographically first text attribute; it supplies surface names.
    pub fn name_attr(&self) -> Option<usize> {
        name_attr_of(&self.attributes)
    }

    /// First static geometry attribute in schema order.
    pub fn geometry_attr(&self) -> Option<usize> {
        self.attributes.iter().position(|a| a.kind.is_spatial())
    }

    pub fn mpoint_attr(&self) -> Option<usize> {
        self.attributes.iter().position(|a| a.kind == AttrKind::Mpoint)
    }

    /// First numeric attribute, the default measure for aggregates.
    pub fn measure_attr(&self) -> Option<usize> {
        self.attributes.iter().position(|a| a.kind.is_numeric())
    }

    pub fn index_id(&self, attr: &str) -> String {
        format!("{}_{}_rtree", self.name, attr)
    }

    pub fn tuple_name(&self, tid: usize) -> Option<&str> {
        let i = self.name_attr()?;
        self.tuples.get(tid)?[i].as_text()
    }
}

/// Lexicographically first text attribute of a schema.
pub fn name_attr_of(attrs: &[AttributeDef]) -> Option<usize> {
    attrs
        .iter()
        .enumerate()
        .filter(|(_, a)| a.kind == AttrKind::Text)
        .min_by(|a, b| a.1.name.cmp(&b.1.name))
        .map(|(i, _)| i)
}

/// Spatial and/or temporal extent of one attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeExtent {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rect: Option<Rect>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub period: Option<Period>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationStats {
    pub relation: String,
    pub tuple_count: usize,
    pub extents: BTreeMap<String, AttributeExtent>,
}

fn compute_stats(rel: &Relation) -> RelationStats {
    let mut extents = BTreeMap::new();
    for (i, a) in rel.attributes.iter().enumerate() {
        let mut rect: Option<Rect> = None;
        let mut period: Option<Period> = None;
        let mut add_period = |p: Period| {
            period = Some(match period {
                Some(q) => Period { start: q.start.min(p.start), end: q.end.max(p.end) },
                None => p,
            });
        };
        for t in &rel.tuples {
            match &t[i] {
                Value::Instant(x) => add_period(Period { start: *x, end: nlst_geo::Instant(x.0 + 1) }),
                Value::Period(p) => add_period(*p),
                Value::Mpoint(m) => {
                    for d in m.deftime() {
                        add_period(d);
                    }
                }
                _ => {}
            }
            if let Some(b) = t[i].bbox() {
                rect = Some(rect.map_or(b, |r| r.union(&b)));
            }
        }
        if rect.is_some() || period.is_some() {
            extents.insert(a.name.clone(), AttributeExtent { rect, period });
        }
    }
    RelationStats { relation: rel.name.clone(), tuple_count: rel.tuples.len(), extents }
}

/// Loaded dataset: relations, statistics and the knowledge base.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Database {
    pub name: String,
    pub epoch: String,
    relations: Vec<Relation>,
    stats: BTreeMap<String, RelationStats>,
    kb: Arc<KnowledgeBase>,
}

impl Database {
    /// Assembles a database, adding unit-ordered companions for moving relations.
    pub fn new(name: impl Into<String>, epoch: impl Into<String>, mut relations: Vec<Relation>) -> Self {
        let moving: Vec<usize> = (0..relations.len()).filter(|&i| relations[i].mpoint_attr().is_some()).collect();
        let single = moving.len() == 1;
        for i in moving {
            let companion = unit_ordered(&relations[i], single);
            relations.push(companion);
        }
        let stats = relations.iter().map(|r| (r.name.clone(), compute_stats(r))).collect();
        let mut db = Database { name: name.into(), epoch: epoch.into(), relations, stats, kb: Arc::default() };
        db.kb = Arc::new(build_kb(&db));
        db
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn relation(&self, name: &str) -> Option<&Relation> {
        self.relations.iter().find(|r| r.name == name)
    }

    pub fn kb(&self) -> &KnowledgeBase {
        &self.kb
    }

    pub fn all_stats(&self) -> impl Iterator<Item = &RelationStats> {
        self.relations.iter().filter_map(|r| self.stats.get(&r.name))
    }

    /// Unit-ordered companion of a moving relation.
    pub fn companion_of(&self, relation: &str) -> Option<&Relation> {
        self.relations.iter().find(|r| r.derived_from.as_deref() == Some(relation))
    }

    /// Uniform per-relation sample without replacement (at least `min_rows`
    /// or the whole relation). Indexes are rebuilt over the sample; the
    /// knowledge base is shared with the full database.
    pub fn sampled(&self, fraction: f64, min_rows: usize, seed: u64) -> Database {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let relations = self
            .relations
            .iter()
            .map(|r| {
                let n = r.tuples.len();
                let want = ((n as f64 * fraction).ceil() as usize).max(min_rows).min(n);
                let mut ids = sample(&mut rng, n, want).into_vec();
                ids.sort_unstable();
                let mut s = Relation {
                    name: r.name.clone(),
                    attributes: r.attributes.clone(),
                    tuples: ids.into_iter().map(|i| r.tuples[i].clone()).collect(),
                    indexes: BTreeMap::new(),
                    derived_from: r.derived_from.clone(),
                };
                s.build_indexes();
                s
            })
            .collect::<Vec<_>>();
        let stats = relations.iter().map(|r| (r.name.clone(), compute_stats(r))).collect();
        Database { name: self.name.clone(), epoch: self.epoch.clone(), relations, stats, kb: self.kb.clone() }
    }
}

pub fn relation_stats<'a>(db: &'a Database, relation: &str) -> Result<&'a RelationStats, CatalogError> {
    db.stats.get(relation).ok_or_else(|| CatalogError::UnknownRelation(relation.to_string()))
}

/// Companion attribute name for a moving attribute: `trip` -> `UTrip`.
pub fn unit_attr_name(attr: &str) -> String {
    let mut c = attr.chars();
    match c.next() {
        Some(f) => format!("U{}{}", f.to_ascii_uppercase(), c.as_str()),
        None => "U".into(),
    }
}

/// One tuple per unit of the first moving attribute, sorted by unit start time.
fn unit_ordered(rel: &Relation, sole: bool) -> Relation {
    let mi = rel.mpoint_attr().expect("moving relation");
    let name = if sole { "UTOrdered".to_string() } else { format!("{}_UTOrdered", rel.name) };
    let attributes: Vec<AttributeDef> = rel
        .attributes
        .iter()
        .enumerate()
        .map(|(i, a)| {
            if i == mi {
                AttributeDef::new(unit_attr_name(&a.name), AttrKind::Mpoint)
            } else {
                AttributeDef { indexed: false, ..a.clone() }
            }
        })
        .collect();
    let mut rows: Vec<(i64, usize, usize, Tuple)> = Vec::new();
    for (tid, t) in rel.tuples.iter().enumerate() {
        let Value::Mpoint(m) = &t[mi] else { continue };
        for (ui, u) in m.units().iter().enumerate() {
            let vals: Vec<Value> = t
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    if i == mi {
                        Value::Mpoint(Arc::new(nlst_geo::MovingPoint::new(vec![*u]).expect("single unit")))
                    } else {
                        v.clone()
                    }
                })
                .collect();
            rows.push((u.period.start.0, tid, ui, vals.into()));
        }
    }
    rows.sort_by_key(|r| (r.0, r.1, r.2));
    Relation {
        name,
        attributes,
        tuples: rows.into_iter().map(|r| r.3).collect(),
        indexes: BTreeMap::new(),
        derived_from: Some(rel.name.clone()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nlst_geo::Point;

    fn pt_rel(points: &[(f64, f64)]) -> Relation {
        let attrs = vec![
            AttributeDef::new("name", AttrKind::Text),
            AttributeDef { name: "pos".into(), kind: AttrKind::Point, indexed: true },
        ];
        let tuples = points
            .iter()
            .enumerate()
            .map(|(i, (x, y))| vec![Value::Text(format!("p{i}")), Value::Point(Point::new(*x, *y))].into())
            .collect();
        Relation::new("spots", attrs, tuples).unwrap()
    }

    #[test]
    fn degenerate_extent() {
        let db = Database::new("t", "day0", vec![pt_rel(&[(3.0, 4.0)])]);
        let s = relation_stats(&db, "spots").unwrap();
        assert_eq!(s.tuple_count, 1);
        assert_eq!(s.extents["pos"].rect, Some(Rect::new(3.0, 4.0, 3.0, 4.0).unwrap()));
        assert!(matches!(relation_stats(&db, "nope"), Err(CatalogError::UnknownRelation(_))));
    }

    #[test]
    fn arity_mismatch_names_row() {
        let attrs = vec![AttributeDef::new("a", AttrKind::Int), AttributeDef::new("b", AttrKind::Int)];
        let err = Relation::new("r", attrs, vec![vec![Value::Int(1), Value::Int(2)].into(), vec![Value::Int(1)].into()])
            .unwrap_err();
        assert!(matches!(err, CatalogError::SchemaMismatch { row: 2, .. }), "{err}");
    }

    #[test]
    fn sample_keeps_minimum() {
        let pts: Vec<(f64, f64)> = (0..500).map(|i| (i as f64, 0.0)).collect();
        let db = Database::new("t", "day0", vec![pt_rel(&pts)]);
        let s = db.sampled(0.01, 50, 7);
        assert_eq!(s.relation("spots").unwrap().tuples.len(), 50);
        assert_eq!(s, db.sampled(0.01, 50, 7));
        assert_eq!(db.sampled(0.5, 50, 7).relation("spots").unwrap().tuples.len(), 250);
    }

    #[test]
    fn unit_attr_naming() {
        assert_eq!(unit_attr_name("trip"), "UTrip");
        assert_eq!(unit_attr_name("Trip"), "UTrip");
    }
}
