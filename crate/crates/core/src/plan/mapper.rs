use std::collections::BTreeMap;

use nlst_geo::Geometry;
use thiserror::Error;

use super::{AggFn, CmpOp, Expr, Func, JoinPred, PhysicalOp, PhysicalPlan};
use crate::catalog::{unit_attr_name, Database, Relation};
use crate::corpus::QueryType;
use crate::nlu::{AggKind, ExtractionResult, SpatialCue};
use crate::value::AttrKind;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MapError {
    #[error("missing slot '{0}'")]
    MissingSlot(String),
    #[error("unsupported query: {0}")]
    UnsupportedType(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mapped {
    pub plan: PhysicalPlan,
    pub warnings: Vec<String>,
}

fn missing(slot: &str) -> MapError {
    MapError::MissingSlot(slot.to_string())
}

fn unsupported(msg: impl Into<String>) -> MapError {
    MapError::UnsupportedType(msg.into())
}

fn relation<'a>(db: &'a Database, name: &str) -> Result<&'a Relation, MapError> {
    db.relation(name).ok_or_else(|| unsupported(format!("unknown relation '{name}'")))
}

fn first_relation<'a>(db: &'a Database, ex: &ExtractionResult) -> Result<&'a Relation, MapError> {
    relation(db, ex.relations.first().ok_or_else(|| missing("relation"))?)
}

fn static_attr(r: &Relation) -> Result<(&str, AttrKind), MapError> {
    let i = r.geometry_attr().ok_or_else(|| unsupported(format!("relation '{}' has no geometry", r.name)))?;
    Ok((&r.attributes[i].name, r.attributes[i].kind))
}

fn location_geometry(db: &Database, ex: &ExtractionResult) -> Result<Geometry, MapError> {
    let id = *ex.locations.first().ok_or_else(|| missing("location"))?;
    db.kb().location(id).map(|l| l.geometry.clone()).ok_or_else(|| missing("location"))
}

/// Containment when one side is a region and the other a point, intersection otherwise.
fn spatial_pred(attr: &str, kind: AttrKind, g: Geometry) -> Expr {
    match (kind, &g) {
        (AttrKind::Point, Geometry::Region(_)) => Expr::call(Func::Contains, vec![Expr::geom(g), Expr::attr(attr)]),
        (AttrKind::Region, Geometry::Point(_)) => Expr::call(Func::Contains, vec![Expr::attr(attr), Expr::geom(g)]),
        _ => Expr::call(Func::Intersects, vec![Expr::attr(attr), Expr::geom(g)]),
    }
}

fn range_pred(attr: &str, g: Geometry, d: f64) -> Expr {
    Expr::cmp(CmpOp::Le, Expr::call(Func::Distance, vec![Expr::attr(attr), Expr::geom(g)]), Expr::Num(d))
}

fn deftime_pred(attr: &str, p: nlst_geo::Period) -> Expr {
    Expr::call(Func::Intersects, vec![Expr::call(Func::Deftime, vec![Expr::attr(attr)]), Expr::Period(p)])
}

fn mpoint_attr(r: &Relation) -> Result<&str, MapError> {
    r.mpoint_attr()
        .map(|i| r.attributes[i].name.as_str())
        .ok_or_else(|| unsupported(format!("relation '{}' has no moving attribute", r.name)))
}

fn plan(root: PhysicalOp) -> PhysicalPlan {
    PhysicalPlan::new(root).expect("mapper builds terminal-rooted plans")
}

fn basic_tree(db: &Database, ex: &ExtractionResult, r: &Relation) -> Result<PhysicalOp, MapError> {
    let (a, kind) = static_attr(r)?;
    let g = location_geometry(db, ex)?;
    Ok(PhysicalOp::feed(&r.name).filter(spatial_pred(a, kind, g)))
}

fn range_tree(db: &Database, ex: &ExtractionResult, r: &Relation) -> Result<PhysicalOp, MapError> {
    let (a, _) = static_attr(r)?;
    let g = location_geometry(db, ex)?;
    let d = ex.distance.ok_or_else(|| missing("distance"))?.meters();
    Ok(PhysicalOp::feed(&r.name).filter(range_pred(a, g, d)))
}

fn time_tree(db: &Database, ex: &ExtractionResult) -> Result<PhysicalOp, MapError> {
    let r = match ex.relations.first() {
        Some(n) => relation(db, n)?,
        None => relation(db, &ex.objects.first().ok_or_else(|| missing("relation"))?.relation)?,
    };
    let m = mpoint_attr(r)?;
    let p = ex.period.ok_or_else(|| missing("period"))?;
    let mut pred = deftime_pred(m, p);
    if let Some(o) = ex.objects.iter().find(|o| o.relation == r.name) {
        let ni = r.name_attr().ok_or_else(|| unsupported("object relation has no name attribute"))?;
        pred = Expr::and(pred, Expr::cmp(CmpOp::Eq, Expr::attr(&r.attributes[ni].name), Expr::Str(o.name.clone())));
    }
    Ok(PhysicalOp::feed(&r.name).filter(pred))
}

/// Builds the baseline (unindexed) plan for a classified extraction.
pub fn map_query(qtype: QueryType, ex: &ExtractionResult, db: &Database) -> Result<Mapped, MapError> {
    let mut warnings = Vec::new();
    let root = match qtype {
        QueryType::BasicSpatial => {
            let r = first_relation(db, ex)?;
            basic_tree(db, ex, r)?.consume()
        }
        QueryType::Range => {
            let r = first_relation(db, ex)?;
            range_tree(db, ex, r)?.consume()
        }
        QueryType::TimeInterval => time_tree(db, ex)?.consume(),
        QueryType::NearestNeighbor => {
            let k = ex.k.unwrap_or_else(|| {
                warnings.push("no k given; using k = 1".to_string());
                1
            });
            if let Some(o) = ex.objects.first() {
                let base = relation(db, &o.relation)?;
                let m = mpoint_attr(base)?;
                let comp = db
                    .companion_of(&base.name)
                    .ok_or_else(|| unsupported(format!("no unit-ordered copy of '{}'", base.name)))?;
                let ua = unit_attr_name(m);
                let mut src = PhysicalOp::feed(&comp.name);
                if let Some(p) = ex.period {
                    src = src.filter(deftime_pred(&ua, p));
                }
                PhysicalOp::Knearest { input: Box::new(src), attr: ua, object: o.name.clone(), k }.consume()
            } else if let Some(&lid) = ex.locations.first() {
                let loc = db.kb().location(lid).ok_or_else(|| missing("object"))?;
                let r = first_relation(db, ex)?;
                let (src, attr) = match r.geometry_attr() {
                    Some(i) => (PhysicalOp::feed(&r.name), r.attributes[i].name.clone()),
                    None => {
                        let m = mpoint_attr(r)?;
                        let comp = db
                            .companion_of(&r.name)
                            .ok_or_else(|| unsupported(format!("no unit-ordered copy of '{}'", r.name)))?;
                        let ua = unit_attr_name(m);
                        let mut src = PhysicalOp::feed(&comp.name);
                        if let Some(p) = ex.period {
                            src = src.filter(deftime_pred(&ua, p));
                        }
                        (src, ua)
                    }
                };
                PhysicalOp::Knearest { input: Box::new(src), attr, object: loc.surface_name.clone(), k }.consume()
            } else {
                return Err(missing("object"));
            }
        }
        QueryType::Join => {
            let a = first_relation(db, ex)?;
            let b = relation(db, ex.relations.get(1).ok_or_else(|| missing("relation2"))?)?;
            let (aa, ak) = static_attr(a)?;
            let (ba, bk) = static_attr(b)?;
            let mut left = (a, aa, ak);
            let mut right = (b, ba, bk);
            let pred = if let Some(d) = ex.distance {
                JoinPred::DistWithin(d.meters())
            } else if ex.spatial_cue == Some(SpatialCue::Contains)
                && matches!((ak, bk), (AttrKind::Region, AttrKind::Point) | (AttrKind::Point, AttrKind::Region))
            {
                if ak == AttrKind::Point {
                    std::mem::swap(&mut left, &mut right);
                }
                JoinPred::Contains
            } else {
                JoinPred::Intersects
            };
            PhysicalOp::SpatialJoin {
                left: Box::new(PhysicalOp::feed(&left.0.name)),
                right: Box::new(PhysicalOp::feed(&right.0.name)),
                left_attr: left.1.to_string(),
                right_attr: right.1.to_string(),
                pred,
            }
            .consume()
        }
        QueryType::Similarity => {
            let o = ex.objects.first().ok_or_else(|| missing("object"))?;
            let r = relation(db, &o.relation)?;
            let m = mpoint_attr(r)?;
            let n = ex.k.unwrap_or(1);
            PhysicalOp::Similarity { input: Box::new(PhysicalOp::feed(&r.name)), attr: m.to_string(), object: o.name.clone(), n }
                .consume()
        }
        QueryType::Aggregation => {
            let agg = ex.agg.ok_or_else(|| unsupported("no aggregate function in the question"))?;
            let r = first_relation(db, ex)?;
            let input = if !ex.locations.is_empty() && ex.distance.is_some() {
                range_tree(db, ex, r)?
            } else if !ex.locations.is_empty() {
                basic_tree(db, ex, r)?
            } else if ex.period.is_some() && r.mpoint_attr().is_some() {
                time_tree(db, ex)?
            } else {
                PhysicalOp::feed(&r.name)
            };
            let func = match agg {
                AggKind::Count => None,
                AggKind::Avg => Some(AggFn::Avg),
                AggKind::Max => Some(AggFn::Max),
                AggKind::Min => Some(AggFn::Min),
            };
            match func {
                None => PhysicalOp::Count { input: Box::new(input) },
                Some(func) => {
                    let attr = match &ex.measure {
                        Some(m) if r.attribute(m).is_some_and(|a| a.kind.is_numeric()) => m.clone(),
                        Some(m) => return Err(unsupported(format!("'{m}' is not a numeric attribute of {}", r.name))),
                        None => r
                            .measure_attr()
                            .map(|i| r.attributes[i].name.clone())
                            .ok_or_else(|| missing("measure"))?,
                    };
                    PhysicalOp::Aggregate { input: Box::new(input), func, attr }
                }
            }
        }
    };
    Ok(Mapped { plan: plan(root), warnings })
}

/// Plan obtained by instantiating the mapping rules directly from bound slots.
pub fn ground_truth_plan(
    qtype: QueryType,
    slots: &BTreeMap<String, String>,
    db: &Database,
) -> Result<PhysicalPlan, MapError> {
    let ex = ExtractionResult::from_slots(slots, db).map_err(|e| MapError::MissingSlot(e))?;
    map_query(qtype, &ex, db).map(|m| m.plan)
}
