use nlst_geo::Geometry;

use super::{Expr, Func, JoinPred, PhysicalOp, PhysicalPlan};
use crate::catalog::Database;
use crate::value::{AttrKind, AttributeDef};

/// Static type of a predicate sub-expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExprType {
    Num,
    Bool,
    Text,
    Point,
    Line,
    Region,
    Mpoint,
    Period,
    Periods,
}

impl ExprType {
    fn of_kind(k: AttrKind) -> Self {
        match k {
            AttrKind::Int | AttrKind::Real | AttrKind::Instant => ExprType::Num,
            AttrKind::Text => ExprType::Text,
            AttrKind::Point => ExprType::Point,
            AttrKind::Line => ExprType::Line,
            AttrKind::Region => ExprType::Region,
            AttrKind::Mpoint => ExprType::Mpoint,
            AttrKind::Period => ExprType::Period,
        }
    }

    fn is_geometry(self) -> bool {
        matches!(self, ExprType::Point | ExprType::Line | ExprType::Region)
    }

    fn is_temporal(self) -> bool {
        matches!(self, ExprType::Period | ExprType::Periods)
    }
}

pub(super) fn type_of(e: &Expr, schema: &[AttributeDef]) -> Result<ExprType, String> {
    use ExprType as T;
    Ok(match e {
        Expr::Attr(a) => schema
            .iter()
            .find(|d| &d.name == a)
            .map(|d| T::of_kind(d.kind))
            .ok_or_else(|| format!("unknown attribute '{a}'"))?,
        Expr::Num(_) => T::Num,
        Expr::Str(_) => T::Text,
        Expr::Bool(_) => T::Bool,
        Expr::Geom(g) => match **g {
            Geometry::Point(_) => T::Point,
            Geometry::Line(_) => T::Line,
            Geometry::Region(_) => T::Region,
        },
        Expr::Mpoint(_) => T::Mpoint,
        Expr::Period(_) => T::Period,
        Expr::Call(f, args) => {
            let ts = args.iter().map(|a| type_of(a, schema)).collect::<Result<Vec<_>, _>>()?;
            let bad = || format!("{} does not accept ({})", f.name(), ts.iter().map(|t| format!("{t:?}")).collect::<Vec<_>>().join(", "));
            match (f, ts.as_slice()) {
                (Func::Contains, [T::Region, T::Point]) => T::Bool,
                (Func::Intersects, [a, b]) if a.is_geometry() && b.is_geometry() => T::Bool,
                (Func::Intersects, [a, b]) if a.is_temporal() && b.is_temporal() => T::Bool,
                (Func::Distance, [a, b]) if a.is_geometry() && b.is_geometry() => T::Num,
                (Func::Deftime, [T::Mpoint]) => T::Periods,
                (Func::Atperiods, [T::Mpoint, T::Period]) => T::Mpoint,
                _ => return Err(bad()),
            }
        }
        Expr::Cmp(op, a, b) => {
            let (ta, tb) = (type_of(a, schema)?, type_of(b, schema)?);
            match (ta, tb) {
                (T::Num, T::Num) | (T::Text, T::Text) => T::Bool,
                (T::Bool, T::Bool) if matches!(op, super::CmpOp::Eq | super::CmpOp::Ne) => T::Bool,
                _ => return Err(format!("cannot compare {ta:?} with {tb:?} using {}", op.symbol())),
            }
        }
        Expr::And(a, b) | Expr::Or(a, b) => {
            for x in [a, b] {
                if type_of(x, schema)? != T::Bool {
                    return Err("boolean connective needs boolean operands".into());
                }
            }
            T::Bool
        }
        Expr::Not(a) => {
            if type_of(a, schema)? != T::Bool {
                return Err("'not' needs a boolean operand".into());
            }
            T::Bool
        }
    })
}

fn attr<'a>(schema: &'a [AttributeDef], name: &str, op: &str) -> Result<&'a AttributeDef, String> {
    schema.iter().find(|a| a.name == name).ok_or_else(|| format!("{op}: unknown attribute '{name}'"))
}

/// Name of the right-hand attribute in a join result.
pub(super) fn join_schema(left: &[AttributeDef], right: &[AttributeDef]) -> Vec<AttributeDef> {
    let mut out = left.to_vec();
    for a in right {
        let mut name = a.name.clone();
        while out.iter().any(|b| b.name == name) {
            name.push_str("_r");
        }
        out.push(AttributeDef { name, kind: a.kind, indexed: false });
    }
    out
}

/// Output schema of an operator subtree, validating it against the database.
pub fn output_schema(op: &PhysicalOp, db: &Database) -> Result<Vec<AttributeDef>, String> {
    match op {
        PhysicalOp::Feed { relation } => db
            .relation(relation)
            .map(|r| r.attributes.clone())
            .ok_or_else(|| format!("feed: unknown relation '{relation}'")),
        PhysicalOp::WindowIntersects { relation, attr, .. } => {
            let r = db.relation(relation).ok_or_else(|| format!("windowintersects: unknown relation '{relation}'"))?;
            if !r.indexes.contains_key(attr) {
                return Err(format!("windowintersects: no index {}", super::index_id(relation, attr)));
            }
            Ok(r.attributes.clone())
        }
        PhysicalOp::Filter { input, pred } => {
            let s = output_schema(input, db)?;
            match type_of(pred, &s).map_err(|e| format!("filter: {e}"))? {
                ExprType::Bool => Ok(s),
                t => Err(format!("filter: predicate has type {t:?}, expected Bool")),
            }
        }
        PhysicalOp::Knearest { input, attr: a, k, .. } => {
            let mut s = output_schema(input, db)?;
            let d = attr(&s, a, "knearest")?;
            if !(d.kind == AttrKind::Mpoint || d.kind.is_spatial()) {
                return Err(format!("knearest: attribute '{a}' is {}", d.kind));
            }
            if *k == 0 {
                return Err("knearest: k must be at least 1".into());
            }
            s.push(AttributeDef::new(unique(&s, "Rank"), AttrKind::Int));
            Ok(s)
        }
        PhysicalOp::SpatialJoin { left, right, left_attr, right_attr, pred } => {
            let ls = output_schema(left, db)?;
            let rs = output_schema(right, db)?;
            let la = attr(&ls, left_attr, "spatialjoin")?.kind;
            let ra = attr(&rs, right_attr, "spatialjoin")?.kind;
            let ok = match pred {
                JoinPred::Contains => la == AttrKind::Region && ra == AttrKind::Point,
                JoinPred::Intersects => la.is_spatial() && ra.is_spatial(),
                JoinPred::DistWithin(d) => la.is_spatial() && ra.is_spatial() && *d >= 0.0,
            };
            if !ok {
                return Err(format!("spatialjoin: {pred} not applicable to {la} and {ra}"));
            }
            Ok(join_schema(&ls, &rs))
        }
        PhysicalOp::Similarity { input, attr: a, n, .. } => {
            let mut s = output_schema(input, db)?;
            if attr(&s, a, "similarity")?.kind != AttrKind::Mpoint {
                return Err(format!("similarity: attribute '{a}' is not a moving point"));
            }
            if *n == 0 {
                return Err("similarity: n must be at least 1".into());
            }
            s.push(AttributeDef::new(unique(&s, "Similarity"), AttrKind::Real));
            Ok(s)
        }
        PhysicalOp::Project { input, attrs } => {
            let s = output_schema(input, db)?;
            let mut out = Vec::new();
            for a in attrs {
                if out.iter().any(|d: &AttributeDef| &d.name == a) {
                    return Err(format!("project: duplicate attribute '{a}'"));
                }
                out.push(attr(&s, a, "project")?.clone());
            }
            Ok(out)
        }
        PhysicalOp::Consume { input } => output_schema(input, db),
        PhysicalOp::Count { input } => {
            output_schema(input, db)?;
            Ok(vec![AttributeDef::new("Count", AttrKind::Int)])
        }
        PhysicalOp::Aggregate { input, func, attr: a } => {
            let s = output_schema(input, db)?;
            if !attr(&s, a, "aggregate")?.kind.is_numeric() {
                return Err(format!("aggregate: attribute '{a}' is not numeric"));
            }
            Ok(vec![AttributeDef::new(format!("{}_{a}", func.name()), AttrKind::Real)])
        }
    }
}

fn unique(s: &[AttributeDef], base: &str) -> String {
    let mut name = base.to_string();
    while s.iter().any(|a| a.name == name) {
        name.push('_');
    }
    name
}

/// Validates relations, attributes, indexes and predicate types.
pub fn check_plan(p: &PhysicalPlan, db: &Database) -> Result<Vec<AttributeDef>, String> {
    output_schema(&p.root, db)
}
