use std::borrow::Cow;
use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant as Clock;

use nlst_geo::{
    contains, intersects, knearest_sweep, operand_distance, Line, MovingPoint, Operand, Period, Point, Region,
};
use serde::Serialize;
use thiserror::Error;

use super::check::{join_schema, output_schema, type_of};
use super::{AggFn, CmpOp, Expr, Func, JoinPred, PhysicalOp, PhysicalPlan};
use crate::catalog::{name_attr_of, normalize, Database};
use crate::value::{AttrKind, AttributeDef, Tuple, Value};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{op}: {msg}")]
pub struct ExecError {
    pub op: String,
    pub msg: String,
}

fn err(op: &PhysicalOp, msg: impl Into<String>) -> ExecError {
    ExecError { op: op.name().to_string(), msg: msg.into() }
}

/// Line from the query position to a neighbor at the middle of its interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KnnLink {
    pub query: Point,
    pub neighbor: Point,
    pub rank: usize,
    pub distance: f64,
    pub interval: Period,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultSet {
    pub schema: Vec<AttributeDef>,
    pub rows: Vec<Tuple>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub knn_links: Option<Vec<KnnLink>>,
}

struct Ctx<'a> {
    db: &'a Database,
    links: Option<Vec<KnnLink>>,
}

/// Runs a plan; returns the result and the wall time of execution in ms.
pub fn execute(plan: &PhysicalPlan, db: &Database) -> Result<(ResultSet, f64), ExecError> {
    let started = Clock::now();
    let mut ctx = Ctx { db, links: None };
    let (schema, rows) = run(&plan.root, &mut ctx)?;
    let ms = started.elapsed().as_secs_f64() * 1000.0;
    Ok((ResultSet { schema, rows, knn_links: ctx.links }, ms))
}

type Stream = (Vec<AttributeDef>, Vec<Tuple>);

fn run(op: &PhysicalOp, ctx: &mut Ctx<'_>) -> Result<Stream, ExecError> {
    match op {
        PhysicalOp::Feed { relation } => {
            let r = ctx.db.relation(relation).ok_or_else(|| err(op, format!("unknown relation '{relation}'")))?;
            Ok((r.attributes.clone(), r.tuples.clone()))
        }
        PhysicalOp::WindowIntersects { relation, attr, rect } => {
            let r = ctx.db.relation(relation).ok_or_else(|| err(op, format!("unknown relation '{relation}'")))?;
            let idx = r.indexes.get(attr).ok_or_else(|| err(op, format!("no index on '{attr}'")))?;
            let rows = idx.window(rect).into_iter().map(|id| r.tuples[id as usize].clone()).collect();
            Ok((r.attributes.clone(), rows))
        }
        PhysicalOp::Filter { input, pred } => {
            let (schema, rows) = run(input, ctx)?;
            type_of(pred, &schema).map_err(|e| err(op, e))?;
            let mut out = Vec::new();
            for t in rows {
                match eval(pred, &schema, &t).map_err(|e| err(op, e))? {
                    Ev::Bool(true) => out.push(t),
                    Ev::Bool(false) => {}
                    _ => return Err(err(op, "predicate is not boolean")),
                }
            }
            Ok((schema, out))
        }
        PhysicalOp::Knearest { input, attr, object, k } => knearest(op, input, attr, object, *k, ctx),
        PhysicalOp::Similarity { input, attr, object, n } => similarity(op, input, attr, object, *n, ctx),
        PhysicalOp::SpatialJoin { left, right, left_attr, right_attr, pred } => {
            let (ls, lrows) = run(left, ctx)?;
            let (rs, rrows) = run(right, ctx)?;
            let li = col(&ls, left_attr).ok_or_else(|| err(op, format!("unknown attribute '{left_attr}'")))?;
            let ri = col(&rs, right_attr).ok_or_else(|| err(op, format!("unknown attribute '{right_attr}'")))?;
            let schema = join_schema(&ls, &rs);
            let mut out = Vec::new();
            for l in &lrows {
                let a = operand(&l[li]).ok_or_else(|| err(op, "left attribute is not a geometry"))?;
                let abox = l[li].bbox();
                for r in &rrows {
                    let b = operand(&r[ri]).ok_or_else(|| err(op, "right attribute is not a geometry"))?;
                    let hit = match pred {
                        JoinPred::Contains => match (a, b) {
                            (Operand::Region(reg), Operand::Point(p)) => contains(reg, p),
                            _ => return Err(err(op, "contains needs region and point")),
                        },
                        JoinPred::Intersects => {
                            let boxes = abox.zip(r[ri].bbox()).is_none_or(|(x, y)| x.intersects(&y));
                            boxes && intersects(a, b).map_err(|e| err(op, e.to_string()))?
                        }
                        JoinPred::DistWithin(d) => {
                            let boxes = abox.zip(r[ri].bbox()).is_none_or(|(x, y)| x.expanded(*d).intersects(&y));
                            boxes && operand_distance(a, b).map_err(|e| err(op, e.to_string()))? <= *d
                        }
                    };
                    if hit {
                        out.push(l.iter().chain(r.iter()).cloned().collect::<Vec<_>>().into());
                    }
                }
            }
            Ok((schema, out))
        }
        PhysicalOp::Project { input, attrs } => {
            let (schema, rows) = run(input, ctx)?;
            let idx = attrs
                .iter()
                .map(|a| col(&schema, a).ok_or_else(|| err(op, format!("unknown attribute '{a}'"))))
                .collect::<Result<Vec<_>, _>>()?;
            let out_schema = idx.iter().map(|&i| schema[i].clone()).collect();
            let rows = rows.iter().map(|t| idx.iter().map(|&i| t[i].clone()).collect::<Vec<_>>().into()).collect();
            Ok((out_schema, rows))
        }
        PhysicalOp::Consume { input } => run(input, ctx),
        PhysicalOp::Count { input } => {
            let (_, rows) = run(input, ctx)?;
            let schema = output_schema(op, ctx.db).map_err(|e| err(op, e))?;
            Ok((schema, vec![vec![Value::Int(rows.len() as i64)].into()]))
        }
        PhysicalOp::Aggregate { input, func, attr } => {
            let (schema, rows) = run(input, ctx)?;
            let i = col(&schema, attr).ok_or_else(|| err(op, format!("unknown attribute '{attr}'")))?;
            let vals = rows
                .iter()
                .map(|t| t[i].as_f64().ok_or_else(|| err(op, format!("'{attr}' is not numeric"))))
                .collect::<Result<Vec<f64>, _>>()?;
            let out_schema = vec![AttributeDef::new(format!("{}_{attr}", func.name()), AttrKind::Real)];
            let v = match func {
                AggFn::Sum => Some(vals.iter().sum()),
                _ if vals.is_empty() => None,
                AggFn::Avg => Some(vals.iter().sum::<f64>() / vals.len() as f64),
                AggFn::Max => vals.iter().copied().reduce(f64::max),
                AggFn::Min => vals.iter().copied().reduce(f64::min),
            };
            Ok((out_schema, v.map(|v| vec![vec![Value::Real(v)].into()]).unwrap_or_default()))
        }
    }
}

fn col(schema: &[AttributeDef], name: &str) -> Option<usize> {
    schema.iter().position(|a| a.name == name)
}

fn operand(v: &Value) -> Option<Operand<'_>> {
    match v {
        Value::Point(p) => Some(Operand::Point(*p)),
        Value::Line(l) => Some(Operand::Line(l)),
        Value::Region(r) => Some(Operand::Region(r)),
        _ => None,
    }
}

enum Ev<'a> {
    Num(f64),
    Bool(bool),
    Text(&'a str),
    Point(Point),
    Line(&'a Line),
    Region(&'a Region),
    Mpoint(Cow<'a, MovingPoint>),
    Period(Period),
    Periods(Vec<Period>),
}

impl<'a> Ev<'a> {
    fn operand(&'a self) -> Option<Operand<'a>> {
        Some(match self {
            Ev::Point(p) => Operand::Point(*p),
            Ev::Line(l) => Operand::Line(l),
            Ev::Region(r) => Operand::Region(r),
            Ev::Period(p) => Operand::Period(*p),
            Ev::Periods(ps) => Operand::Periods(ps),
            _ => return None,
        })
    }
}

fn value_ev(v: &Value) -> Ev<'_> {
    match v {
        Value::Int(i) => Ev::Num(*i as f64),
        Value::Real(r) => Ev::Num(*r),
        Value::Instant(t) => Ev::Num(t.0 as f64),
        Value::Text(s) => Ev::Text(s),
        Value::Point(p) => Ev::Point(*p),
        Value::Line(l) => Ev::Line(l),
        Value::Region(r) => Ev::Region(r),
        Value::Mpoint(m) => Ev::Mpoint(Cow::Borrowed(m)),
        Value::Period(p) => Ev::Period(*p),
    }
}

/// Evaluates a boolean predicate on one tuple.
pub fn eval_predicate(pred: &Expr, schema: &[AttributeDef], t: &[Value]) -> Result<bool, String> {
    match eval(pred, schema, t)? {
        Ev::Bool(b) => Ok(b),
        _ => Err("predicate is not boolean".into()),
    }
}

fn eval<'a>(e: &'a Expr, schema: &[AttributeDef], t: &'a [Value]) -> Result<Ev<'a>, String> {
    Ok(match e {
        Expr::Attr(a) => value_ev(&t[col(schema, a).ok_or_else(|| format!("unknown attribute '{a}'"))?]),
        Expr::Num(v) => Ev::Num(*v),
        Expr::Str(s) => Ev::Text(s),
        Expr::Bool(b) => Ev::Bool(*b),
        Expr::Geom(g) => match &**g {
            nlst_geo::Geometry::Point(p) => Ev::Point(*p),
            nlst_geo::Geometry::Line(l) => Ev::Line(l),
            nlst_geo::Geometry::Region(r) => Ev::Region(r),
        },
        Expr::Mpoint(m) => Ev::Mpoint(Cow::Borrowed(m)),
        Expr::Period(p) => Ev::Period(*p),
        Expr::Call(f, args) => {
            let vs = args.iter().map(|a| eval(a, schema, t)).collect::<Result<Vec<_>, _>>()?;
            match (f, vs.as_slice()) {
                (Func::Contains, [Ev::Region(r), Ev::Point(p)]) => Ev::Bool(contains(r, *p)),
                (Func::Intersects, [a, b]) => {
                    let (a, b) = a.operand().zip(b.operand()).ok_or("intersects: bad operands")?;
                    Ev::Bool(intersects(a, b).map_err(|e| e.to_string())?)
                }
                (Func::Distance, [a, b]) => {
                    let (a, b) = a.operand().zip(b.operand()).ok_or("distance: bad operands")?;
                    Ev::Num(operand_distance(a, b).map_err(|e| e.to_string())?)
                }
                (Func::Deftime, [Ev::Mpoint(m)]) => Ev::Periods(m.deftime()),
                (Func::Atperiods, [Ev::Mpoint(m), Ev::Period(p)]) => Ev::Mpoint(Cow::Owned(m.atperiods(p))),
                _ => return Err(format!("{} applied to unsupported values", f.name())),
            }
        }
        Expr::Cmp(op, a, b) => {
            let ord = match (eval(a, schema, t)?, eval(b, schema, t)?) {
                (Ev::Num(x), Ev::Num(y)) => x.partial_cmp(&y),
                (Ev::Text(x), Ev::Text(y)) => Some(x.cmp(y)),
                (Ev::Bool(x), Ev::Bool(y)) if matches!(op, CmpOp::Eq | CmpOp::Ne) => Some(x.cmp(&y)),
                _ => return Err(format!("cannot compare with {}", op.symbol())),
            };
            let Some(o) = ord else { return Ok(Ev::Bool(false)) };
            use std::cmp::Ordering::*;
            Ev::Bool(match op {
                CmpOp::Lt => o == Less,
                CmpOp::Le => o != Greater,
                CmpOp::Gt => o == Greater,
                CmpOp::Ge => o != Less,
                CmpOp::Eq => o == Equal,
                CmpOp::Ne => o != Equal,
            })
        }
        Expr::And(a, b) => Ev::Bool(truth(eval(a, schema, t)?)? && truth(eval(b, schema, t)?)?),
        Expr::Or(a, b) => Ev::Bool(truth(eval(a, schema, t)?)? || truth(eval(b, schema, t)?)?),
        Expr::Not(a) => Ev::Bool(!truth(eval(a, schema, t)?)?),
    })
}

fn truth(v: Ev<'_>) -> Result<bool, String> {
    match v {
        Ev::Bool(b) => Ok(b),
        _ => Err("expected a boolean".into()),
    }
}

/// Tuples sharing every value except the moving attribute form one object.
struct Group {
    first_row: usize,
    name: Option<String>,
    track: MovingPoint,
    /// Static geometry position, for non-moving attributes.
    fixed: Option<Point>,
}

fn group_rows(schema: &[AttributeDef], rows: &[Tuple], ai: usize) -> Result<Vec<Group>, String> {
    let ni = name_attr_of(schema);
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut parts: Vec<(usize, Vec<MovingPoint>, Option<Point>)> = Vec::new();
    for (r, t) in rows.iter().enumerate() {
        let key: String = t
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != ai)
            .map(|(_, v)| v.to_string())
            .collect::<Vec<_>>()
            .join("\t");
        let g = *index.entry(key).or_insert_with(|| {
            parts.push((r, Vec::new(), None));
            parts.len() - 1
        });
        match &t[ai] {
            Value::Mpoint(m) => parts[g].1.push((**m).clone()),
            v => {
                let geom = v.to_geometry().ok_or("attribute is neither moving nor spatial")?;
                parts[g].2.get_or_insert(geom.representative_point());
            }
        }
    }
    parts
        .into_iter()
        .map(|(first_row, tracks, fixed)| {
            let track = MovingPoint::merge(tracks).map_err(|e| e.to_string())?;
            let name = ni.and_then(|i| rows[first_row][i].as_text()).map(str::to_string);
            Ok(Group { first_row, name, track, fixed })
        })
        .collect()
}

fn names_match(a: &str, b: &str) -> bool {
    a == b || normalize(a) == normalize(b)
}

enum Query {
    Moving(MovingPoint),
    Fixed(Point),
}

fn hull(ps: &[Period]) -> Option<Period> {
    Some(Period { start: ps.first()?.start, end: ps.last()?.end })
}

/// Periods from `deftime(.attr) intersects P` filters along the unary input chain.
fn window_below(op: &PhysicalOp, attr: &str) -> Option<Period> {
    let mut cur = op;
    let mut win: Option<Period> = None;
    let mut empty = false;
    loop {
        if let PhysicalOp::Filter { pred, .. } = cur {
            for c in pred.conjuncts() {
                if let Some(p) = c.deftime_window(attr) {
                    match win {
                        None => win = Some(p),
                        Some(w) => match w.intersection(&p) {
                            Some(x) => win = Some(x),
                            None => empty = true,
                        },
                    }
                }
            }
        }
        match cur.children().as_slice() {
            [one] => cur = one,
            _ => break,
        }
    }
    if empty {
        // contradictory filters admit no tuple anyway
        return None;
    }
    win
}

fn knearest(
    op: &PhysicalOp,
    input: &PhysicalOp,
    attr: &str,
    object: &str,
    k: usize,
    ctx: &mut Ctx<'_>,
) -> Result<Stream, ExecError> {
    let (schema, rows) = run(input, ctx)?;
    let ai = col(&schema, attr).ok_or_else(|| err(op, format!("unknown attribute '{attr}'")))?;
    let groups = group_rows(&schema, &rows, ai).map_err(|e| err(op, e))?;
    let is_q = |g: &Group| g.name.as_deref().is_some_and(|n| names_match(n, object));
    let query = if groups.iter().any(is_q) {
        let mine: Vec<&Group> = groups.iter().filter(|g| is_q(g)).collect();
        if let Some(p) = mine.iter().find_map(|g| g.fixed) {
            Query::Fixed(p)
        } else {
            let m = MovingPoint::merge(mine.iter().map(|g| g.track.clone())).map_err(|e| err(op, e.to_string()))?;
            Query::Moving(m)
        }
    } else if !ctx.db.kb().objects_named(object).is_empty() {
        // a known object that does not exist during the filtered window
        let mut out_schema = schema.clone();
        out_schema.push(AttributeDef::new(rank_name(&schema), AttrKind::Int));
        ctx.links = Some(Vec::new());
        return Ok((out_schema, Vec::new()));
    } else {
        let loc = ctx
            .db
            .kb()
            .locations_named(object)
            .into_iter()
            .next()
            .ok_or_else(|| err(op, format!("unknown query object '{object}'")))?;
        Query::Fixed(loc.geometry.representative_point())
    };
    let cands: Vec<&Group> = groups.iter().filter(|g| !is_q(g)).collect();
    let filter_window = window_below(input, attr);
    let any_moving = cands.iter().any(|g| g.fixed.is_none());
    let period = match &query {
        Query::Moving(m) => {
            let h = hull(&m.deftime());
            match (h, filter_window) {
                (Some(h), Some(w)) => h.intersection(&w),
                (h, None) => h,
                (None, _) => None,
            }
        }
        Query::Fixed(_) if any_moving => filter_window.or_else(|| {
            let all: Vec<Period> = cands.iter().flat_map(|g| g.track.deftime()).collect();
            let start = all.iter().map(|p| p.start).min()?;
            let end = all.iter().map(|p| p.end).max()?;
            Some(Period { start, end })
        }),
        Query::Fixed(_) => Some(Period::new(0, 1).expect("valid")),
    };
    let mut out_schema = schema.clone();
    out_schema.push(AttributeDef::new(rank_name(&schema), AttrKind::Int));
    let Some(period) = period else {
        ctx.links = Some(Vec::new());
        return Ok((out_schema, Vec::new()));
    };
    let q = match &query {
        Query::Moving(m) => m.clone(),
        Query::Fixed(p) => MovingPoint::stationary(*p, period),
    };
    let tracks: Vec<(u64, MovingPoint)> = cands
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let m = match g.fixed {
                Some(p) => MovingPoint::stationary(p, period),
                None => g.track.clone(),
            };
            (i as u64, m)
        })
        .collect();
    let found = knearest_sweep(&tracks, &q, period, k).map_err(|e| err(op, e.to_string()))?;
    let mut out = Vec::with_capacity(found.len());
    let mut links = Vec::with_capacity(found.len());
    for n in found {
        let g = cands[n.object as usize];
        let base = &rows[g.first_row];
        let mut vals: Vec<Value> = base.to_vec();
        if g.fixed.is_none() {
            vals[ai] = Value::Mpoint(Arc::new(g.track.atperiods(&n.interval)));
        }
        vals.push(Value::Int(n.rank as i64));
        out.push(vals.into());
        let mid = (n.interval.start.0 as f64 + n.interval.end.0 as f64) / 2.0;
        let qp = q.position_at(mid);
        let cp = tracks[n.object as usize].1.position_at(mid);
        if let (Some(qp), Some(cp)) = (qp, cp) {
            links.push(KnnLink {
                query: qp,
                neighbor: cp,
                rank: n.rank,
                distance: nlst_geo::distance(qp, cp),
                interval: n.interval,
            });
        }
    }
    ctx.links = Some(links);
    Ok((out_schema, out))
}

fn rank_name(schema: &[AttributeDef]) -> String {
    let mut name = "Rank".to_string();
    while schema.iter().any(|a| a.name == name) {
        name.push('_');
    }
    name
}

/// 5-point Gauss-Legendre nodes and weights on [-1, 1].
const GL5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_08),
    (0.906_179_845_938_664, 0.236_926_885_056_189_08),
];

/// Time-averaged distance over the common definition time; `None` when disjoint.
pub(crate) fn mean_distance(a: &MovingPoint, b: &MovingPoint) -> Option<f64> {
    let (ua, ub) = (a.units(), b.units());
    let (mut i, mut j) = (0, 0);
    let mut integral = 0.0;
    let mut total = 0.0;
    while i < ua.len() && j < ub.len() {
        if let Some(ov) = ua[i].period.intersection(&ub[j].period) {
            let (s, e) = (ov.start.0 as f64, ov.end.0 as f64);
            let half = (e - s) / 2.0;
            let mid = (s + e) / 2.0;
            let mut acc = 0.0;
            for (x, w) in GL5 {
                let t = mid + half * x;
                acc += w * nlst_geo::distance(ua[i].position_at(t), ub[j].position_at(t));
            }
            integral += acc * half;
            total += e - s;
        }
        if ua[i].period.end <= ub[j].period.end {
            i += 1;
        } else {
            j += 1;
        }
    }
    (total > 0.0).then(|| integral / total)
}

fn similarity(
    op: &PhysicalOp,
    input: &PhysicalOp,
    attr: &str,
    object: &str,
    n: usize,
    ctx: &mut Ctx<'_>,
) -> Result<Stream, ExecError> {
    let (schema, rows) = run(input, ctx)?;
    let ai = col(&schema, attr).ok_or_else(|| err(op, format!("unknown attribute '{attr}'")))?;
    let groups = group_rows(&schema, &rows, ai).map_err(|e| err(op, e))?;
    let is_q = |g: &Group| g.name.as_deref().is_some_and(|nm| names_match(nm, object));
    let mine: Vec<&Group> = groups.iter().filter(|g| is_q(g)).collect();
    if mine.is_empty() {
        return Err(err(op, format!("unknown query object '{object}'")));
    }
    let q = MovingPoint::merge(mine.iter().map(|g| g.track.clone())).map_err(|e| err(op, e.to_string()))?;
    let mut scored: Vec<(f64, usize)> = groups
        .iter()
        .enumerate()
        .filter(|(_, g)| !is_q(g))
        .filter_map(|(i, g)| mean_distance(&q, &g.track).map(|d| (d, i)))
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    scored.truncate(n);
    let mut out_schema = schema.clone();
    let mut name = "Similarity".to_string();
    while schema.iter().any(|a| a.name == name) {
        name.push('_');
    }
    out_schema.push(AttributeDef::new(name, AttrKind::Real));
    let out = scored
        .into_iter()
        .map(|(d, i)| {
            let g = &groups[i];
            let mut vals = rows[g.first_row].to_vec();
            vals[ai] = Value::Mpoint(Arc::new(g.track.clone()));
            vals.push(Value::Real(d));
            vals.into()
        })
        .collect();
    Ok((out_schema, out))
}
