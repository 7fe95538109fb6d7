//! Physical operator trees, their canonical text, type checking and execution.

mod check;
mod exec;
mod mapper;
mod parse;
mod render;

use std::fmt;
use std::sync::Arc;

use nlst_geo::{Geometry, MovingPoint, Period, Rect};
use serde_json::json;

pub use check::{check_plan, output_schema, ExprType};
pub use exec::{eval_predicate, execute, ExecError, KnnLink, ResultSet};
pub use mapper::{ground_truth_plan, map_query, MapError, Mapped};
pub use parse::{parse_plan, PlanSyntaxError};
pub use render::{render_expr, render_plan};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Contains,
    Intersects,
    Distance,
    Deftime,
    Atperiods,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Contains => "contains",
            Func::Intersects => "intersects",
            Func::Distance => "distance",
            Func::Deftime => "deftime",
            Func::Atperiods => "atperiods",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "contains" => Func::Contains,
            "intersects" => Func::Intersects,
            "distance" => Func::Distance,
            "deftime" => Func::Deftime,
            "atperiods" => Func::Atperiods,
            _ => return None,
        })
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Deftime => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "=",
            CmpOp::Ne => "#",
        }
    }
}

/// Filter predicate expression.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Attr(String),
    Num(f64),
    Str(String),
    Bool(bool),
    Geom(Arc<Geometry>),
    Mpoint(Arc<MovingPoint>),
    Period(Period),
    Call(Func, Vec<Expr>),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
}

impl Expr {
    pub fn attr(name: &str) -> Expr {
        Expr::Attr(name.to_string())
    }

    pub fn geom(g: Geometry) -> Expr {
        Expr::Geom(Arc::new(g))
    }

    pub fn call(f: Func, args: Vec<Expr>) -> Expr {
        Expr::Call(f, args)
    }

    pub fn cmp(op: CmpOp, a: Expr, b: Expr) -> Expr {
        Expr::Cmp(op, Box::new(a), Box::new(b))
    }

    pub fn and(a: Expr, b: Expr) -> Expr {
        Expr::And(Box::new(a), Box::new(b))
    }

    /// Top-level conjuncts.
    pub fn conjuncts(&self) -> Vec<&Expr> {
        match self {
            Expr::And(a, b) => {
                let mut v = a.conjuncts();
                v.extend(b.conjuncts());
                v
            }
            e => vec![e],
        }
    }

    /// `deftime(.attr) intersects PERIOD` in either operand order.
    pub fn deftime_window(&self, attr: &str) -> Option<Period> {
        let Expr::Call(Func::Intersects, args) = self else { return None };
        let is_deftime = |e: &Expr| matches!(e, Expr::Call(Func::Deftime, a) if a.first() == Some(&Expr::attr(attr)));
        match (&args[0], &args[1]) {
            (d, Expr::Period(p)) | (Expr::Period(p), d) if is_deftime(d) => Some(*p),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JoinPred {
    Intersects,
    /// Left value contains the right value.
    Contains,
    /// Distance at most the given plane units.
    DistWithin(f64),
}

impl fmt::Display for JoinPred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JoinPred::Intersects => f.write_str("intersects"),
            JoinPred::Contains => f.write_str("contains"),
            JoinPred::DistWithin(d) => write!(f, "dist<={d}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggFn {
    Avg,
    Max,
    Min,
    Sum,
}

impl AggFn {
    pub fn name(self) -> &'static str {
        match self {
            AggFn::Avg => "avg",
            AggFn::Max => "max",
            AggFn::Min => "min",
            AggFn::Sum => "sum",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "avg" => AggFn::Avg,
            "max" => AggFn::Max,
            "min" => AggFn::Min,
            "sum" => AggFn::Sum,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PhysicalOp {
    Feed { relation: String },
    WindowIntersects { relation: String, attr: String, rect: Rect },
    Filter { input: Box<PhysicalOp>, pred: Expr },
    Knearest { input: Box<PhysicalOp>, attr: String, object: String, k: usize },
    SpatialJoin { left: Box<PhysicalOp>, right: Box<PhysicalOp>, left_attr: String, right_attr: String, pred: JoinPred },
    Similarity { input: Box<PhysicalOp>, attr: String, object: String, n: usize },
    Project { input: Box<PhysicalOp>, attrs: Vec<String> },
    Consume { input: Box<PhysicalOp> },
    Count { input: Box<PhysicalOp> },
    Aggregate { input: Box<PhysicalOp>, func: AggFn, attr: String },
}

impl PhysicalOp {
    pub fn feed(relation: &str) -> Self {
        PhysicalOp::Feed { relation: relation.to_string() }
    }

    pub fn filter(self, pred: Expr) -> Self {
        PhysicalOp::Filter { input: Box::new(self), pred }
    }

    pub fn consume(self) -> Self {
        PhysicalOp::Consume { input: Box::new(self) }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PhysicalOp::Feed { .. } => "feed",
            PhysicalOp::WindowIntersects { .. } => "windowintersects",
            PhysicalOp::Filter { .. } => "filter",
            PhysicalOp::Knearest { .. } => "knearest",
            PhysicalOp::SpatialJoin { .. } => "spatialjoin",
            PhysicalOp::Similarity { .. } => "similarity",
            PhysicalOp::Project { .. } => "project",
            PhysicalOp::Consume { .. } => "consume",
            PhysicalOp::Count { .. } => "count",
            PhysicalOp::Aggregate { .. } => "aggregate",
        }
    }

    pub fn children(&self) -> Vec<&PhysicalOp> {
        match self {
            PhysicalOp::Feed { .. } | PhysicalOp::WindowIntersects { .. } => vec![],
            PhysicalOp::SpatialJoin { left, right, .. } => vec![left, right],
            PhysicalOp::Filter { input, .. }
            | PhysicalOp::Knearest { input, .. }
            | PhysicalOp::Similarity { input, .. }
            | PhysicalOp::Project { input, .. }
            | PhysicalOp::Consume { input }
            | PhysicalOp::Count { input }
            | PhysicalOp::Aggregate { input, .. } => vec![input],
        }
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self, PhysicalOp::Consume { .. } | PhysicalOp::Count { .. } | PhysicalOp::Aggregate { .. })
    }

    /// Number of nodes in the subtree.
    pub fn size(&self) -> usize {
        1 + self.children().into_iter().map(PhysicalOp::size).sum::<usize>()
    }

    fn params(&self) -> serde_json::Value {
        match self {
            PhysicalOp::Feed { relation } => json!({ "relation": relation }),
            PhysicalOp::WindowIntersects { relation, attr, rect } => json!({
                "relation": relation,
                "index": index_id(relation, attr),
                "rect": [rect.xmin, rect.ymin, rect.xmax, rect.ymax],
            }),
            PhysicalOp::Filter { pred, .. } => json!({ "predicate": render_expr(pred) }),
            PhysicalOp::Knearest { attr, object, k, .. } => json!({ "attr": attr, "object": object, "k": k }),
            PhysicalOp::SpatialJoin { left_attr, right_attr, pred, .. } => {
                json!({ "left_attr": left_attr, "right_attr": right_attr, "predicate": pred.to_string() })
            }
            PhysicalOp::Similarity { attr, object, n, .. } => json!({ "attr": attr, "object": object, "n": n }),
            PhysicalOp::Project { attrs, .. } => json!({ "attrs": attrs }),
            PhysicalOp::Consume { .. } | PhysicalOp::Count { .. } => json!({}),
            PhysicalOp::Aggregate { func, attr, .. } => json!({ "fn": func.name(), "attr": attr }),
        }
    }

    /// Nested `{op, params, children}` form shown in operator-tree views.
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "op": self.name(),
            "params": self.params(),
            "children": self.children().into_iter().map(PhysicalOp::to_json).collect::<Vec<_>>(),
        })
    }
}

pub fn index_id(relation: &str, attr: &str) -> String {
    format!("{relation}_{attr}_rtree")
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalPlan {
    pub root: PhysicalOp,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("malformed plan: {0}")]
pub struct PlanShapeError(pub String);

impl PhysicalPlan {
    /// Checks the structural invariants: exactly one terminal, at the root.
    pub fn new(root: PhysicalOp) -> Result<Self, PlanShapeError> {
        if !root.is_terminal() {
            return Err(PlanShapeError(format!("root must be consume, count or aggregate, found {}", root.name())));
        }
        fn no_terminal(op: &PhysicalOp) -> Result<(), PlanShapeError> {
            for c in op.children() {
                if c.is_terminal() {
                    return Err(PlanShapeError(format!("{} below the root", c.name())));
                }
                no_terminal(c)?;
            }
            Ok(())
        }
        no_terminal(&root)?;
        Ok(PhysicalPlan { root })
    }

    /// Relations read by the leaves, left to right.
    pub fn source_relations(&self) -> Vec<String> {
        fn walk(op: &PhysicalOp, out: &mut Vec<String>) {
            match op {
                PhysicalOp::Feed { relation } | PhysicalOp::WindowIntersects { relation, .. } => {
                    out.push(relation.clone())
                }
                _ => op.children().into_iter().for_each(|c| walk(c, out)),
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out
    }

    pub fn uses_index(&self) -> bool {
        fn walk(op: &PhysicalOp) -> bool {
            matches!(op, PhysicalOp::WindowIntersects { .. }) || op.children().into_iter().any(walk)
        }
        walk(&self.root)
    }

    pub fn text(&self) -> String {
        render_plan(self)
    }
}

impl fmt::Display for PhysicalPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_plan(self))
    }
}
