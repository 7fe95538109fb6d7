//! Filter-rate estimation, indexed candidate plans and sampled-execution cost choice.

use nlst_geo::{Geometry, Rect};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::catalog::{Database, Relation};
use crate::plan::{eval_predicate, execute, CmpOp, Expr, Func, PhysicalOp, PhysicalPlan};

/// Indexed plans are only enumerated at or below this selectivity.
pub const DEFAULT_TAU: f64 = 0.2;
/// Rows drawn when estimating a filter rate.
pub const RATE_SAMPLE: usize = 400;
pub const MIN_SAMPLE_ROWS: usize = 50;
/// Relative cost gap under which an indexed plan is preferred.
pub const TIE_TOLERANCE: f64 = 0.05;
const SAMPLE_RUNS: usize = 3;

/// Fraction of sampled tuples satisfying `pred`; exact when the relation has
/// at most `sample_size` tuples.
pub fn estimate_filter_rate(pred: &Expr, rel: &Relation, sample_size: usize, seed: u64) -> Result<f64, String> {
    let n = rel.tuples.len();
    let m = sample_size.max(1).min(n);
    if m == 0 {
        return Ok(0.0);
    }
    let ids: Vec<usize> = if m == n {
        (0..n).collect()
    } else {
        sample(&mut ChaCha8Rng::seed_from_u64(seed), n, m).into_vec()
    };
    let mut hits = 0usize;
    for i in ids {
        if eval_predicate(pred, &rel.attributes, &rel.tuples[i])? {
            hits += 1;
        }
    }
    Ok(hits as f64 / m as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub baseline: PhysicalPlan,
    pub indexed: Vec<PhysicalPlan>,
}

impl CandidateSet {
    pub fn all(&self) -> impl Iterator<Item = &PhysicalPlan> {
        std::iter::once(&self.baseline).chain(&self.indexed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostEstimate {
    pub plan: String,
    pub uses_index: bool,
    pub sampled_ms: f64,
    pub sample_fraction: f64,
    pub predicted_ms: f64,
    pub chosen: bool,
}

fn literal_geometry(e: &Expr) -> Option<&Geometry> {
    match e {
        Expr::Geom(g) => Some(g.as_ref()),
        _ => None,
    }
}

fn attr_name(e: &Expr) -> Option<&str> {
    match e {
        Expr::Attr(a) => Some(a),
        _ => None,
    }
}

fn number(e: &Expr) -> Option<f64> {
    match e {
        Expr::Num(v) => Some(*v),
        _ => None,
    }
}

/// `(attr, literal)` from a two-argument call in either order.
fn attr_and_geometry(args: &[Expr]) -> Option<(&str, &Geometry)> {
    match args {
        [a, b] => attr_name(a).zip(literal_geometry(b)).or_else(|| attr_name(b).zip(literal_geometry(a))),
        _ => None,
    }
}

/// Attribute and search window implied by one spatial conjunct; `None`
/// when the conjunct cannot be answered from an index.
pub fn index_window(e: &Expr) -> Option<(&str, Rect)> {
    match e {
        Expr::Call(Func::Contains | Func::Intersects, args) => {
            attr_and_geometry(args).map(|(a, g)| (a, g.bbox()))
        }
        Expr::Cmp(op, l, r) => {
            let (call, d) = match op {
                CmpOp::Le | CmpOp::Lt => (l.as_ref(), number(r)?),
                CmpOp::Ge | CmpOp::Gt => (r.as_ref(), number(l)?),
                _ => return None,
            };
            match call {
                Expr::Call(Func::Distance, args) if d >= 0.0 => {
                    let (a, g) = attr_and_geometry(args)?;
                    Some((a, g.bbox().expanded(d)))
                }
                _ => None,
            }
        }
        _ => None,
    }
}

/// Every `filter` directly above a `feed` whose predicate can use an index.
fn indexable<'a>(op: &'a PhysicalOp, db: &Database, out: &mut Vec<(&'a PhysicalOp, String, String, Rect)>) {
    if let PhysicalOp::Filter { input, pred } = op {
        if let PhysicalOp::Feed { relation } = input.as_ref() {
            if let Some(r) = db.relation(relation) {
                for c in pred.conjuncts() {
                    if let Some((a, rect)) = index_window(c) {
                        if r.indexes.contains_key(a) {
                            out.push((op, relation.clone(), a.to_string(), rect));
                        }
                    }
                }
            }
        }
    }
    for c in op.children() {
        indexable(c, db, out);
    }
}

fn replace(op: &PhysicalOp, target: *const PhysicalOp, with: &PhysicalOp) -> PhysicalOp {
    if std::ptr::eq(op, target) {
        return with.clone();
    }
    let sub = |c: &PhysicalOp| Box::new(replace(c, target, with));
    match op {
        PhysicalOp::Feed { .. } | PhysicalOp::WindowIntersects { .. } => op.clone(),
        PhysicalOp::Filter { input, pred } => PhysicalOp::Filter { input: sub(input), pred: pred.clone() },
        PhysicalOp::Knearest { input, attr, object, k } => {
            PhysicalOp::Knearest { input: sub(input), attr: attr.clone(), object: object.clone(), k: *k }
        }
        PhysicalOp::Similarity { input, attr, object, n } => {
            PhysicalOp::Similarity { input: sub(input), attr: attr.clone(), object: object.clone(), n: *n }
        }
        PhysicalOp::SpatialJoin { left, right, left_attr, right_attr, pred } => PhysicalOp::SpatialJoin {
            left: sub(left),
            right: sub(right),
            left_attr: left_attr.clone(),
            right_attr: right_attr.clone(),
            pred: *pred,
        },
        PhysicalOp::Project { input, attrs } => PhysicalOp::Project { input: sub(input), attrs: attrs.clone() },
        PhysicalOp::Consume { input } => PhysicalOp::Consume { input: sub(input) },
        PhysicalOp::Count { input } => PhysicalOp::Count { input: sub(input) },
        PhysicalOp::Aggregate { input, func, attr } => {
            PhysicalOp::Aggregate { input: sub(input), func: *func, attr: attr.clone() }
        }
    }
}

/// The first index-answerable filter predicate and its relation, for
/// selectivity estimation.
pub fn spatial_filter<'a>(plan: &'a PhysicalPlan, db: &'a Database) -> Option<(&'a Expr, &'a Relation)> {
    let mut found = Vec::new();
    indexable(&plan.root, db, &mut found);
    let (op, rel, ..) = found.into_iter().next()?;
    match op {
        PhysicalOp::Filter { pred, .. } => Some((pred, db.relation(&rel)?)),
        _ => None,
    }
}

/// Baseline plus one window-plus-residual-filter variant per applicable
/// index, when the selectivity is at most [`DEFAULT_TAU`].
pub fn enumerate_candidates(baseline: &PhysicalPlan, db: &Database, selectivity: f64) -> CandidateSet {
    enumerate_candidates_with(baseline, db, selectivity, DEFAULT_TAU)
}

pub fn enumerate_candidates_with(baseline: &PhysicalPlan, db: &Database, selectivity: f64, tau: f64) -> CandidateSet {
    let mut indexed = Vec::new();
    if selectivity <= tau {
        let mut found = Vec::new();
        indexable(&baseline.root, db, &mut found);
        for (op, relation, attr, rect) in found {
            let PhysicalOp::Filter { pred, .. } = op else { continue };
            let variant = PhysicalOp::WindowIntersects { relation, attr, rect }.filter(pred.clone());
            let root = replace(&baseline.root, op, &variant);
            if let Ok(p) = PhysicalPlan::new(root) {
                if !indexed.contains(&p) {
                    indexed.push(p);
                }
            }
        }
    }
    CandidateSet { baseline: baseline.clone(), indexed }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

/// Times every candidate on a seeded per-relation sample and picks the
/// lowest extrapolated cost; an indexed plan within [`TIE_TOLERANCE`] of
/// the best wins the tie.
pub fn choose_plan(cands: &CandidateSet, db: &Database, sample_fraction: f64, seed: u64) -> (PhysicalPlan, Vec<CostEstimate>) {
    if cands.indexed.is_empty() {
        return (cands.baseline.clone(), Vec::new());
    }
    let fraction = if sample_fraction > 0.0 && sample_fraction <= 1.0 { sample_fraction } else { 1.0 };
    let sampled = db.sampled(fraction, MIN_SAMPLE_ROWS, seed);
    let plans: Vec<&PhysicalPlan> = cands.all().collect();
    let mut est: Vec<CostEstimate> = plans
        .iter()
        .map(|p| {
            let runs: Vec<f64> =
                (0..SAMPLE_RUNS).map(|_| execute(p, &sampled).map(|(_, ms)| ms).unwrap_or(f64::INFINITY)).collect();
            let sampled_ms = median(runs);
            CostEstimate {
                plan: p.text(),
                uses_index: p.uses_index(),
                sampled_ms,
                sample_fraction: fraction,
                predicted_ms: sampled_ms / fraction,
                chosen: false,
            }
        })
        .collect();
    let best = (0..est.len()).min_by(|&a, &b| est[a].predicted_ms.total_cmp(&est[b].predicted_ms)).unwrap_or(0);
    let mut pick = best;
    if !est[best].uses_index {
        let limit = est[best].predicted_ms * (1.0 + TIE_TOLERANCE);
        if let Some(i) = (0..est.len())
            .filter(|&i| est[i].uses_index && est[i].predicted_ms <= limit)
            .min_by(|&a, &b| est[a].predicted_ms.total_cmp(&est[b].predicted_ms))
        {
            pick = i;
        }
    }
    est[pick].chosen = true;
    (plans[pick].clone(), est)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizerReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selectivity: Option<f64>,
    pub candidates: Vec<CostEstimate>,
}

/// Estimate, enumerate and choose in one step.
pub fn optimize(baseline: &PhysicalPlan, db: &Database, sample_fraction: f64, seed: u64) -> (PhysicalPlan, OptimizerReport) {
    let selectivity = spatial_filter(baseline, db).and_then(|(pred, rel)| estimate_filter_rate(pred, rel, RATE_SAMPLE, seed).ok());
    let cands = enumerate_candidates(baseline, db, selectivity.unwrap_or(1.0));
    let (plan, candidates) = choose_plan(&cands, db, sample_fraction, seed);
    (plan, OptimizerReport { selectivity, candidates })
}
