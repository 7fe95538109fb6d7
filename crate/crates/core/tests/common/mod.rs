#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use nlst_core::catalog::{load_dataset, Database};
use nlst_core::plan::{AggFn, CmpOp, Expr, Func, JoinPred, PhysicalOp, PhysicalPlan};
use nlst_geo::{Geometry, Line, MovingPoint, Period, Point, Rect, Region, UnitPoint};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn data(name: &str) -> Database {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name);
    load_dataset(dir).unwrap()
}

pub fn model_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models/classifier.json")
}

// Plain-geometry oracles, written without the library predicates.

/// Even-odd ray casting; boundary points count as inside.
pub fn in_rings(p: (f64, f64), rings: &[Vec<(f64, f64)>]) -> bool {
    if rings.iter().any(|r| r.windows(2).any(|w| seg_dist(p, w[0], w[1]) == 0.0)) {
        return true;
    }
    let mut inside = false;
    for r in rings {
        for w in r.windows(2) {
            let ((x1, y1), (x2, y2)) = (w[0], w[1]);
            if (y1 > p.1) != (y2 > p.1) {
                let x = x1 + (p.1 - y1) * (x2 - x1) / (y2 - y1);
                if p.0 < x {
                    inside = !inside;
                }
            }
        }
    }
    inside
}

pub fn seg_dist(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0) };
    let (cx, cy) = (a.0 + t * dx, a.1 + t * dy);
    ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt()
}

pub fn point_region_dist(p: (f64, f64), rings: &[Vec<(f64, f64)>]) -> f64 {
    if in_rings(p, rings) {
        return 0.0;
    }
    rings.iter().flat_map(|r| r.windows(2).map(|w| seg_dist(p, w[0], w[1]))).fold(f64::INFINITY, f64::min)
}

pub fn rings_of(r: &Region) -> Vec<Vec<(f64, f64)>> {
    r.rings().iter().map(|ring| ring.iter().map(|p| (p.x, p.y)).collect()).collect()
}

// Seeded random plans for round-trip checks.

fn ident(rng: &mut ChaCha8Rng, prefix: &str) -> String {
    let n = rng.gen_range(0..1000);
    if rng.gen_bool(0.3) {
        format!("{prefix}_{n}_x")
    } else {
        format!("{prefix}{n}")
    }
}

fn coord(rng: &mut ChaCha8Rng) -> f64 {
    match rng.gen_range(0..4) {
        0 => rng.gen_range(-1000..1000) as f64,
        1 => rng.gen_range(-1e4..1e4),
        2 => (rng.gen_range(-1e5..1e5) * 10.0f64).round() / 10.0,
        _ => rng.gen_range(0.0..1.0),
    }
}

fn point(rng: &mut ChaCha8Rng) -> Point {
    Point { x: coord(rng), y: coord(rng) }
}

fn geometry(rng: &mut ChaCha8Rng) -> Geometry {
    match rng.gen_range(0..3) {
        0 => Geometry::Point(point(rng)),
        1 => {
            let n = rng.gen_range(2..5);
            let mut v: Vec<Point> = Vec::new();
            while v.len() < n {
                let p = point(rng);
                if v.last() != Some(&p) {
                    v.push(p);
                }
            }
            Geometry::Line(Line::from_path(&v).unwrap())
        }
        _ => {
            let (x, y) = (coord(rng), coord(rng));
            let (w, h) = (rng.gen_range(1.0..500.0), rng.gen_range(1.0..500.0));
            let ring = vec![
                Point { x, y },
                Point { x: x + w, y },
                Point { x: x + w, y: y + h },
                Point { x, y: y + h },
                Point { x, y },
            ];
            Geometry::Region(Region::new(vec![ring]).unwrap())
        }
    }
}

fn period(rng: &mut ChaCha8Rng) -> Period {
    let s = rng.gen_range(0..80_000_000i64);
    Period::new(s, s + rng.gen_range(1..10_000_000)).unwrap()
}

fn mpoint(rng: &mut ChaCha8Rng) -> MovingPoint {
    let mut t = rng.gen_range(0..1_000_000i64);
    let units = (0..rng.gen_range(1..4))
        .map(|_| {
            let s = t;
            t += rng.gen_range(1..100_000);
            UnitPoint::new(Period::new(s, t).unwrap(), point(rng), point(rng)).unwrap()
        })
        .collect();
    MovingPoint::new(units).unwrap()
}

fn text(rng: &mut ChaCha8Rng) -> String {
    const PIECES: [&str; 6] = ["train", " 5", "City of London", "quote\"d", "back\\slash", "é"];
    (0..rng.gen_range(1..3)).map(|_| PIECES[rng.gen_range(0..PIECES.len())]).collect()
}

fn expr(rng: &mut ChaCha8Rng, depth: u32) -> Expr {
    let leaf = depth == 0 || rng.gen_bool(0.3);
    if leaf {
        return match rng.gen_range(0..7) {
            0 => Expr::Attr(ident(rng, "a")),
            1 => Expr::Num(coord(rng)),
            2 => Expr::Str(text(rng)),
            3 => Expr::Bool(rng.gen()),
            4 => Expr::Geom(Arc::new(geometry(rng))),
            5 => Expr::Period(period(rng)),
            _ => Expr::Mpoint(Arc::new(mpoint(rng))),
        };
    }
    let d = depth - 1;
    match rng.gen_range(0..5) {
        0 => {
            let f = [Func::Contains, Func::Intersects, Func::Distance, Func::Deftime, Func::Atperiods]
                [rng.gen_range(0..5)];
            Expr::Call(f, (0..f.arity()).map(|_| expr(rng, d)).collect())
        }
        1 => {
            let op = [CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge, CmpOp::Eq, CmpOp::Ne][rng.gen_range(0..6)];
            Expr::cmp(op, expr(rng, d), expr(rng, d))
        }
        2 => Expr::and(expr(rng, d), expr(rng, d)),
        3 => Expr::Or(Box::new(expr(rng, d)), Box::new(expr(rng, d))),
        _ => Expr::Not(Box::new(expr(rng, d))),
    }
}

fn object(rng: &mut ChaCha8Rng) -> String {
    if rng.gen_bool(0.7) {
        ident(rng, "o")
    } else {
        text(rng)
    }
}

fn stream(rng: &mut ChaCha8Rng, depth: u32) -> PhysicalOp {
    let mut op = if depth > 0 && rng.gen_bool(0.2) {
        let pred = match rng.gen_range(0..3) {
            0 => JoinPred::Intersects,
            1 => JoinPred::Contains,
            _ => JoinPred::DistWithin(rng.gen_range(1..5000) as f64 / 4.0),
        };
        PhysicalOp::SpatialJoin {
            left: Box::new(stream(rng, depth - 1)),
            right: Box::new(stream(rng, depth - 1)),
            left_attr: ident(rng, "a"),
            right_attr: ident(rng, "a"),
            pred,
        }
    } else if rng.gen_bool(0.3) {
        let (x, y) = (coord(rng), coord(rng));
        let rect = Rect::new(x, y, x + rng.gen_range(0.0..900.0), y + rng.gen_range(0.0..900.0)).unwrap();
        PhysicalOp::WindowIntersects { relation: ident(rng, "r"), attr: ident(rng, "a"), rect }
    } else {
        PhysicalOp::feed(&ident(rng, "r"))
    };
    for _ in 0..rng.gen_range(0..4) {
        let input = Box::new(op);
        op = match rng.gen_range(0..4) {
            0 => PhysicalOp::Filter { input, pred: expr(rng, 3) },
            1 => PhysicalOp::Knearest { input, attr: ident(rng, "a"), object: object(rng), k: rng.gen_range(1..100) },
            2 => PhysicalOp::Similarity { input, attr: ident(rng, "a"), object: object(rng), n: rng.gen_range(1..20) },
            _ => PhysicalOp::Project { input, attrs: (0..rng.gen_range(1..4)).map(|_| ident(rng, "a")).collect() },
        };
    }
    op
}

pub fn random_plan(rng: &mut ChaCha8Rng) -> PhysicalPlan {
    let input = Box::new(stream(rng, 2));
    let root = match rng.gen_range(0..3) {
        0 => PhysicalOp::Consume { input },
        1 => PhysicalOp::Count { input },
        _ => {
            let func = [AggFn::Avg, AggFn::Max, AggFn::Min, AggFn::Sum][rng.gen_range(0..4)];
            PhysicalOp::Aggregate { input, func, attr: ident(rng, "a") }
        }
    };
    PhysicalPlan::new(root).unwrap()
}
