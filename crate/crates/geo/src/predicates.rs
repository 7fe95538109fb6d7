//! Spatial and temporal predicates over the value types.

use crate::error::GeoError;
use crate::geometry::{Geometry, Line, Point, Region};
use crate::temporal::Period;

const ON_SEGMENT_EPS: f64 = 1e-9;

/// Borrowed argument for [`intersects`].
#[derive(Debug, Clone, Copy)]
pub enum Operand<'a> {
    Point(Point),
    Line(&'a Line),
    Region(&'a Region),
    Period(Period),
    /// A definition time, i.e. a sorted list of disjoint periods.
    Periods(&'a [Period]),
}

impl<'a> Operand<'a> {
    pub fn geometry(g: &'a Geometry) -> Self {
        match g {
            Geometry::Point(p) => Operand::Point(*p),
            Geometry::Line(l) => Operand::Line(l),
            Geometry::Region(r) => Operand::Region(r),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Operand::Point(_) => "point",
            Operand::Line(_) => "line",
            Operand::Region(_) => "region",
            Operand::Period(_) => "period",
            Operand::Periods(_) => "periods",
        }
    }
}

pub fn distance(a: Point, b: Point) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn on_segment(p: Point, a: Point, b: Point) -> bool {
    let len = distance(a, b);
    if orient(a, b, p).abs() > ON_SEGMENT_EPS * len.max(1.0) {
        return false;
    }
    p.x >= a.x.min(b.x) - ON_SEGMENT_EPS
        && p.x <= a.x.max(b.x) + ON_SEGMENT_EPS
        && p.y >= a.y.min(b.y) - ON_SEGMENT_EPS
        && p.y <= a.y.max(b.y) + ON_SEGMENT_EPS
}

/// Closed segment intersection, collinear overlaps included.
pub fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    on_segment(p1, q1, q2) || on_segment(p2, q1, q2) || on_segment(q1, p1, p2) || on_segment(q2, p1, p2)
}

pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b.sub(a);
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return distance(p, a);
    }
    let t = (p.sub(a).dot(ab) / len2).clamp(0.0, 1.0);
    distance(p, a.lerp(b, t))
}

fn segment_segment_distance(p1: Point, p2: Point, q1: Point, q2: Point) -> f64 {
    if segments_intersect(p1, p2, q1, q2) {
        return 0.0;
    }
    point_segment_distance(p1, q1, q2)
        .min(point_segment_distance(p2, q1, q2))
        .min(point_segment_distance(q1, p1, p2))
        .min(point_segment_distance(q2, p1, p2))
}

fn ring_crossings(ring: &[Point], p: Point) -> bool {
    let mut inside = false;
    for w in ring.windows(2) {
        let (a, b) = (w[0], w[1]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn on_boundary(r: &Region, p: Point) -> bool {
    r.edges().any(|(a, b)| on_segment(p, a, b))
}

/// Point-in-region test; boundary points (outer ring or holes) count as inside.
pub fn contains(r: &Region, p: Point) -> bool {
    if on_boundary(r, p) {
        return true;
    }
    ring_crossings(r.outer(), p) && !r.holes().iter().any(|h| ring_crossings(h, p))
}

fn line_region_intersects(l: &Line, r: &Region) -> bool {
    l.segments()
        .iter()
        .any(|(a, b)| contains(r, *a) || contains(r, *b) || r.edges().any(|(c, d)| segments_intersect(*a, *b, c, d)))
}

fn region_region_intersects(a: &Region, b: &Region) -> bool {
    if !a.bbox().intersects(&b.bbox()) {
        return false;
    }
    a.edges().any(|(p, q)| b.edges().any(|(r, s)| segments_intersect(p, q, r, s)))
        || contains(b, a.outer()[0])
        || contains(a, b.outer()[0])
}

fn line_line_intersects(a: &Line, b: &Line) -> bool {
    a.segments().iter().any(|(p, q)| b.segments().iter().any(|(r, s)| segments_intersect(*p, *q, *r, *s)))
}

fn periods_intersect(ps: &[Period], p: &Period) -> bool {
    ps.iter().any(|q| q.intersects(p))
}

/// True when both values share at least one point or instant.
pub fn intersects(a: Operand<'_>, b: Operand<'_>) -> Result<bool, GeoError> {
    use Operand::*;
    Ok(match (a, b) {
        (Period(x), Period(y)) => x.intersects(&y),
        (Periods(xs), Period(y)) | (Period(y), Periods(xs)) => periods_intersect(xs, &y),
        (Periods(xs), Periods(ys)) => ys.iter().any(|y| periods_intersect(xs, y)),
        (Region(r), Point(p)) | (Point(p), Region(r)) => contains(r, p),
        (Region(x), Region(y)) => region_region_intersects(x, y),
        (Line(l), Region(r)) | (Region(r), Line(l)) => line_region_intersects(l, r),
        (Line(x), Line(y)) => line_line_intersects(x, y),
        (Line(l), Point(p)) | (Point(p), Line(l)) => l.segments().iter().any(|(a, b)| on_segment(p, *a, *b)),
        (Point(x), Point(y)) => x == y,
        (x, y) => return Err(GeoError::IncompatibleOperands(x.name(), y.name())),
    })
}

/// Minimum Euclidean distance between two geometries; zero when they intersect.
pub fn geometry_distance(a: &Geometry, b: &Geometry) -> f64 {
    operand_distance(Operand::geometry(a), Operand::geometry(b)).expect("geometry operands")
}

/// [`geometry_distance`] over borrowed operands; periods are rejected.
pub fn operand_distance(a: Operand<'_>, b: Operand<'_>) -> Result<f64, GeoError> {
    use Operand::*;
    Ok(match (a, b) {
        (Point(p), Point(q)) => distance(p, q),
        (Point(p), Line(l)) | (Line(l), Point(p)) => {
            l.segments().iter().map(|(s, e)| point_segment_distance(p, *s, *e)).fold(f64::INFINITY, f64::min)
        }
        (Point(p), Region(r)) | (Region(r), Point(p)) => {
            if contains(r, p) {
                0.0
            } else {
                r.edges().map(|(s, e)| point_segment_distance(p, s, e)).fold(f64::INFINITY, f64::min)
            }
        }
        (Line(x), Line(y)) => x
            .segments()
            .iter()
            .flat_map(|(p, q)| y.segments().iter().map(move |(r, s)| segment_segment_distance(*p, *q, *r, *s)))
            .fold(f64::INFINITY, f64::min),
        (Line(l), Region(r)) | (Region(r), Line(l)) => {
            if line_region_intersects(l, r) {
                0.0
            } else {
                l.segments()
                    .iter()
                    .flat_map(|(p, q)| r.edges().map(move |(s, e)| segment_segment_distance(*p, *q, s, e)))
                    .fold(f64::INFINITY, f64::min)
            }
        }
        (Region(x), Region(y)) => {
            if region_region_intersects(x, y) {
                0.0
            } else {
                x.edges()
                    .flat_map(|(p, q)| y.edges().map(move |(s, e)| segment_segment_distance(p, q, s, e)))
                    .fold(f64::INFINITY, f64::min)
            }
        }
        (x, y) => return Err(GeoError::IncompatibleOperands(x.name(), y.name())),
    })
}
