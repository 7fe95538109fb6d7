use serde::{Deserialize, Serialize};

use crate::error::GeoError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn checked(x: f64, y: f64) -> Result<Self, GeoError> {
        if x.is_finite() && y.is_finite() {
            Ok(Point { x, y })
        } else {
            Err(GeoError::NonFinite)
        }
    }

    pub fn lerp(self, other: Point, f: f64) -> Point {
        Point::new(self.x + f * (other.x - self.x), self.y + f * (other.y - self.y))
    }

    pub fn sub(self, other: Point) -> Point {
        Point::new(self.x - other.x, self.y - other.y)
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn dist2(self, other: Point) -> f64 {
        let d = self.sub(other);
        d.dot(d)
    }
}

/// Minimum bounding rectangle with closed boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl Rect {
    pub fn new(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Result<Self, GeoError> {
        if ![xmin, ymin, xmax, ymax].iter().all(|v| v.is_finite()) {
            return Err(GeoError::NonFinite);
        }
        if xmin > xmax || ymin > ymax {
            return Err(GeoError::InvalidRect);
        }
        Ok(Rect { xmin, ymin, xmax, ymax })
    }

    pub fn of_point(p: Point) -> Self {
        Rect { xmin: p.x, ymin: p.y, xmax: p.x, ymax: p.y }
    }

    /// Bounding box of a non-empty point sequence.
    pub fn of_points<'a>(mut pts: impl Iterator<Item = &'a Point>) -> Option<Self> {
        let first = pts.next()?;
        let mut r = Rect::of_point(*first);
        for p in pts {
            r.expand_point(*p);
        }
        Some(r)
    }

    pub fn expand_point(&mut self, p: Point) {
        self.xmin = self.xmin.min(p.x);
        self.ymin = self.ymin.min(p.y);
        self.xmax = self.xmax.max(p.x);
        self.ymax = self.ymax.max(p.y);
    }

    pub fn union(&self, o: &Rect) -> Rect {
        Rect {
            xmin: self.xmin.min(o.xmin),
            ymin: self.ymin.min(o.ymin),
            xmax: self.xmax.max(o.xmax),
            ymax: self.ymax.max(o.ymax),
        }
    }

    /// Grows the rectangle by `d` on every side.
    pub fn expanded(&self, d: f64) -> Rect {
        Rect {
            xmin: self.xmin - d,
            ymin: self.ymin - d,
            xmax: self.xmax + d,
            ymax: self.ymax + d,
        }
    }

    pub fn intersects(&self, o: &Rect) -> bool {
        self.xmin <= o.xmax && o.xmin <= self.xmax && self.ymin <= o.ymax && o.ymin <= self.ymax
    }

    pub fn contains_rect(&self, o: &Rect) -> bool {
        self.xmin <= o.xmin && self.ymin <= o.ymin && self.xmax >= o.xmax && self.ymax >= o.ymax
    }

    pub fn center(&self) -> Point {
        Point::new((self.xmin + self.xmax) / 2.0, (self.ymin + self.ymax) / 2.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    segments: Vec<(Point, Point)>,
}

impl Line {
    pub fn new(segments: Vec<(Point, Point)>) -> Result<Self, GeoError> {
        if segments.is_empty() {
            return Err(GeoError::InvalidLine("no segments".into()));
        }
        for (a, b) in &segments {
            if !(a.x.is_finite() && a.y.is_finite() && b.x.is_finite() && b.y.is_finite()) {
                return Err(GeoError::NonFinite);
            }
            if a == b {
                return Err(GeoError::InvalidLine("zero-length segment".into()));
            }
        }
        Ok(Line { segments })
    }

    /// Builds a line from a vertex chain; consecutive duplicates are rejected.
    pub fn from_path(vertices: &[Point]) -> Result<Self, GeoError> {
        if vertices.len() < 2 {
            return Err(GeoError::InvalidLine("fewer than two vertices".into()));
        }
        Line::new(vertices.windows(2).map(|w| (w[0], w[1])).collect())
    }

    pub fn segments(&self) -> &[(Point, Point)] {
        &self.segments
    }

    pub fn length(&self) -> f64 {
        self.segments.iter().map(|(a, b)| a.dist2(*b).sqrt()).sum()
    }

    pub fn bbox(&self) -> Rect {
        Rect::of_points(self.segments.iter().flat_map(|(a, b)| [a, b])).expect("non-empty line")
    }

    /// Vertex chain when the segments are connected end to start.
    pub fn as_path(&self) -> Option<Vec<Point>> {
        let mut out = vec![self.segments[0].0];
        for (i, (a, b)) in self.segments.iter().enumerate() {
            if i > 0 && *a != out[out.len() - 1] {
                return None;
            }
            out.push(*b);
        }
        Some(out)
    }
}

/// Polygon with an outer ring followed by hole rings. Rings are stored closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    rings: Vec<Vec<Point>>,
}

impl Region {
    pub fn new(rings: Vec<Vec<Point>>) -> Result<Self, GeoError> {
        if rings.is_empty() {
            return Err(GeoError::InvalidRegion("no rings".into()));
        }
        for ring in &rings {
            if ring.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
                return Err(GeoError::NonFinite);
            }
            if ring.len() < 4 || ring.first() != ring.last() {
                return Err(GeoError::InvalidRegion("ring is not closed".into()));
            }
            let mut distinct: Vec<Point> = Vec::new();
            for p in &ring[..ring.len() - 1] {
                if !distinct.contains(p) {
                    distinct.push(*p);
                }
            }
            if distinct.len() < 3 {
                return Err(GeoError::InvalidRegion("ring has fewer than 3 distinct vertices".into()));
            }
        }
        if ring_self_intersects(&rings[0]) {
            return Err(GeoError::InvalidRegion("outer ring self-intersects".into()));
        }
        Ok(Region { rings })
    }

    /// Closes each ring before validating.
    pub fn from_open_rings(rings: Vec<Vec<Point>>) -> Result<Self, GeoError> {
        let closed = rings
            .into_iter()
            .map(|mut r| {
                if let (Some(f), Some(l)) = (r.first().copied(), r.last().copied()) {
                    if f != l {
                        r.push(f);
                    }
                }
                r
            })
            .collect();
        Region::new(closed)
    }

    pub fn rings(&self) -> &[Vec<Point>] {
        &self.rings
    }

    pub fn outer(&self) -> &[Point] {
        &self.rings[0]
    }

    pub fn holes(&self) -> &[Vec<Point>] {
        &self.rings[1..]
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.rings.iter().flat_map(|r| r.windows(2).map(|w| (w[0], w[1])))
    }

    pub fn bbox(&self) -> Rect {
        Rect::of_points(self.rings[0].iter()).expect("non-empty ring")
    }

    /// Signed-area free area: outer minus holes.
    pub fn area(&self) -> f64 {
        let ring_area = |r: &[Point]| -> f64 {
            r.windows(2).map(|w| w[0].x * w[1].y - w[1].x * w[0].y).sum::<f64>().abs() / 2.0
        };
        ring_area(&self.rings[0]) - self.rings[1..].iter().map(|r| ring_area(r)).sum::<f64>()
    }
}

fn ring_self_intersects(ring: &[Point]) -> bool {
    let n = ring.len() - 1;
    for i in 0..n {
        for j in (i + 1)..n {
            // adjacent edges share an endpoint
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            if crate::predicates::segments_intersect(ring[i], ring[i + 1], ring[j], ring[j + 1]) {
                return true;
            }
        }
    }
    false
}

/// Static spatial value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "lowercase")]
pub enum Geometry {
    Point(Point),
    Line(Line),
    Region(Region),
}

impl Geometry {
    pub fn bbox(&self) -> Rect {
        match self {
            Geometry::Point(p) => Rect::of_point(*p),
            Geometry::Line(l) => l.bbox(),
            Geometry::Region(r) => r.bbox(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Geometry::Point(_) => "point",
            Geometry::Line(_) => "line",
            Geometry::Region(_) => "region",
        }
    }

    /// Point standing in for the geometry where a single location is needed.
    pub fn representative_point(&self) -> Point {
        match self {
            Geometry::Point(p) => *p,
            other => other.bbox().center(),
        }
    }
}
