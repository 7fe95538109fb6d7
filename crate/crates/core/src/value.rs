use std::fmt;
use std::sync::Arc;

use nlst_geo::text::{format_line, format_mpoint, format_period, format_point, format_region};
use nlst_geo::{Geometry, Instant, Line, MovingPoint, Period, Point, Region};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttrKind {
    Int,
    Real,
    Text,
    Point,
    Line,
    Region,
    Mpoint,
    Instant,
    Period,
}

impl AttrKind {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "int" => AttrKind::Int,
            "real" => AttrKind::Real,
            "text" => AttrKind::Text,
            "point" => AttrKind::Point,
            "line" => AttrKind::Line,
            "region" => AttrKind::Region,
            "mpoint" => AttrKind::Mpoint,
            "instant" => AttrKind::Instant,
            "period" => AttrKind::Period,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            AttrKind::Int => "int",
            AttrKind::Real => "real",
            AttrKind::Text => "text",
            AttrKind::Point => "point",
            AttrKind::Line => "line",
            AttrKind::Region => "region",
            AttrKind::Mpoint => "mpoint",
            AttrKind::Instant => "instant",
            AttrKind::Period => "period",
        }
    }

    /// Static geometry kinds that an R-tree can index.
    pub fn is_spatial(self) -> bool {
        matches!(self, AttrKind::Point | AttrKind::Line | AttrKind::Region)
    }

    pub fn is_numeric(self) -> bool {
        matches!(self, AttrKind::Int | AttrKind::Real)
    }
}

impl fmt::Display for AttrKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AttributeDef {
    pub name: String,
    pub kind: AttrKind,
    #[serde(default)]
    pub indexed: bool,
}

impl AttributeDef {
    pub fn new(name: impl Into<String>, kind: AttrKind) -> Self {
        AttributeDef { name: name.into(), kind, indexed: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum Value {
    Int(i64),
    Real(f64),
    Text(String),
    Point(Point),
    Line(Arc<Line>),
    Region(Arc<Region>),
    Mpoint(Arc<MovingPoint>),
    Instant(Instant),
    Period(Period),
}

pub type Tuple = Arc<[Value]>;

impl Value {
    pub fn kind(&self) -> AttrKind {
        match self {
            Value::Int(_) => AttrKind::Int,
            Value::Real(_) => AttrKind::Real,
            Value::Text(_) => AttrKind::Text,
            Value::Point(_) => AttrKind::Point,
            Value::Line(_) => AttrKind::Line,
            Value::Region(_) => AttrKind::Region,
            Value::Mpoint(_) => AttrKind::Mpoint,
            Value::Instant(_) => AttrKind::Instant,
            Value::Period(_) => AttrKind::Period,
        }
    }

    pub fn from_geometry(g: Geometry) -> Self {
        match g {
            Geometry::Point(p) => Value::Point(p),
            Geometry::Line(l) => Value::Line(Arc::new(l)),
            Geometry::Region(r) => Value::Region(Arc::new(r)),
        }
    }

    pub fn to_geometry(&self) -> Option<Geometry> {
        Some(match self {
            Value::Point(p) => Geometry::Point(*p),
            Value::Line(l) => Geometry::Line((**l).clone()),
            Value::Region(r) => Geometry::Region((**r).clone()),
            _ => return None,
        })
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Real(r) => Some(*r),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Value::Text(s) => Some(s),
            _ => None,
        }
    }

    /// Bounding box of spatial values (moving points use their trajectory box).
    pub fn bbox(&self) -> Option<nlst_geo::Rect> {
        match self {
            Value::Point(p) => Some(nlst_geo::Rect::of_point(*p)),
            Value::Line(l) => Some(l.bbox()),
            Value::Region(r) => Some(r.bbox()),
            Value::Mpoint(m) => m.bbox(),
            _ => None,
        }
    }
}

/// Cell text as stored in relation files.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Real(r) => write!(f, "{r}"),
            Value::Text(s) => f.write_str(s),
            Value::Point(p) => f.write_str(&format_point(p)),
            Value::Line(l) => f.write_str(&format_line(l)),
            Value::Region(r) => f.write_str(&format_region(r)),
            Value::Mpoint(m) => f.write_str(&format_mpoint(m)),
            Value::Instant(t) => write!(f, "{}", t.0),
            Value::Period(p) => f.write_str(&format_period(p)),
        }
    }
}
