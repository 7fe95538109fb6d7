//! Text encodings: a WKT subset for static geometries, `MPOINT ((t0 t1 x0 y0 x1 y1), ...)`
//! for moving points and `[start, end)` for periods.

use std::fmt::Write as _;

use crate::error::GeoError;
use crate::geometry::{Geometry, Line, Point, Region};
use crate::temporal::{MovingPoint, Period, UnitPoint};

/// Value recognised by [`Scanner::value`].
#[derive(Debug, Clone, PartialEq)]
pub enum TextValue {
    Geometry(Geometry),
    MovingPoint(MovingPoint),
}

pub fn format_point(p: &Point) -> String {
    format!("POINT ({} {})", p.x, p.y)
}

fn write_coords(out: &mut String, pts: &[Point]) {
    for (i, p) in pts.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "{} {}", p.x, p.y);
    }
}

pub fn format_line(l: &Line) -> String {
    let mut out = String::new();
    match l.as_path() {
        Some(path) => {
            out.push_str("LINESTRING (");
            write_coords(&mut out, &path);
            out.push(')');
        }
        None => {
            out.push_str("MULTILINESTRING (");
            for (i, (a, b)) in l.segments().iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push('(');
                write_coords(&mut out, &[*a, *b]);
                out.push(')');
            }
            out.push(')');
        }
    }
    out
}

pub fn format_region(r: &Region) -> String {
    let mut out = String::from("POLYGON (");
    for (i, ring) in r.rings().iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push('(');
        write_coords(&mut out, ring);
        out.push(')');
    }
    out.push(')');
    out
}

pub fn format_geometry(g: &Geometry) -> String {
    match g {
        Geometry::Point(p) => format_point(p),
        Geometry::Line(l) => format_line(l),
        Geometry::Region(r) => format_region(r),
    }
}

pub fn format_mpoint(m: &MovingPoint) -> String {
    let mut out = String::from("MPOINT (");
    for (i, u) in m.units().iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let _ = write!(
            out,
            "({} {} {} {} {} {})",
            u.period.start.0, u.period.end.0, u.p0.x, u.p0.y, u.p1.x, u.p1.y
        );
    }
    out.push(')');
    out
}

pub fn format_period(p: &Period) -> String {
    format!("[{}, {})", p.start.0, p.end.0)
}

fn whole<T>(input: &str, f: impl FnOnce(&mut Scanner<'_>) -> Result<T, GeoError>) -> Result<T, GeoError> {
    let mut s = Scanner::new(input);
    let v = f(&mut s)?;
    s.skip_ws();
    if !s.at_end() {
        return Err(s.err("trailing characters"));
    }
    Ok(v)
}

pub fn parse_geometry(input: &str) -> Result<Geometry, GeoError> {
    whole(input, |s| match s.value()? {
        TextValue::Geometry(g) => Ok(g),
        TextValue::MovingPoint(_) => Err(s.err("expected a static geometry")),
    })
}

pub fn parse_mpoint(input: &str) -> Result<MovingPoint, GeoError> {
    whole(input, |s| match s.value()? {
        TextValue::MovingPoint(m) => Ok(m),
        TextValue::Geometry(_) => Err(s.err("expected MPOINT")),
    })
}

pub fn parse_period(input: &str) -> Result<Period, GeoError> {
    whole(input, |s| s.period())
}

/// Byte cursor over encoded values; shared with the plan-text parser.
pub struct Scanner<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Scanner<'a> {
    pub fn new(src: &'a str) -> Self {
        Scanner { src, pos: 0 }
    }

    pub fn at(src: &'a str, pos: usize) -> Self {
        Scanner { src, pos }
    }

    pub fn pos(&self) -> usize {
        self.pos
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    pub fn err(&self, msg: &str) -> GeoError {
        GeoError::Parse { pos: self.pos, msg: msg.to_string() }
    }

    pub fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    pub fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    pub fn expect(&mut self, c: char) -> Result<(), GeoError> {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            Err(self.err(&format!("expected '{c}'")))
        }
    }

    fn keyword(&mut self) -> &'a str {
        self.skip_ws();
        let start = self.pos;
        let rest = &self.src[start..];
        let len = rest.find(|c: char| !c.is_ascii_alphabetic()).unwrap_or(rest.len());
        self.pos += len;
        &self.src[start..start + len]
    }

    pub fn number(&mut self) -> Result<f64, GeoError> {
        self.skip_ws();
        let start = self.pos;
        let rest = &self.src[start..];
        let len = rest
            .find(|c: char| !(c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E')))
            .unwrap_or(rest.len());
        let v: f64 = rest[..len].parse().map_err(|_| self.err("expected a number"))?;
        if !v.is_finite() {
            return Err(self.err("non-finite number"));
        }
        self.pos += len;
        Ok(v)
    }

    pub fn integer(&mut self) -> Result<i64, GeoError> {
        self.skip_ws();
        let start = self.pos;
        let rest = &self.src[start..];
        let len = rest
            .char_indices()
            .find(|&(i, c)| !(c.is_ascii_digit() || (i == 0 && c == '-')))
            .map(|(i, _)| i)
            .unwrap_or(rest.len());
        let v: i64 = rest[..len].parse().map_err(|_| self.err("expected an integer"))?;
        self.pos += len;
        Ok(v)
    }

    fn coord(&mut self) -> Result<Point, GeoError> {
        let x = self.number()?;
        let y = self.number()?;
        Ok(Point::new(x, y))
    }

    fn coord_list(&mut self) -> Result<Vec<Point>, GeoError> {
        self.expect('(')?;
        let mut pts = vec![self.coord()?];
        while self.peek() == Some(',') {
            self.pos += 1;
            pts.push(self.coord()?);
        }
        self.expect(')')?;
        Ok(pts)
    }

    fn list_of_coord_lists(&mut self) -> Result<Vec<Vec<Point>>, GeoError> {
        self.expect('(')?;
        let mut out = vec![self.coord_list()?];
        while self.peek() == Some(',') {
            self.pos += 1;
            out.push(self.coord_list()?);
        }
        self.expect(')')?;
        Ok(out)
    }

    pub fn period(&mut self) -> Result<Period, GeoError> {
        let start_pos = self.pos;
        self.expect('[')?;
        let s = self.integer()?;
        self.expect(',')?;
        let e = self.integer()?;
        self.expect(')')?;
        Period::new(s, e).map_err(|e| GeoError::Parse { pos: start_pos, msg: e.to_string() })
    }

    /// Parses one geometry or moving point starting at the cursor.
    pub fn value(&mut self) -> Result<TextValue, GeoError> {
        let start = {
            self.skip_ws();
            self.pos
        };
        let wrap = |e: GeoError| match e {
            GeoError::Parse { .. } => e,
            other => GeoError::Parse { pos: start, msg: other.to_string() },
        };
        let kw = self.keyword().to_ascii_uppercase();
        match kw.as_str() {
            "POINT" => {
                self.expect('(')?;
                let p = self.coord()?;
                self.expect(')')?;
                Ok(TextValue::Geometry(Geometry::Point(p)))
            }
            "LINESTRING" => {
                let pts = self.coord_list()?;
                Line::from_path(&pts).map(|l| TextValue::Geometry(Geometry::Line(l))).map_err(wrap)
            }
            "MULTILINESTRING" => {
                let parts = self.list_of_coord_lists()?;
                let mut segs = Vec::new();
                for part in parts {
                    if part.len() < 2 {
                        return Err(GeoError::Parse { pos: start, msg: "linestring needs two vertices".into() });
                    }
                    segs.extend(part.windows(2).map(|w| (w[0], w[1])));
                }
                Line::new(segs).map(|l| TextValue::Geometry(Geometry::Line(l))).map_err(wrap)
            }
            "POLYGON" => {
                let rings = self.list_of_coord_lists()?;
                Region::new(rings).map(|r| TextValue::Geometry(Geometry::Region(r))).map_err(wrap)
            }
            "MPOINT" => {
                self.expect('(')?;
                let mut units = Vec::new();
                if self.peek() != Some(')') {
                    loop {
                        self.expect('(')?;
                        let t0 = self.integer()?;
                        let t1 = self.integer()?;
                        let p0 = self.coord()?;
                        let p1 = self.coord()?;
                        self.expect(')')?;
                        let period = Period::new(t0, t1).map_err(wrap)?;
                        units.push(UnitPoint::new(period, p0, p1).map_err(wrap)?);
                        if self.peek() == Some(',') {
                            self.pos += 1;
                        } else {
                            break;
                        }
                    }
                }
                self.expect(')')?;
                MovingPoint::new(units).map(TextValue::MovingPoint).map_err(wrap)
            }
            _ => Err(GeoError::Parse { pos: start, msg: format!("unknown geometry keyword '{kw}'") }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_format() {
        assert_eq!(format_point(&Point::new(1.0, 2.0)), "POINT (1 2)");
        assert_eq!(format_point(&Point::new(0.5, -3.25)), "POINT (0.5 -3.25)");
    }

    #[test]
    fn parse_each_kind() {
        let g = parse_geometry("POINT (1 2)").unwrap();
        assert_eq!(g, Geometry::Point(Point::new(1.0, 2.0)));
        let l = parse_geometry("LINESTRING (0 0, 1 1, 2 0)").unwrap();
        assert_eq!(format_geometry(&l), "LINESTRING (0 0, 1 1, 2 0)");
        let r = parse_geometry("POLYGON ((0 0, 4 0, 4 4, 0 4, 0 0), (1 1, 2 1, 2 2, 1 2, 1 1))").unwrap();
        assert_eq!(format_geometry(&r), "POLYGON ((0 0, 4 0, 4 4, 0 4, 0 0), (1 1, 2 1, 2 2, 1 2, 1 1))");
        let m = parse_mpoint("MPOINT ((0 1000 0 0 10 0), (1000 2000 10 0 10 5))").unwrap();
        assert_eq!(m.units().len(), 2);
        assert_eq!(format_mpoint(&m), "MPOINT ((0 1000 0 0 10 0), (1000 2000 10 0 10 5))");
        assert!(parse_mpoint("MPOINT ()").unwrap().is_empty());
        assert_eq!(parse_period("[21600000, 39600000)").unwrap(), Period::new(21600000, 39600000).unwrap());
    }

    #[test]
    fn parse_errors() {
        assert!(parse_geometry("POINT (1)").is_err());
        assert!(parse_geometry("CIRCLE (1 2)").is_err());
        assert!(parse_geometry("POLYGON ((0 0, 1 0, 0 0))").is_err());
        assert!(parse_geometry("POINT (1 2) x").is_err());
        assert!(parse_mpoint("MPOINT ((10 5 0 0 1 1))").is_err());
        assert!(parse_period("[5, 5)").is_err());
    }

    #[test]
    fn disconnected_line_uses_multilinestring() {
        let l = Line::new(vec![
            (Point::new(0.0, 0.0), Point::new(1.0, 0.0)),
            (Point::new(5.0, 5.0), Point::new(6.0, 5.0)),
        ])
        .unwrap();
        let txt = format_line(&l);
        assert_eq!(txt, "MULTILINESTRING ((0 0, 1 0), (5 5, 6 5))");
        assert_eq!(parse_geometry(&txt).unwrap(), Geometry::Line(l));
    }
}
