//! Result sets as GeoJSON feature collections.

use nlst_core::plan::ResultSet;
use nlst_core::value::Value;
use nlst_geo::{Geometry, Line, MovingPoint, Point, Region};
use serde_json::{json, Map, Value as Json};

fn coord(p: &Point) -> Json {
    json!([p.x, p.y])
}

/// Segments chained into runs wherever one ends where the next starts.
fn line_runs(l: &Line) -> Vec<Vec<Json>> {
    let mut runs: Vec<Vec<Point>> = Vec::new();
    for (a, b) in l.segments() {
        match runs.last_mut() {
            Some(run) if run.last() == Some(a) => run.push(*b),
            _ => runs.push(vec![*a, *b]),
        }
    }
    runs.iter().map(|r| r.iter().map(coord).collect()).collect()
}

fn line_geometry(l: &Line) -> Json {
    let runs = line_runs(l);
    if runs.len() == 1 {
        json!({"type": "LineString", "coordinates": runs[0]})
    } else {
        json!({"type": "MultiLineString", "coordinates": runs})
    }
}

fn region_geometry(r: &Region) -> Json {
    let rings: Vec<Vec<Json>> = r
        .rings()
        .iter()
        .map(|ring| {
            let mut c: Vec<Json> = ring.iter().map(coord).collect();
            if ring.first() != ring.last() {
                if let Some(p) = ring.first() {
                    c.push(coord(p));
                }
            }
            c
        })
        .collect();
    json!({"type": "Polygon", "coordinates": rings})
}

pub fn geometry_json(g: &Geometry) -> Json {
    match g {
        Geometry::Point(p) => json!({"type": "Point", "coordinates": coord(p)}),
        Geometry::Line(l) => line_geometry(l),
        Geometry::Region(r) => region_geometry(r),
    }
}

/// Unit endpoints as one line; vertex `i` is occupied from `t0[i]` to `t1[i]`.
fn trajectory(m: &MovingPoint) -> (Json, Vec<i64>, Vec<i64>) {
    let mut pts: Vec<Point> = Vec::new();
    let (mut t0, mut t1) = (Vec::new(), Vec::new());
    for u in m.units() {
        let (s, e) = (u.period.start.0, u.period.end.0);
        if pts.last() == Some(&u.p0) {
            if let Some(last) = t1.last_mut() {
                *last = s;
            }
        } else {
            pts.push(u.p0);
            t0.push(s);
            t1.push(s);
        }
        pts.push(u.p1);
        t0.push(e);
        t1.push(e);
    }
    if pts.len() == 1 {
        pts.push(pts[0]);
        t0.push(t0[0]);
        t1.push(t1[0]);
    }
    let coords: Vec<Json> = pts.iter().map(coord).collect();
    (json!({"type": "LineString", "coordinates": coords}), t0, t1)
}

/// Plain JSON for a non-spatial value; spatial values as text.
pub fn scalar_json(v: &Value) -> Json {
    match v {
        Value::Int(i) => json!(i),
        Value::Real(r) => json!(r),
        Value::Text(s) => json!(s),
        Value::Instant(t) => json!(t.0),
        other => json!(other.to_string()),
    }
}

fn is_spatial(v: &Value) -> bool {
    matches!(v, Value::Point(_) | Value::Line(_) | Value::Region(_) | Value::Mpoint(_))
}

/// One feature per spatial value per row, carrying the row's other
/// attributes; kNN links become extra ranked line features.
pub fn to_geojson(rs: &ResultSet) -> Json {
    let mut features = Vec::new();
    for (row_no, row) in rs.rows.iter().enumerate() {
        let mut props = Map::new();
        for (a, v) in rs.schema.iter().zip(row.iter()) {
            if !is_spatial(v) {
                props.insert(a.name.clone(), scalar_json(v));
            }
        }
        props.insert("row".into(), json!(row_no));
        for (a, v) in rs.schema.iter().zip(row.iter()) {
            let mut p = props.clone();
            p.insert("attribute".into(), json!(a.name));
            let geometry = match v {
                Value::Point(pt) => geometry_json(&Geometry::Point(*pt)),
                Value::Line(l) => line_geometry(l),
                Value::Region(r) => region_geometry(r),
                Value::Mpoint(m) if !m.units().is_empty() => {
                    let (g, t0, t1) = trajectory(m);
                    p.insert("t0".into(), json!(t0));
                    p.insert("t1".into(), json!(t1));
                    g
                }
                _ => continue,
            };
            features.push(json!({"type": "Feature", "geometry": geometry, "properties": p}));
        }
    }
    for l in rs.knn_links.iter().flatten() {
        features.push(json!({
            "type": "Feature",
            "geometry": {"type": "LineString", "coordinates": [coord(&l.query), coord(&l.neighbor)]},
            "properties": {
                "kind": "knn-link",
                "rank": l.rank,
                "distance": l.distance,
                "t0": l.interval.start.0,
                "t1": l.interval.end.0,
            },
        }));
    }
    json!({"type": "FeatureCollection", "features": features})
}

/// Column names and rows with every value rendered as JSON.
pub fn table(rs: &ResultSet) -> (Vec<String>, Vec<Vec<Json>>) {
    let cols = rs.schema.iter().map(|a| a.name.clone()).collect();
    let rows = rs.rows.iter().map(|r| r.iter().map(scalar_json).collect()).collect();
    (cols, rows)
}
