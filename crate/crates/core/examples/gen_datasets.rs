//! Regenerates the bundled `minicity` and `minicity-london` datasets.
//!
//! cargo run -p nlst-core --example gen_datasets -- data

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nlst_geo::text::{format_line, format_mpoint, format_point, format_region};
use nlst_geo::{Line, MovingPoint, Period, Point, Region, UnitPoint};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

const SIZE: f64 = 10_000.0;
const MIN: i64 = 60_000;

const DISTRICTS: [&str; 12] = [
    "City of London", "Camden", "Westminster", "Hackney", "Islington", "Southwark", "Lambeth", "Greenwich",
    "Lewisham", "Brent", "Ealing", "Hounslow",
];
const COLLEGES: [&str; 6] =
    ["Imperial College", "Birkbeck College", "Queen Mary College", "Goldsmiths College", "Kings College", "Westfield College"];
const ROADS: [&str; 18] = [
    "Baker Street", "Oxford Street", "Fleet Street", "Regent Street", "Kings Road", "Abbey Road", "Bond Street",
    "Strand", "Whitehall", "Piccadilly", "Euston Road", "Marylebone Road", "Holloway Road", "Cromwell Road",
    "Edgware Road", "Brompton Road", "Shaftesbury Avenue", "Pall Mall",
];
const RIVERS: [&str; 3] = ["River Thames", "River Wandle", "River Lea"];

const ADJ: [&str; 25] = [
    "Amber", "Azure", "Birch", "Cedar", "Copper", "Coral", "Crimson", "Dusky", "Ember", "Fern", "Golden", "Hazel",
    "Indigo", "Ivory", "Jade", "Juniper", "Lunar", "Maple", "Misty", "Olive", "Opal", "Pearl", "Ruby", "Sable",
    "Willow",
];
const NOUN: [&str; 20] = [
    "Anchor", "Badger", "Beacon", "Comet", "Falcon", "Fox", "Harbor", "Heron", "Lantern", "Meadow", "Otter",
    "Pebble", "Raven", "Robin", "Saddle", "Sparrow", "Thistle", "Walrus", "Wren", "Yarrow",
];
const SHOP: [&str; 20] = [
    "Cafe", "Bakery", "Pharmacy", "Bistro", "Gallery", "Museum", "Library", "Theatre", "Market", "Pub", "Deli",
    "Salon", "Florist", "Bookshop", "Cinema", "Gym", "Chapel", "Studio", "Tavern", "Diner",
];
const FOOD: [&str; 8] = ["Burgers", "Fries", "Chicken", "Kebab", "Pizza", "Noodles", "Tacos", "Wraps"];

fn round(v: f64) -> f64 {
    (v * 10.0).round() / 10.0
}

fn pt(x: f64, y: f64) -> Point {
    Point::new(round(x.clamp(0.0, SIZE)), round(y.clamp(0.0, SIZE)))
}

struct Table {
    name: &'static str,
    attrs: Vec<(&'static str, &'static str, bool)>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn write(&self, dir: &Path) -> serde_json::Value {
        let mut s = self.attrs.iter().map(|a| a.0).collect::<Vec<_>>().join("\t");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join("\t"));
            s.push('\n');
        }
        let file = format!("{}.tsv", self.name);
        fs::write(dir.join(&file), s).expect("write tsv");
        json!({
            "name": self.name,
            "file": file,
            "attributes": self.attrs.iter().map(|(n, k, i)| json!({"name": n, "kind": k, "indexed": i})).collect::<Vec<_>>(),
        })
    }
}

/// 4 x 3 grid of quadrilaterals sharing jittered interior vertices.
fn districts(rng: &mut ChaCha8Rng) -> Table {
    let (cols, rows) = (4, 3);
    let (w, h) = (SIZE / cols as f64, SIZE / rows as f64);
    let mut grid = vec![vec![Point::new(0.0, 0.0); cols + 1]; rows + 1];
    for (j, row) in grid.iter_mut().enumerate() {
        for (i, p) in row.iter_mut().enumerate() {
            let interior = i > 0 && i < cols && j > 0 && j < rows;
            let (dx, dy) = if interior { (rng.gen_range(-300.0..300.0), rng.gen_range(-300.0..300.0)) } else { (0.0, 0.0) };
            *p = pt(i as f64 * w + dx, j as f64 * h + dy);
        }
    }
    let mut out = Vec::new();
    for j in 0..rows {
        for i in 0..cols {
            let ring = vec![grid[j][i], grid[j][i + 1], grid[j + 1][i + 1], grid[j + 1][i]];
            let r = Region::from_open_rings(vec![ring]).expect("district");
            let name = DISTRICTS[j * cols + i];
            out.push(vec![name.to_string(), format_region(&r), rng.gen_range(20_000..250_000).to_string()]);
        }
    }
    Table { name: "districts", attrs: vec![("name", "text", false), ("area", "region", true), ("population", "int", false)], rows: out }
}

fn universities(rng: &mut ChaCha8Rng) -> Table {
    let rows = COLLEGES
        .iter()
        .map(|n| {
            let (cx, cy) = (rng.gen_range(800.0..SIZE - 800.0), rng.gen_range(800.0..SIZE - 800.0));
            let k = 6;
            let ring: Vec<Point> = (0..k)
                .map(|i| {
                    let a = i as f64 / k as f64 * std::f64::consts::TAU;
                    let r = rng.gen_range(250.0..500.0);
                    pt(cx + r * a.cos(), cy + r * a.sin())
                })
                .collect();
            let r = Region::from_open_rings(vec![ring]).expect("campus");
            vec![n.to_string(), format_region(&r), rng.gen_range(3_000..40_000).to_string()]
        })
        .collect();
    Table { name: "universities", attrs: vec![("name", "text", false), ("campus", "region", true), ("students", "int", false)], rows }
}

fn path_line(rng: &mut ChaCha8Rng, start: Point, end: Point, steps: usize, wobble: f64) -> Line {
    let pts: Vec<Point> = (0..=steps)
        .map(|s| {
            let f = s as f64 / steps as f64;
            let p = start.lerp(end, f);
            let j = if s == 0 || s == steps { 0.0 } else { wobble };
            pt(p.x + rng.gen_range(-j..=j), p.y + rng.gen_range(-j..=j))
        })
        .collect();
    Line::from_path(&pts).expect("line")
}

fn lines(rng: &mut ChaCha8Rng, name: &'static str, geom: &'static str, names: &[&str], wobble: f64) -> Table {
    let rows = names
        .iter()
        .enumerate()
        .map(|(i, n)| {
            let horizontal = i % 2 == 0;
            let a = rng.gen_range(300.0..SIZE - 300.0);
            let b = rng.gen_range(300.0..SIZE - 300.0);
            let (s, e) = if horizontal {
                (Point::new(rng.gen_range(0.0..1500.0), a), Point::new(rng.gen_range(SIZE - 1500.0..SIZE), b))
            } else {
                (Point::new(a, rng.gen_range(0.0..1500.0)), Point::new(b, rng.gen_range(SIZE - 1500.0..SIZE)))
            };
            let l = path_line(rng, s, e, 6, wobble);
            vec![n.to_string(), format_line(&l), round(l.length()).to_string()]
        })
        .collect();
    Table { name, attrs: vec![("name", "text", false), (geom, "line", true), ("length", "real", false)], rows }
}

fn points(rng: &mut ChaCha8Rng, name: &'static str, names: Vec<String>) -> Table {
    let rows = names
        .into_iter()
        .map(|n| {
            let p = pt(rng.gen_range(0.0..SIZE), rng.gen_range(0.0..SIZE));
            vec![n, format_point(&p), (rng.gen_range(10..=50) as f64 / 10.0).to_string()]
        })
        .collect();
    Table { name, attrs: vec![("name", "text", false), ("pos", "point", true), ("rating", "real", false)], rows }
}

fn poi_names(rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut v: Vec<String> = ADJ
        .iter()
        .flat_map(|a| NOUN.iter().flat_map(move |n| SHOP.iter().map(move |s| format!("{a} {n} {s}"))))
        .collect();
    v.shuffle(rng);
    v
}

fn food_names(rng: &mut ChaCha8Rng, n: usize) -> Vec<String> {
    let mut v: Vec<String> = ADJ
        .iter()
        .flat_map(|a| NOUN.iter().flat_map(move |b| FOOD.iter().map(move |f| format!("{a} {b} {f}"))))
        .collect();
    v.shuffle(rng);
    v.truncate(n);
    v
}

/// Random walk in 10-minute units inside the city.
fn trip(rng: &mut ChaCha8Rng, start_min: i64, units: usize, speed: f64) -> MovingPoint {
    let mut p = pt(rng.gen_range(1000.0..SIZE - 1000.0), rng.gen_range(1000.0..SIZE - 1000.0));
    let mut heading: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let mut out = Vec::with_capacity(units);
    for u in 0..units {
        let t0 = (start_min + 10 * u as i64) * MIN;
        heading += rng.gen_range(-0.8..0.8);
        let step = speed * 600.0 * rng.gen_range(0.5..1.0);
        let mut q = pt(p.x + step * heading.cos(), p.y + step * heading.sin());
        if q.x <= 0.0 || q.x >= SIZE || q.y <= 0.0 || q.y >= SIZE {
            heading += std::f64::consts::PI;
            q = pt(p.x + step * heading.cos(), p.y + step * heading.sin());
        }
        out.push(UnitPoint::new(Period::new(t0, t0 + 10 * MIN).expect("period"), p, q).expect("unit"));
        p = q;
    }
    MovingPoint::new(out).expect("trip")
}

/// Vehicles run inside 05:00 to 12:00.
fn vehicles(rng: &mut ChaCha8Rng, name: &'static str, fleets: &[(&str, usize, f64)]) -> Table {
    let mut rows = Vec::new();
    for (prefix, count, speed) in fleets {
        for i in 1..=*count {
            let start = rng.gen_range(0..=18) * 10 + 300;
            let max_units = ((720 - start) / 10) as usize;
            let units = rng.gen_range(12..=max_units.max(12)).min(max_units);
            let m = trip(rng, start, units, *speed);
            rows.push(vec![format!("{prefix}{i}"), format_mpoint(&m)]);
        }
    }
    Table { name, attrs: vec![("name", "text", false), ("trip", "mpoint", false)], rows }
}

fn write_dataset(dir: &Path, name: &str, tables: &[Table]) {
    fs::create_dir_all(dir).expect("mkdir");
    let rels: Vec<serde_json::Value> = tables.iter().map(|t| t.write(dir)).collect();
    let cat = json!({"name": name, "epoch": "day0", "relations": rels});
    let mut s = serde_json::to_string_pretty(&cat).expect("json");
    let _ = writeln!(s);
    fs::write(dir.join("catalog.json"), s).expect("write catalog");
}

fn main() {
    let out = std::env::args().nth(1).unwrap_or_else(|| "data".into());
    let out = Path::new(&out);

    let mut rng = ChaCha8Rng::seed_from_u64(20240601);
    let d = districts(&mut rng);
    let pn = poi_names(&mut rng);
    let p = points(&mut rng, "pois", pn);
    let roads = lines(&mut rng, "roads", "path", &ROADS, 250.0);
    let rivers = lines(&mut rng, "rivers", "course", &RIVERS, 600.0);
    let u = universities(&mut rng);
    let v = vehicles(&mut rng, "vehicles", &[("train", 20, 4.0), ("bus", 20, 1.5), ("taxi", 20, 2.5)]);
    write_dataset(&out.join("minicity"), "minicity", &[d, p, roads, v, rivers, u]);

    let mut rng = ChaCha8Rng::seed_from_u64(20240602);
    let d = districts(&mut rng);
    let fnames = food_names(&mut rng, 300);
    let f = points(&mut rng, "fastfood", fnames);
    let u = universities(&mut rng);
    let b = vehicles(&mut rng, "buses", &[("bus", 30, 1.5)]);
    write_dataset(&out.join("minicity-london"), "minicity-london", &[d, f, u, b]);
}
