//! Seeded comparisons against brute-force oracles.

use nlst_geo::{
    contains, intersects, knearest_sweep, MovingPoint, Operand, Period, Point, RTree, Rect, Region, UnitPoint,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Winding-number test, plus an explicit boundary check by segment distance.
fn winding_inside(ring: &[Point], p: Point) -> bool {
    let mut wn = 0i32;
    for w in ring.windows(2) {
        let (a, b) = (w[0], w[1]);
        let cross = (b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y);
        if a.y <= p.y {
            if b.y > p.y && cross > 0.0 {
                wn += 1;
            }
        } else if b.y <= p.y && cross < 0.0 {
            wn -= 1;
        }
    }
    wn != 0
}

fn near_boundary(ring: &[Point], p: Point, eps: f64) -> bool {
    ring.windows(2).any(|w| {
        let (a, b) = (w[0], w[1]);
        let ab = (b.x - a.x, b.y - a.y);
        let len2 = ab.0 * ab.0 + ab.1 * ab.1;
        let t = (((p.x - a.x) * ab.0 + (p.y - a.y) * ab.1) / len2).clamp(0.0, 1.0);
        let (cx, cy) = (a.x + t * ab.0, a.y + t * ab.1);
        ((p.x - cx).powi(2) + (p.y - cy).powi(2)).sqrt() <= eps
    })
}

fn oracle_contains(r: &Region, p: Point) -> bool {
    if r.rings().iter().any(|ring| near_boundary(ring, p, 1e-12)) {
        return true;
    }
    winding_inside(r.outer(), p) && !r.holes().iter().any(|h| winding_inside(h, p))
}

/// Star-shaped polygon around `c`, radii in `[rmin, rmax]`, optionally with a hole.
fn random_region(rng: &mut ChaCha8Rng, c: Point, rmin: f64, rmax: f64, with_hole: bool) -> Region {
    let n = rng.gen_range(3..12);
    let step = std::f64::consts::TAU / n as f64;
    let angles: Vec<f64> = (0..n).map(|i| (i as f64 + rng.gen_range(0.0..0.8)) * step).collect();
    let outer: Vec<Point> = angles
        .iter()
        .map(|a| {
            let r = rng.gen_range(rmin..rmax);
            Point::new(c.x + r * a.cos(), c.y + r * a.sin())
        })
        .collect();
    let mut rings = vec![outer];
    if with_hole {
        let h = rmin * 0.5;
        rings.push(vec![
            Point::new(c.x - h, c.y - h),
            Point::new(c.x + h, c.y - h),
            Point::new(c.x + h, c.y + h),
            Point::new(c.x - h, c.y + h),
        ]);
    }
    Region::from_open_rings(rings).expect("star polygon is simple")
}

#[test]
fn contains_matches_winding_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut inside = 0;
    for _ in 0..1000 {
        let c = Point::new(rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0));
        let hole = rng.gen_bool(0.4);
        let r = random_region(&mut rng, c, 5.0, 20.0, hole);
        let p = Point::new(c.x + rng.gen_range(-25.0..25.0), c.y + rng.gen_range(-25.0..25.0));
        let got = contains(&r, p);
        assert_eq!(got, oracle_contains(&r, p), "region {r:?} point {p:?}");
        assert_eq!(intersects(Operand::Region(&r), Operand::Point(p)).unwrap(), got);
        inside += usize::from(got);
    }
    assert!(inside > 100 && inside < 900, "suite should exercise both outcomes, got {inside}");
}

#[test]
fn region_intersection_agrees_with_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..200 {
        let a = random_region(&mut rng, Point::new(0.0, 0.0), 5.0, 10.0, false);
        let off = Point::new(rng.gen_range(-25.0..25.0), rng.gen_range(-25.0..25.0));
        let b = random_region(&mut rng, off, 5.0, 10.0, false);
        let got = intersects(Operand::Region(&a), Operand::Region(&b)).unwrap();
        let mut sampled = false;
        let (lo, hi) = (-40.0, 40.0);
        let steps = 320;
        'grid: for i in 0..=steps {
            for j in 0..=steps {
                let p = Point::new(lo + (hi - lo) * i as f64 / steps as f64, lo + (hi - lo) * j as f64 / steps as f64);
                if oracle_contains(&a, p) && oracle_contains(&b, p) {
                    sampled = true;
                    break 'grid;
                }
            }
        }
        // sampling can only miss slivers, never invent an overlap
        if sampled {
            assert!(got, "sampling found a shared point but intersects() said no");
        }
        if !got {
            assert!(!sampled);
        }
    }
}

fn random_rect(rng: &mut ChaCha8Rng, extent: f64, max_size: f64) -> Rect {
    let x = rng.gen_range(0.0..extent);
    let y = rng.gen_range(0.0..extent);
    let w = rng.gen_range(0.0..max_size);
    let h = rng.gen_range(0.0..max_size);
    Rect::new(x, y, x + w, y + h).unwrap()
}

#[test]
fn window_query_equals_linear_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for case in 0..500 {
        let n = rng.gen_range(1..300);
        let entries: Vec<(Rect, u64)> = (0..n).map(|i| (random_rect(&mut rng, 1000.0, 40.0), i as u64)).collect();
        let fanout = [4, 6, 8, 16][case % 4];
        let tree = RTree::bulk_load(entries.clone(), fanout).unwrap();
        tree.check_invariants().unwrap();
        let w = random_rect(&mut rng, 1000.0, 300.0);
        let expected: Vec<u64> = entries.iter().filter(|(r, _)| r.intersects(&w)).map(|(_, id)| *id).collect();
        assert_eq!(tree.window(&w), expected, "case {case}");
    }
}

#[test]
fn two_hundred_rect_instance() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let entries: Vec<(Rect, u64)> = (0..200).map(|i| (random_rect(&mut rng, 500.0, 30.0), i)).collect();
    let tree = RTree::bulk_load(entries.clone(), 8).unwrap();
    let all = tree.window(&tree.bounds());
    assert_eq!(all.len(), 200);
    let w = random_rect(&mut rng, 500.0, 200.0);
    let expected: Vec<u64> = entries.iter().filter(|(r, _)| r.intersects(&w)).map(|(_, id)| *id).collect();
    assert_eq!(tree.window(&w), expected);
}

#[test]
fn bulk_load_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let entries: Vec<(Rect, u64)> = (0..777).map(|i| (random_rect(&mut rng, 100.0, 3.0), i)).collect();
    let a = RTree::bulk_load(entries.clone(), 8).unwrap();
    let b = RTree::bulk_load(entries, 8).unwrap();
    assert_eq!(a.structural_hash(), b.structural_hash());
}

fn random_mpoint(rng: &mut ChaCha8Rng, horizon: i64, max_units: usize) -> MovingPoint {
    let n = rng.gen_range(1..=max_units);
    let mut t = rng.gen_range(0..horizon / 4);
    let mut p = Point::new(rng.gen_range(-100.0..100.0), rng.gen_range(-100.0..100.0));
    let mut units = Vec::new();
    for _ in 0..n {
        if rng.gen_bool(0.2) {
            t += rng.gen_range(1..200);
            p = Point::new(rng.gen_range(-100.0..100.0), rng.gen_range(-100.0..100.0));
        }
        let d = rng.gen_range(50..600);
        let q = Point::new(p.x + rng.gen_range(-60.0..60.0), p.y + rng.gen_range(-60.0..60.0));
        units.push(UnitPoint::new(Period::new(t, t + d).unwrap(), p, q).unwrap());
        t += d;
        p = q;
    }
    MovingPoint::new(units).unwrap()
}

/// Top-k ids at integer instant `t` by brute force.
fn brute_topk(cands: &[(u64, MovingPoint)], q: &MovingPoint, t: i64, k: usize) -> Vec<u64> {
    let Some(qp) = q.at(nlst_geo::Instant(t)) else { return Vec::new() };
    let mut d: Vec<(f64, u64)> = cands
        .iter()
        .filter_map(|(id, m)| m.at(nlst_geo::Instant(t)).map(|p| (p.dist2(qp), *id)))
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut ids: Vec<u64> = d.into_iter().take(k).map(|(_, id)| id).collect();
    ids.sort_unstable();
    ids
}

#[test]
fn overtaking_example_against_dense_sampling() {
    let a = MovingPoint::stationary(Point::new(4.0, 0.0), Period::new(0, 1000).unwrap());
    let b = MovingPoint::new(vec![UnitPoint::new(
        Period::new(0, 1000).unwrap(),
        Point::new(0.0, 8.0),
        Point::new(0.0, 0.0),
    )
    .unwrap()])
    .unwrap();
    let q = MovingPoint::stationary(Point::new(0.0, 0.0), Period::new(0, 1000).unwrap());
    let cands = vec![(1, a), (2, b)];
    let switch = (0..1000).find(|&t| brute_topk(&cands, &q, t, 1) == vec![2]).unwrap();
    // B at 8 - 0.008t reaches distance 4 at t = 500; the tie goes to the lower id
    assert_eq!(switch, 501);
    let out = knearest_sweep(&cands, &q, Period::new(0, 1000).unwrap(), 1).unwrap();
    assert_eq!(out[0].interval, Period::new(0, 500).unwrap());
    assert_eq!(out[1].interval, Period::new(500, 1000).unwrap());
}

#[test]
fn ten_random_candidates_match_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let cands: Vec<(u64, MovingPoint)> = (0..10).map(|i| (i, random_mpoint(&mut rng, 4000, 8))).collect();
    let q = random_mpoint(&mut rng, 4000, 8);
    let period = Period::new(0, 6000).unwrap();
    let out = knearest_sweep(&cands, &q, period, 3).unwrap();
    let mut mismatches = 0;
    for t in 0..6000 {
        let oracle = brute_topk(&cands, &q, t, 3);
        let mut got: Vec<u64> = out.iter().filter(|n| n.interval.contains(t)).map(|n| n.object).collect();
        got.sort_unstable();
        if got != oracle {
            let near_change = (t - 2..=t + 2).any(|u| u >= 0 && brute_topk(&cands, &q, u, 3) != oracle);
            assert!(near_change, "mismatch at {t} away from any oracle change");
            mismatches += 1;
        }
    }
    assert!(mismatches < 50);
}

proptest! {
    #[test]
    fn atperiods_preserves_positions(seed in 0u64..10_000, s in 0i64..3000, len in 1i64..3000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_mpoint(&mut rng, 3000, 6);
        let p = Period::new(s, s + len).unwrap();
        let r = m.atperiods(&p);
        // deftime(atperiods(m, p)) stays within deftime(m) ∩ p
        let allowed: Vec<Period> = m.deftime().iter().filter_map(|q| q.intersection(&p)).collect();
        for d in r.deftime() {
            prop_assert!(allowed.iter().any(|a| a.start <= d.start && d.end <= a.end));
        }
        for u in r.units() {
            for t in [u.period.start.0, (u.period.start.0 + u.period.end.0) / 2, u.period.end.0 - 1] {
                let a = r.at(nlst_geo::Instant(t)).unwrap();
                let b = m.at(nlst_geo::Instant(t)).unwrap();
                prop_assert!((a.x - b.x).abs() < 1e-9 && (a.y - b.y).abs() < 1e-9);
            }
        }
    }
}
