//! Continuous k-nearest-neighbor sweep over moving points.
//!
//! Time is cut at every clipped unit boundary and at every crossing of two
//! squared-distance curves. Between two consecutive cuts the distance order is
//! fixed, so ranks are read at each elementary-interval midpoint and then
//! merged into maximal membership intervals per object.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::GeoError;
use crate::temporal::{MovingPoint, Period, UnitPoint};

const ROOT_SNAP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NearestInterval {
    pub object: u64,
    pub interval: Period,
    /// Rank at the interval midpoint, 1-based.
    pub rank: usize,
}

/// Squared distance to the query as `c0 + c1*s + c2*s^2`, `s` local to a segment.
#[derive(Debug, Clone, Copy)]
struct DistPoly {
    c0: f64,
    c1: f64,
    c2: f64,
}

impl DistPoly {
    fn between(c: &UnitPoint, q: &UnitPoint, at: f64) -> Self {
        let a = c.position_at(at).sub(q.position_at(at));
        let v = c.velocity().sub(q.velocity());
        DistPoly { c0: a.dot(a), c1: 2.0 * a.dot(v), c2: v.dot(v) }
    }

    fn eval(&self, s: f64) -> f64 {
        self.c0 + s * (self.c1 + s * self.c2)
    }
}

/// Real roots of `c2 s^2 + c1 s + c0` strictly inside `(0, len)`.
fn roots_inside(c2: f64, c1: f64, c0: f64, len: f64) -> Vec<f64> {
    let mut roots = Vec::with_capacity(2);
    if c2 == 0.0 {
        if c1 != 0.0 {
            roots.push(-c0 / c1);
        }
    } else {
        let disc = c1 * c1 - 4.0 * c2 * c0;
        if disc >= 0.0 {
            let q = -0.5 * (c1 + c1.signum() * disc.sqrt());
            if q != 0.0 {
                roots.push(q / c2);
                roots.push(c0 / q);
            } else {
                // c1 == 0 and c0 == 0: double root at zero
                roots.push(0.0);
            }
        }
    }
    roots.retain(|r| r.is_finite() && *r > ROOT_SNAP && *r < len - ROOT_SNAP);
    roots
}

struct Elementary {
    start: f64,
    end: f64,
    ranked: Vec<(u64, usize)>,
}

fn unit_covering(m: &MovingPoint, a: f64, b: f64) -> Option<&UnitPoint> {
    let mid = 0.5 * (a + b);
    let idx = m.units().partition_point(|u| (u.period.start.0 as f64) <= mid);
    let u = m.units().get(idx.checked_sub(1)?)?;
    ((u.period.start.0 as f64) <= a && (u.period.end.0 as f64) >= b).then_some(u)
}

/// Reports, as maximal intervals, which candidates are among the `k` nearest to
/// `query` during `period`. Ties are broken by ascending candidate id.
pub fn knearest_sweep(
    candidates: &[(u64, MovingPoint)],
    query: &MovingPoint,
    period: Period,
    k: usize,
) -> Result<Vec<NearestInterval>, GeoError> {
    if k < 1 {
        return Err(GeoError::InvalidK);
    }
    let q = query.atperiods(&period);
    if q.is_empty() {
        return Ok(Vec::new());
    }
    let cands: Vec<(u64, MovingPoint)> = candidates
        .iter()
        .map(|(id, m)| (*id, m.atperiods(&period)))
        .filter(|(_, m)| !m.is_empty())
        .collect();

    let mut cuts: Vec<i64> = q
        .units()
        .iter()
        .chain(cands.iter().flat_map(|(_, m)| m.units()))
        .flat_map(|u| [u.period.start.0, u.period.end.0])
        .collect();
    cuts.sort_unstable();
    cuts.dedup();

    let mut pieces: Vec<Elementary> = Vec::new();
    for w in cuts.windows(2) {
        let (a, b) = (w[0] as f64, w[1] as f64);
        let Some(qu) = unit_covering(&q, a, b) else { continue };
        let active: Vec<(u64, DistPoly)> = cands
            .iter()
            .filter_map(|(id, m)| unit_covering(m, a, b).map(|u| (*id, DistPoly::between(u, qu, a))))
            .collect();
        if active.is_empty() {
            continue;
        }
        let len = b - a;
        let mut breaks = vec![0.0, len];
        for i in 0..active.len() {
            for j in (i + 1)..active.len() {
                let (pi, pj) = (active[i].1, active[j].1);
                breaks.extend(roots_inside(pi.c2 - pj.c2, pi.c1 - pj.c1, pi.c0 - pj.c0, len));
            }
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|x, y| (*x - *y).abs() <= ROOT_SNAP);
        for bw in breaks.windows(2) {
            let mid = 0.5 * (bw[0] + bw[1]);
            let mut order: Vec<(f64, u64)> = active.iter().map(|(id, p)| (p.eval(mid), *id)).collect();
            order.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
            let ranked = order.iter().take(k).enumerate().map(|(r, (_, id))| (*id, r + 1)).collect();
            pieces.push(Elementary { start: a + bw[0], end: a + bw[1], ranked });
        }
    }
    Ok(merge_pieces(&pieces))
}

/// Merges per-object membership across adjacent pieces and rounds to whole ms.
fn merge_pieces(pieces: &[Elementary]) -> Vec<NearestInterval> {
    // object -> list of runs, each run a list of (start, end, rank) pieces
    let mut runs: BTreeMap<u64, Vec<Vec<(f64, f64, usize)>>> = BTreeMap::new();
    for p in pieces {
        for &(id, rank) in &p.ranked {
            let obj_runs = runs.entry(id).or_default();
            match obj_runs.last_mut() {
                Some(run) if run.last().map(|l| l.1) == Some(p.start) => run.push((p.start, p.end, rank)),
                _ => obj_runs.push(vec![(p.start, p.end, rank)]),
            }
        }
    }

    let mut out = Vec::new();
    for (id, obj_runs) in runs {
        let mut rounded: Vec<(i64, i64, Vec<(f64, f64, usize)>)> = Vec::new();
        for run in obj_runs {
            let s = run[0].0.round() as i64;
            let e = run[run.len() - 1].1.round() as i64;
            if s >= e {
                continue;
            }
            match rounded.last_mut() {
                Some(last) if last.1 == s => {
                    last.1 = e;
                    last.2.extend(run);
                }
                _ => rounded.push((s, e, run)),
            }
        }
        for (s, e, run) in rounded {
            let mid = 0.5 * (s as f64 + e as f64);
            let rank = run
                .iter()
                .find(|(ps, pe, _)| *ps <= mid && mid < *pe)
                .or_else(|| run.iter().min_by(|a, b| dist_to(a, mid).total_cmp(&dist_to(b, mid))))
                .map(|p| p.2)
                .unwrap_or(1);
            out.push(NearestInterval { object: id, interval: Period::new(s, e).expect("s < e"), rank });
        }
    }
    out.sort_by(|a, b| a.interval.start.cmp(&b.interval.start).then(a.rank.cmp(&b.rank)).then(a.object.cmp(&b.object)));
    out
}

fn dist_to(piece: &(f64, f64, usize), t: f64) -> f64 {
    if t < piece.0 {
        piece.0 - t
    } else {
        (t - piece.1).max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;

    fn stationary(x: f64, y: f64, s: i64, e: i64) -> MovingPoint {
        MovingPoint::stationary(Point::new(x, y), Period::new(s, e).unwrap())
    }

    #[test]
    fn static_case() {
        let cands = vec![(1, stationary(1.0, 0.0, 0, 1000)), (2, stationary(5.0, 0.0, 0, 1000))];
        let q = stationary(0.0, 0.0, 0, 1000);
        let out = knearest_sweep(&cands, &q, Period::new(0, 1000).unwrap(), 1).unwrap();
        assert_eq!(out, vec![NearestInterval { object: 1, interval: Period::new(0, 1000).unwrap(), rank: 1 }]);
    }

    #[test]
    fn overtaking_candidate() {
        let b = MovingPoint::new(vec![UnitPoint::new(
            Period::new(0, 1000).unwrap(),
            Point::new(0.0, 8.0),
            Point::new(0.0, 0.0),
        )
        .unwrap()])
        .unwrap();
        let cands = vec![(1, stationary(4.0, 0.0, 0, 1000)), (2, b)];
        let q = stationary(0.0, 0.0, 0, 1000);
        let out = knearest_sweep(&cands, &q, Period::new(0, 1000).unwrap(), 1).unwrap();
        assert_eq!(
            out,
            vec![
                NearestInterval { object: 1, interval: Period::new(0, 500).unwrap(), rank: 1 },
                NearestInterval { object: 2, interval: Period::new(500, 1000).unwrap(), rank: 1 },
            ]
        );
    }

    #[test]
    fn invalid_k() {
        let q = stationary(0.0, 0.0, 0, 10);
        assert_eq!(knearest_sweep(&[], &q, Period::new(0, 10).unwrap(), 0).unwrap_err(), GeoError::InvalidK);
    }

    #[test]
    fn fewer_candidates_than_k() {
        let cands = vec![(3, stationary(1.0, 0.0, 0, 500))];
        let q = stationary(0.0, 0.0, 0, 1000);
        let out = knearest_sweep(&cands, &q, Period::new(0, 1000).unwrap(), 5).unwrap();
        assert_eq!(out, vec![NearestInterval { object: 3, interval: Period::new(0, 500).unwrap(), rank: 1 }]);
    }

    #[test]
    fn ties_prefer_lower_id() {
        let cands = vec![(9, stationary(0.0, 2.0, 0, 100)), (4, stationary(2.0, 0.0, 0, 100))];
        let q = stationary(0.0, 0.0, 0, 100);
        let out = knearest_sweep(&cands, &q, Period::new(0, 100).unwrap(), 1).unwrap();
        assert_eq!(out[0].object, 4);
    }

    #[test]
    fn query_gap_restricts_output() {
        let q = MovingPoint::new(vec![
            UnitPoint::new(Period::new(0, 100).unwrap(), Point::new(0.0, 0.0), Point::new(0.0, 0.0)).unwrap(),
            UnitPoint::new(Period::new(200, 300).unwrap(), Point::new(0.0, 0.0), Point::new(0.0, 0.0)).unwrap(),
        ])
        .unwrap();
        let cands = vec![(1, stationary(1.0, 1.0, 0, 300))];
        let out = knearest_sweep(&cands, &q, Period::new(0, 300).unwrap(), 1).unwrap();
        let ivs: Vec<Period> = out.iter().map(|n| n.interval).collect();
        assert_eq!(ivs, vec![Period::new(0, 100).unwrap(), Period::new(200, 300).unwrap()]);
    }

    #[test]
    fn roots_helper() {
        // (s - 2)(s - 5) on (0, 10)
        let mut r = roots_inside(1.0, -7.0, 10.0, 10.0);
        r.sort_by(f64::total_cmp);
        assert_eq!(r, vec![2.0, 5.0]);
        assert_eq!(roots_inside(0.0, 2.0, -4.0, 10.0), vec![2.0]);
        assert!(roots_inside(1.0, 0.0, 1.0, 10.0).is_empty());
    }
}
