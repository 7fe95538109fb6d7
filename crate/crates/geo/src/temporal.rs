use serde::{Deserialize, Serialize};

use crate::error::GeoError;
use crate::geometry::{Point, Rect};

/// Milliseconds since the dataset epoch (day 0, 00:00).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Instant(pub i64);

impl Instant {
    pub fn new(ms: i64) -> Result<Self, GeoError> {
        if ms < 0 {
            return Err(GeoError::InvalidPeriod { start: ms, end: ms });
        }
        Ok(Instant(ms))
    }

    pub fn ms(self) -> i64 {
        self.0
    }
}

/// Half-open time interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Period {
    pub start: Instant,
    pub end: Instant,
}

impl Period {
    pub fn new(start: i64, end: i64) -> Result<Self, GeoError> {
        if start < 0 || start >= end {
            return Err(GeoError::InvalidPeriod { start, end });
        }
        Ok(Period { start: Instant(start), end: Instant(end) })
    }

    pub fn duration(&self) -> i64 {
        self.end.0 - self.start.0
    }

    pub fn contains(&self, t: i64) -> bool {
        self.start.0 <= t && t < self.end.0
    }

    pub fn intersects(&self, o: &Period) -> bool {
        self.start < o.end && o.start < self.end
    }

    pub fn intersection(&self, o: &Period) -> Option<Period> {
        let s = self.start.max(o.start);
        let e = self.end.min(o.end);
        (s < e).then_some(Period { start: s, end: e })
    }
}

/// Linear motion from `p0` at `period.start` to `p1` at `period.end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitPoint {
    pub period: Period,
    pub p0: Point,
    pub p1: Point,
}

impl UnitPoint {
    pub fn new(period: Period, p0: Point, p1: Point) -> Result<Self, GeoError> {
        Point::checked(p0.x, p0.y)?;
        Point::checked(p1.x, p1.y)?;
        Ok(UnitPoint { period, p0, p1 })
    }

    /// Position at a real-valued time; callers keep `t` inside the period.
    pub fn position_at(&self, t: f64) -> Point {
        let s = self.period.start.0 as f64;
        let e = self.period.end.0 as f64;
        self.p0.lerp(self.p1, (t - s) / (e - s))
    }

    /// Velocity in plane units per millisecond.
    pub fn velocity(&self) -> Point {
        let d = self.period.duration() as f64;
        Point::new((self.p1.x - self.p0.x) / d, (self.p1.y - self.p0.y) / d)
    }

    /// Restriction to a sub-period with interpolated endpoints.
    pub fn clip(&self, p: &Period) -> Option<UnitPoint> {
        let iv = self.period.intersection(p)?;
        if iv == self.period {
            return Some(*self);
        }
        Some(UnitPoint {
            period: iv,
            p0: self.position_at(iv.start.0 as f64),
            p1: self.position_at(iv.end.0 as f64),
        })
    }
}

/// Trajectory as temporally ordered, pairwise disjoint units.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MovingPoint {
    units: Vec<UnitPoint>,
}

impl MovingPoint {
    pub fn new(units: Vec<UnitPoint>) -> Result<Self, GeoError> {
        for w in units.windows(2) {
            if w[0].period.start > w[1].period.start {
                return Err(GeoError::InvalidMovingPoint("units not sorted by start time".into()));
            }
            if w[0].period.end > w[1].period.start {
                return Err(GeoError::InvalidMovingPoint("overlapping units".into()));
            }
        }
        Ok(MovingPoint { units })
    }

    pub fn empty() -> Self {
        MovingPoint { units: Vec::new() }
    }

    /// A point that stays at `p` for the whole period.
    pub fn stationary(p: Point, period: Period) -> Self {
        MovingPoint { units: vec![UnitPoint { period, p0: p, p1: p }] }
    }

    pub fn units(&self) -> &[UnitPoint] {
        &self.units
    }

    pub fn into_units(self) -> Vec<UnitPoint> {
        self.units
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    /// Index of the unit whose period contains `t`.
    pub fn unit_index_at(&self, t: i64) -> Option<usize> {
        let idx = self.units.partition_point(|u| u.period.start.0 <= t);
        if idx == 0 {
            return None;
        }
        self.units[idx - 1].period.contains(t).then_some(idx - 1)
    }

    pub fn at(&self, t: Instant) -> Option<Point> {
        self.position_at(t.0 as f64)
    }

    /// Position at a real-valued instant, absent outside the definition time.
    pub fn position_at(&self, t: f64) -> Option<Point> {
        let idx = self.units.partition_point(|u| (u.period.start.0 as f64) <= t);
        if idx == 0 {
            return None;
        }
        let u = &self.units[idx - 1];
        (t < u.period.end.0 as f64).then(|| u.position_at(t))
    }

    pub fn deftime(&self) -> Vec<Period> {
        let mut out: Vec<Period> = Vec::new();
        for u in &self.units {
            match out.last_mut() {
                Some(last) if last.end == u.period.start => last.end = u.period.end,
                _ => out.push(u.period),
            }
        }
        out
    }

    pub fn atperiods(&self, p: &Period) -> MovingPoint {
        MovingPoint { units: self.units.iter().filter_map(|u| u.clip(p)).collect() }
    }

    pub fn bbox(&self) -> Option<Rect> {
        Rect::of_points(self.units.iter().flat_map(|u| [&u.p0, &u.p1]))
    }

    /// Concatenates unit lists, re-sorting by start time.
    pub fn merge(parts: impl IntoIterator<Item = MovingPoint>) -> Result<Self, GeoError> {
        let mut units: Vec<UnitPoint> = parts.into_iter().flat_map(|m| m.units).collect();
        units.sort_by_key(|u| u.period.start);
        MovingPoint::new(units)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(s: i64, e: i64, x0: f64, y0: f64, x1: f64, y1: f64) -> UnitPoint {
        UnitPoint::new(Period::new(s, e).unwrap(), Point::new(x0, y0), Point::new(x1, y1)).unwrap()
    }

    #[test]
    fn period_validation_and_half_open() {
        assert!(Period::new(5, 5).is_err());
        assert!(Period::new(-1, 5).is_err());
        let a = Period::new(2000, 5000).unwrap();
        assert!(a.intersects(&Period::new(4000, 8000).unwrap()));
        assert!(!a.intersects(&Period::new(5000, 8000).unwrap()));
        assert!(a.contains(2000) && !a.contains(5000));
    }

    #[test]
    fn at_instant() {
        let m = MovingPoint::new(vec![unit(0, 1000, 0.0, 0.0, 10.0, 0.0)]).unwrap();
        assert_eq!(m.at(Instant(500)), Some(Point::new(5.0, 0.0)));
        assert_eq!(m.at(Instant(0)), Some(Point::new(0.0, 0.0)));
        assert_eq!(m.at(Instant(1000)), None);
        assert_eq!(m.at(Instant(2000)), None);
    }

    #[test]
    fn deftime_merges_abutting_units() {
        let m = MovingPoint::new(vec![unit(0, 1000, 0.0, 0.0, 1.0, 0.0), unit(1000, 2000, 1.0, 0.0, 2.0, 0.0)]).unwrap();
        assert_eq!(m.deftime(), vec![Period::new(0, 2000).unwrap()]);
        let g = MovingPoint::new(vec![unit(0, 1000, 0.0, 0.0, 1.0, 0.0), unit(3000, 4000, 1.0, 0.0, 2.0, 0.0)]).unwrap();
        assert_eq!(g.deftime(), vec![Period::new(0, 1000).unwrap(), Period::new(3000, 4000).unwrap()]);
        assert!(MovingPoint::empty().deftime().is_empty());
    }

    #[test]
    fn atperiods_clips_with_interpolation() {
        let m = MovingPoint::new(vec![unit(0, 1000, 0.0, 0.0, 10.0, 0.0)]).unwrap();
        let r = m.atperiods(&Period::new(250, 750).unwrap());
        assert_eq!(r.units(), &[unit(250, 750, 2.5, 0.0, 7.5, 0.0)]);
        assert!(m.atperiods(&Period::new(2000, 3000).unwrap()).is_empty());
        assert_eq!(m.atperiods(&Period::new(0, 5000).unwrap()), m);
    }

    #[test]
    fn rejects_overlapping_units() {
        assert!(MovingPoint::new(vec![unit(0, 1000, 0.0, 0.0, 1.0, 0.0), unit(500, 2000, 1.0, 0.0, 2.0, 0.0)]).is_err());
        assert!(MovingPoint::new(vec![unit(1000, 2000, 0.0, 0.0, 1.0, 0.0), unit(0, 500, 1.0, 0.0, 2.0, 0.0)]).is_err());
    }
}
