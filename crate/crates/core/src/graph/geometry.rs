//! Ray/segment intersection in the shape plane.
//!
//! Rays start at the origin. A segment `p0 -> p1` owns the half-open
//! parameter range `t in [0, 1)`, so a crossing exactly at a shared vertex is
//! attributed to the segment that starts there.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::embedding::Point;

/// Crossing distances of a trajectory with the ray at angle `psi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusSet {
    pub psi: f64,
    pub radii: Vec<f64>,
}

impl RadiusSet {
    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }
}

#[inline]
fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Unit direction of the ray at `psi`.
#[inline]
pub fn direction(psi: f64) -> Point {
    [psi.cos(), psi.sin()]
}

/// Angle of ray `index` out of `r` evenly spaced rays.
#[inline]
pub fn ray_angle(index: usize, r: usize) -> f64 {
    index as f64 * TAU / r as f64
}

/// Angle of `p` in `[0, 2pi)`.
#[inline]
pub fn angle_of(p: Point) -> f64 {
    let a = p[1].atan2(p[0]);
    if a < 0.0 {
        a + TAU
    } else {
        a
    }
}

/// Intersection of the segment `p0 -> p1` with the ray along unit vector
/// `u`, as `(t, distance from origin)`.
///
/// A segment lying on the ray's supporting line reports its first endpoint
/// when that endpoint is on the positive half-line.
pub fn intersect(p0: Point, p1: Point, u: Point) -> Option<(f64, f64)> {
    let d = [p1[0] - p0[0], p1[1] - p0[1]];
    let denom = cross(d, u);
    if denom == 0.0 {
        if cross(p0, u) == 0.0 {
            let s = dot(p0, u);
            if s > 0.0 {
                return Some((0.0, s));
            }
        }
        return None;
    }
    let t = -cross(p0, u) / denom;
    if !(0.0..1.0).contains(&t) {
        return None;
    }
    let x = [p0[0] + t * d[0], p0[1] + t * d[1]];
    let s = dot(x, u);
    (s > 0.0).then_some((t, s))
}

/// All crossings of the trajectory `sproj` with the ray at `psi`.
pub fn radius_intersections(sproj: &[Point], psi: f64) -> RadiusSet {
    let u = direction(psi);
    let radii = sproj
        .windows(2)
        .filter_map(|w| intersect(w[0], w[1], u).map(|(_, s)| s))
        .collect();
    RadiusSet { psi, radii }
}

/// Precomputed directions of `r` evenly spaced rays.
#[derive(Debug, Clone, PartialEq)]
pub struct RayFan {
    dirs: Vec<Point>,
}

/// One crossing of a segment with a ray of the fan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentCrossing {
    pub t: f64,
    pub bucket: usize,
    pub radius: f64,
}

impl RayFan {
    pub fn new(r: usize) -> Self {
        RayFan {
            dirs: (0..r).map(|k| direction(ray_angle(k, r))).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }

    pub fn dir(&self, bucket: usize) -> Point {
        self.dirs[bucket]
    }

    /// Index of the ray angularly closest to `p`; a point exactly between
    /// two rays goes to the lower index.
    pub fn nearest_bucket(&self, p: Point) -> usize {
        let r = self.dirs.len();
        let x = angle_of(p) * r as f64 / TAU;
        let below = (x.floor() as usize).min(r - 1);
        let above = (below + 1) % r;
        let frac = x - below as f64;
        if frac < 0.5 {
            below
        } else if frac > 0.5 {
            above
        } else {
            below.min(above)
        }
    }

    /// Crossings of `p0 -> p1` with the fan, ordered along the segment.
    ///
    /// Only rays inside the swept angle (plus one ray of margin per side)
    /// are tested; each candidate uses the same exact test as
    /// [`radius_intersections`].
    pub fn segment_crossings(&self, p0: Point, p1: Point, out: &mut Vec<SegmentCrossing>) {
        out.clear();
        let r = self.dirs.len() as f64;
        let step = TAU / r;
        let a0 = angle_of(p0);
        let mut delta = angle_of(p1) - a0;
        if delta > std::f64::consts::PI {
            delta -= TAU;
        } else if delta < -std::f64::consts::PI {
            delta += TAU;
        }
        let (lo, hi) = if delta >= 0.0 {
            (a0, a0 + delta)
        } else {
            (a0 + delta, a0)
        };
        let first = (lo / step).floor() as i64 - 1;
        let last = (hi / step).ceil() as i64 + 1;
        let n = self.dirs.len() as i64;
        let span = (last - first + 1).min(n);
        for k in first..first + span {
            let bucket = k.rem_euclid(n) as usize;
            if let Some((t, radius)) = intersect(p0, p1, self.dirs[bucket]) {
                out.push(SegmentCrossing { t, bucket, radius });
            }
        }
        out.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.bucket.cmp(&b.bucket)));
    }
}
