use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::geometry::{ray_angle, RadiusSet, RayFan, SegmentCrossing};
use super::kde::{kde_local_maxima, Bandwidth};
use crate::embedding::Point;
use crate::error::{Error, Result};
use crate::series::mean_std;

pub type NodeId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternNode {
    pub id: NodeId,
    pub psi_index: usize,
    pub radius: f64,
}

/// Pattern nodes grouped by ray. Ids are assigned in `(psi_index, radius)`
/// order, so the nodes of one ray occupy a contiguous id range.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSet {
    r: usize,
    nodes: Vec<PatternNode>,
    buckets: Vec<Range<usize>>,
    /// Kernel bandwidth used on each ray; `None` for empty or degenerate
    /// radius sets.
    bandwidths: Vec<Option<f64>>,
    fan: RayFan,
}

impl NodeSet {
    /// Rebuilds a node set from `(psi_index, radius)` pairs.
    pub fn from_parts(r: usize, mut positions: Vec<(usize, f64)>, bandwidths: Vec<Option<f64>>) -> Result<Self> {
        if r < 3 {
            return Err(Error::InvalidParameter(format!("need at least 3 rays, got {r}")));
        }
        if bandwidths.len() != r {
            return Err(Error::InvalidParameter(format!(
                "expected {r} bandwidth entries, got {}",
                bandwidths.len()
            )));
        }
        for &(psi, radius) in &positions {
            if psi >= r || !(radius > 0.0) || !radius.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "invalid node position (psi_index={psi}, radius={radius})"
                )));
            }
        }
        positions.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
        positions.dedup();
        let nodes: Vec<PatternNode> = positions
            .into_iter()
            .enumerate()
            .map(|(id, (psi_index, radius))| PatternNode {
                id: id as NodeId,
                psi_index,
                radius,
            })
            .collect();
        let mut buckets = vec![0..0; r];
        let mut start = 0;
        for (k, b) in buckets.iter_mut().enumerate() {
            let end = start + nodes[start..].iter().take_while(|n| n.psi_index == k).count();
            *b = start..end;
            start = end;
        }
        Ok(NodeSet {
            r,
            nodes,
            buckets,
            bandwidths,
            fan: RayFan::new(r),
        })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn nodes(&self) -> &[PatternNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn bucket(&self, psi_index: usize) -> &[PatternNode] {
        &self.nodes[self.buckets[psi_index].clone()]
    }

    pub fn bandwidths(&self) -> &[Option<f64>] {
        &self.bandwidths
    }

    pub fn bandwidth(&self, psi_index: usize) -> Option<f64> {
        self.bandwidths[psi_index]
    }

    pub fn fan(&self) -> &RayFan {
        &self.fan
    }

    /// Planar position of a node.
    pub fn position(&self, id: NodeId) -> Point {
        let n = &self.nodes[id as usize];
        let u = self.fan.dir(n.psi_index);
        [n.radius * u[0], n.radius * u[1]]
    }

    /// Closest node on ray `psi_index` to a crossing at distance `radius`,
    /// ties toward the smaller id. Falls back to all rays (see
    /// [`NodeSet::nearest_by_projection`]) when that ray has no node; the
    /// flag reports the fallback.
    pub fn membership(&self, psi_index: usize, radius: f64) -> (NodeId, bool) {
        let bucket = self.bucket(psi_index);
        if bucket.is_empty() {
            let u = self.fan.dir(psi_index);
            return (self.nearest_by_projection([radius * u[0], radius * u[1]]), true);
        }
        (argmin_by(bucket, |n| (radius - n.radius).abs()), false)
    }

    /// Node minimizing `|<x, u_psi(n)> - radius(n)|` over every node.
    pub fn nearest_by_projection(&self, x: Point) -> NodeId {
        argmin_by(&self.nodes, |n| {
            let u = self.fan.dir(n.psi_index);
            (x[0] * u[0] + x[1] * u[1] - n.radius).abs()
        })
    }

    pub(crate) fn crossings(&self, p0: Point, p1: Point, out: &mut Vec<SegmentCrossing>) {
        self.fan.segment_crossings(p0, p1, out)
    }
}

fn argmin_by(nodes: &[PatternNode], key: impl Fn(&PatternNode) -> f64) -> NodeId {
    let mut best = nodes[0].id;
    let mut best_key = key(&nodes[0]);
    for n in &nodes[1..] {
        let k = key(n);
        if k < best_key {
            best = n.id;
            best_key = k;
        }
    }
    best
}

/// Maps a point to a node: the ray angularly closest to `x`, then the node
/// on that ray whose radius is closest to the projection `<x, u_psi>`.
pub fn map_point_to_node(nodes: &NodeSet, x: Point) -> Result<NodeId> {
    if nodes.is_empty() {
        return Err(Error::InvalidParameter("empty node set".into()));
    }
    let psi = nodes.fan.nearest_bucket(x);
    let u = nodes.fan.dir(psi);
    let proj = x[0] * u[0] + x[1] * u[1];
    let bucket = nodes.bucket(psi);
    if bucket.is_empty() {
        return Ok(nodes.nearest_by_projection(x));
    }
    Ok(argmin_by(bucket, |n| (proj - n.radius).abs()))
}

/// Radius sets of every ray of a fan of `r` rays.
pub fn radius_sets(sproj: &[Point], r: usize) -> Vec<RadiusSet> {
    let fan = RayFan::new(r);
    let mut sets: Vec<RadiusSet> = (0..r)
        .map(|k| RadiusSet {
            psi: ray_angle(k, r),
            radii: Vec::new(),
        })
        .collect();
    let mut buf = Vec::new();
    for w in sproj.windows(2) {
        fan.segment_crossings(w[0], w[1], &mut buf);
        for c in &buf {
            sets[c.bucket].radii.push(c.radius);
        }
    }
    sets
}

/// Node positions of one radius set.
fn bucket_nodes(radii: &[f64], bandwidth: Bandwidth, grid: usize) -> (Vec<f64>, Option<f64>) {
    if radii.is_empty() {
        return (Vec::new(), None);
    }
    match bandwidth.resolve(radii) {
        Ok(h) if h > 0.0 => {
            let maxima = kde_local_maxima(radii, h, grid)
                .into_iter()
                .filter(|&x| x > 0.0)
                .collect::<Vec<_>>();
            if maxima.is_empty() {
                (vec![mean_std(radii).0], Some(h))
            } else {
                (maxima, Some(h))
            }
        }
        _ => (vec![mean_std(radii).0], None),
    }
}

/// Extracts pattern nodes: one node per density maximum of every ray's
/// radius set.
pub fn extract_nodes(sproj: &[Point], r: usize, bandwidth: Bandwidth, grid: usize) -> Result<NodeSet> {
    if r < 3 {
        return Err(Error::InvalidParameter(format!("need at least 3 rays, got {r}")));
    }
    if sproj.len() < 2 {
        return Err(Error::InputTooShort {
            len: sproj.len(),
            required: 2,
        });
    }
    let sets = radius_sets(sproj, r);
    if sets.iter().all(|s| s.is_empty()) {
        return Err(Error::EmptyProjection);
    }
    let per_bucket: Vec<(Vec<f64>, Option<f64>)> = sets
        .par_iter()
        .map(|s| bucket_nodes(&s.radii, bandwidth, grid))
        .collect();
    let mut positions = Vec::new();
    let mut bandwidths = Vec::with_capacity(r);
    for (k, (radii, h)) in per_bucket.into_iter().enumerate() {
        positions.extend(radii.into_iter().map(|x| (k, x)));
        bandwidths.push(h);
    }
    NodeSet::from_parts(r, positions, bandwidths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::kde::DEFAULT_GRID_POINTS;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    fn circle(points_per_turn: usize, turns: usize, radius: f64) -> Vec<Point> {
        (0..points_per_turn * turns + 1)
            .map(|i| {
                let a = i as f64 * TAU / points_per_turn as f64 + 0.013;
                [radius * a.cos(), radius * a.sin()]
            })
            .collect()
    }

    #[test]
    fn circle_gives_one_node_per_ray() {
        let pts = circle(360, 5, 1.0);
        let nodes = extract_nodes(&pts, 50, Bandwidth::Scott, DEFAULT_GRID_POINTS).unwrap();
        assert_eq!(nodes.len(), 50);
        for k in 0..50 {
            let b = nodes.bucket(k);
            assert_eq!(b.len(), 1);
            // chords of a 360-gon stay within cos(pi/360) of the circle
            assert!((b[0].radius - 1.0).abs() < 1e-3, "{}", b[0].radius);
        }
    }

    #[test]
    fn collapsed_projection_is_an_error() {
        let pts = vec![[0.0, 0.0]; 10];
        assert!(matches!(
            extract_nodes(&pts, 50, Bandwidth::Scott, DEFAULT_GRID_POINTS),
            Err(Error::EmptyProjection)
        ));
    }

    #[test]
    fn deterministic_ids_in_lexicographic_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<Point> = (0..2000)
            .map(|i| {
                let a = i as f64 * 0.1;
                let r = if (i / 300) % 2 == 0 { 1.0 } else { 2.0 };
                [r * a.cos() + rng.random_range(-0.05..0.05), r * a.sin()]
            })
            .collect();
        let a = extract_nodes(&pts, 20, Bandwidth::Scott, 512).unwrap();
        let b = extract_nodes(&pts, 20, Bandwidth::Scott, 512).unwrap();
        assert_eq!(a, b);
        for w in a.nodes().windows(2) {
            assert!((w[0].psi_index, w[0].radius) < (w[1].psi_index, w[1].radius));
            assert_eq!(w[0].id + 1, w[1].id);
        }
        assert!(a.bucket(3).len() >= 2);
    }

    fn ring_nodes() -> NodeSet {
        let r = 50;
        let positions = (0..r)
            .flat_map(|k| [1.0, 2.0, 3.0].map(|x| (k, x)))
            .collect();
        NodeSet::from_parts(r, positions, vec![Some(0.1); r]).unwrap()
    }

    #[test]
    fn exact_hit_and_tie() {
        let nodes = ring_nodes();
        for id in [0u32, 17, 149] {
            let p = nodes.position(id);
            assert_eq!(map_point_to_node(&nodes, p).unwrap(), id);
        }
        for (frac, ray) in [(0.499, 0), (0.501, 1)] {
            let a = frac * TAU / 50.0;
            let id = map_point_to_node(&nodes, [2.0 * a.cos(), 2.0 * a.sin()]).unwrap();
            assert_eq!(nodes.nodes()[id as usize].psi_index, ray);
        }
        // radius tie between 1 and 2 goes to the smaller id
        let id = map_point_to_node(&nodes, [1.5, 0.0]).unwrap();
        assert_eq!(id, 0);
    }

    #[test]
    fn mapping_against_brute_force() {
        let nodes = ring_nodes();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut euclid_agree = 0;
        for _ in 0..1000 {
            let a = rng.random_range(0.0..TAU);
            let rad = rng.random_range(0.5..3.5);
            let x = [rad * a.cos(), rad * a.sin()];
            let got = map_point_to_node(&nodes, x).unwrap();

            // scalar-criterion definition, written out directly
            let psi = (0..50)
                .min_by(|&i, &j| {
                    let di = angular_gap(a, i as f64 * TAU / 50.0);
                    let dj = angular_gap(a, j as f64 * TAU / 50.0);
                    di.total_cmp(&dj).then(i.cmp(&j))
                })
                .unwrap();
            let u = [(psi as f64 * TAU / 50.0).cos(), (psi as f64 * TAU / 50.0).sin()];
            let proj = x[0] * u[0] + x[1] * u[1];
            let expect = nodes
                .bucket(psi)
                .iter()
                .min_by(|m, n| (proj - m.radius).abs().total_cmp(&(proj - n.radius).abs()))
                .unwrap()
                .id;
            assert_eq!(got, expect);

            let euclid = nodes
                .nodes()
                .iter()
                .min_by(|m, n| {
                    let pm = nodes.position(m.id);
                    let pn = nodes.position(n.id);
                    let dm = (pm[0] - x[0]).hypot(pm[1] - x[1]);
                    let dn = (pn[0] - x[0]).hypot(pn[1] - x[1]);
                    dm.total_cmp(&dn)
                })
                .unwrap()
                .id;
            if euclid == got {
                euclid_agree += 1;
            }
        }
        assert!(euclid_agree >= 950, "{euclid_agree}");
    }

    fn angular_gap(a: f64, b: f64) -> f64 {
        let d = (a - b).rem_euclid(TAU);
        d.min(TAU - d)
    }

    #[test]
    fn empty_bucket_falls_back() {
        let nodes = NodeSet::from_parts(4, vec![(0, 1.0), (2, 5.0)], vec![None; 4]).unwrap();
        assert_eq!(map_point_to_node(&nodes, [0.0, 1.0]).unwrap(), 0);
        let (id, fallback) = nodes.membership(1, 1.0);
        assert!(fallback);
        assert_eq!(id, 0);
        let (id, fallback) = nodes.membership(2, 4.0);
        assert!(!fallback);
        assert_eq!(id, 1);
    }
}
