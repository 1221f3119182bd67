//! Subsequence normality: queries become paths through the pattern graph and
//! a path is as normal as the weights and degrees of the edges it follows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{map_point_to_node, node_sequence, trajectory_crossings, Crossing, NodeId, PatternGraph};
use crate::series::{SubseqRef, TimeSeries};

/// Where a path came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathSource {
    Window(SubseqRef),
    External(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodePath {
    pub node_ids: Vec<NodeId>,
    pub source: PathSource,
    /// Some crossing had no node on its own ray, landed far from every node
    /// on it, or the query crossed no ray at all.
    pub low_confidence: bool,
}

/// Crossings farther than this many bandwidths from their node are flagged.
const LOW_CONFIDENCE_BANDWIDTHS: f64 = 3.0;

fn is_doubtful(g: &PatternGraph, c: &Crossing) -> bool {
    if c.fallback {
        return true;
    }
    let node = &g.nodes.nodes()[c.node as usize];
    match g.nodes.bandwidth(c.psi_index) {
        Some(h) => (c.radius - node.radius).abs() > LOW_CONFIDENCE_BANDWIDTHS * h,
        None => false,
    }
}

/// Maps a query to the sequence of nodes its embedded trajectory traverses.
pub fn time2path(g: &PatternGraph, q: &[f64]) -> Result<NodePath> {
    path_of(g, q, PathSource::External("query".into()))
}

/// [`time2path`] of the window `at` of `series`.
pub fn window_path(g: &PatternGraph, series: &TimeSeries, at: SubseqRef) -> Result<NodePath> {
    path_of(g, series.subsequence(at)?, PathSource::Window(at))
}

fn path_of(g: &PatternGraph, q: &[f64], source: PathSource) -> Result<NodePath> {
    let pts = g.embedding.embed(q)?;
    let crossings = trajectory_crossings(&pts, &g.nodes);
    let mut low_confidence = crossings.iter().any(|c| is_doubtful(g, c));
    let mut node_ids = node_sequence(&crossings, g.config.keep_self_loops);
    if node_ids.is_empty() {
        node_ids.push(map_point_to_node(&g.nodes, pts[0])?);
        low_confidence = true;
    }
    Ok(NodePath {
        node_ids,
        source,
        low_confidence,
    })
}

/// Sum of `w * (deg - 1)` over the steps of `path`, divided by `lq`.
/// Steps along edges absent from the graph contribute 0.
///
/// # Panics
/// If `lq` is 0.
pub fn path_normality(g: &PatternGraph, path: &[NodeId], lq: usize) -> f64 {
    assert!(lq >= 1, "query length must be positive");
    path_sum(g, path) as f64 / lq as f64
}

fn path_sum(g: &PatternGraph, path: &[NodeId]) -> u64 {
    path.windows(2).map(|w| g.step_value(w[0], w[1])).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityProfile {
    /// One score per window start `0..=|T| - lq`.
    pub scores: Vec<f64>,
    pub lq: usize,
    /// Graph subsequence length, also the smoothing window.
    pub l: usize,
    pub smoothed: bool,
}

impl NormalityProfile {
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn anomaly_scores(&self) -> impl Iterator<Item = f64> + '_ {
        self.scores.iter().map(|s| -s)
    }
}

/// Normality of every length-`lq` window of `series`, optionally smoothed with
/// a centered moving average of width `l`.
///
/// The whole series is embedded once. A window's path is the run of crossings
/// of the segments inside it, so each window costs two lookups in a prefix sum
/// of step values instead of an embedding of its own.
pub fn normality_profile(g: &PatternGraph, series: &TimeSeries, lq: usize, smooth: bool) -> Result<NormalityProfile> {
    let l = g.l();
    if lq < l {
        return Err(Error::QueryTooShort { query: lq, l });
    }
    if series.len() < lq {
        return Err(Error::InputTooShort {
            len: series.len(),
            required: lq,
        });
    }
    let pts = g.embedding.embed(series.values())?;
    let crossings = trajectory_crossings(&pts, &g.nodes);

    // prefix[k] = sum of step values of crossing pairs (j, j+1) with j < k
    let mut prefix = Vec::with_capacity(crossings.len() + 1);
    prefix.push(0u64);
    let mut acc = 0u64;
    for w in crossings.windows(2) {
        acc += g.step_value(w[0].node, w[1].node);
        prefix.push(acc);
    }

    let windows = series.len() - lq + 1;
    let span = lq - l;
    let mut scores = Vec::with_capacity(windows);
    let mut first = 0;
    let mut end = 0;
    for i in 0..windows {
        while first < crossings.len() && crossings[first].segment < i {
            first += 1;
        }
        while end < crossings.len() && crossings[end].segment < i + span {
            end += 1;
        }
        let sum = if end > first + 1 { prefix[end - 1] - prefix[first] } else { 0 };
        scores.push(sum as f64 / lq as f64);
    }
    if smooth {
        scores = moving_average(&scores, l);
    }
    Ok(NormalityProfile {
        scores,
        lq,
        l,
        smoothed: smooth,
    })
}

/// Centered moving average of width `w`. Near the ends the window shrinks
/// equally on both sides so it stays centered on its position.
pub fn moving_average(x: &[f64], w: usize) -> Vec<f64> {
    let n = x.len();
    if w <= 1 {
        return x.to_vec();
    }
    let before = (w - 1) / 2;
    let after = w / 2;
    (0..n)
        .map(|i| {
            let room = i.min(n - 1 - i);
            let (a, b) = if room >= after { (before, after) } else { (room.min(before), room) };
            let win = &x[i - a..=i + b];
            win.iter().sum::<f64>() / win.len() as f64
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedAnomaly {
    /// 1-based.
    pub rank: usize,
    pub position: usize,
    pub normality: f64,
}

impl RankedAnomaly {
    pub fn anomaly_score(&self) -> f64 {
        -self.normality
    }

    pub fn interval(&self, lq: usize) -> SubseqRef {
        SubseqRef::new(self.position, lq)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub anomalies: Vec<RankedAnomaly>,
    pub lq: usize,
    /// Fewer than the requested number of positions survived masking.
    pub truncated: bool,
}

impl Ranking {
    pub fn positions(&self) -> Vec<usize> {
        self.anomalies.iter().map(|a| a.position).collect()
    }
}

/// Picks `k` positions of lowest normality. After each pick every position
/// closer than `lq / 2` to it is masked.
pub fn rank_anomalies(profile: &NormalityProfile, k: usize) -> Result<Ranking> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let picks = masked_extremes(&profile.scores, profile.lq, k, |a, b| a < b);
    Ok(Ranking {
        truncated: picks.len() < k,
        anomalies: picks
            .into_iter()
            .enumerate()
            .map(|(r, p)| RankedAnomaly {
                rank: r + 1,
                position: p,
                normality: profile.scores[p],
            })
            .collect(),
        lq: profile.lq,
    })
}

/// Repeatedly takes the best unmasked position (`better(a, b)` when `a` beats
/// `b`, ties to the lower position) and masks everything within `2|p - q| < len`.
pub(crate) fn masked_extremes(
    scores: &[f64],
    len: usize,
    k: usize,
    better: impl Fn(f64, f64) -> bool,
) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        if better(scores[a], scores[b]) {
            std::cmp::Ordering::Less
        } else if better(scores[b], scores[a]) {
            std::cmp::Ordering::Greater
        } else {
            a.cmp(&b)
        }
    });
    let mut masked = vec![false; scores.len()];
    let reach = len.div_ceil(2);
    let mut picks = Vec::with_capacity(k);
    for p in order {
        if picks.len() == k {
            break;
        }
        if masked[p] {
            continue;
        }
        picks.push(p);
        let lo = p.saturating_sub(reach.saturating_sub(1));
        let hi = (p + reach).min(scores.len());
        masked[lo..hi].iter_mut().for_each(|m| *m = true);
    }
    picks
}
