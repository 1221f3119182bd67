use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::nodes::{NodeId, NodeSet};
use crate::embedding::Point;

pub type EdgeMap = BTreeMap<(NodeId, NodeId), u64>;

/// A ray crossing of a trajectory and the node it was assigned to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    /// Index of the segment `sproj[segment] -> sproj[segment + 1]`.
    pub segment: usize,
    pub psi_index: usize,
    pub radius: f64,
    pub node: NodeId,
    /// The crossing's own ray had no node.
    pub fallback: bool,
}

const CHUNK_SEGMENTS: usize = 4096;

/// Every crossing of `sproj` with the node set's rays, in trajectory order.
pub fn trajectory_crossings(sproj: &[Point], nodes: &NodeSet) -> Vec<Crossing> {
    let segments = sproj.len().saturating_sub(1);
    let chunks: Vec<Vec<Crossing>> = (0..segments.div_ceil(CHUNK_SEGMENTS))
        .into_par_iter()
        .map(|c| {
            let mut out = Vec::new();
            let mut buf = Vec::new();
            for segment in c * CHUNK_SEGMENTS..((c + 1) * CHUNK_SEGMENTS).min(segments) {
                nodes.crossings(sproj[segment], sproj[segment + 1], &mut buf);
                for x in &buf {
                    let (node, fallback) = nodes.membership(x.bucket, x.radius);
                    out.push(Crossing {
                        segment,
                        psi_index: x.bucket,
                        radius: x.radius,
                        node,
                        fallback,
                    });
                }
            }
            out
        })
        .collect();
    chunks.concat()
}

/// Node ids of `crossings`, with consecutive repeats removed unless
/// `keep_self_loops`.
pub fn node_sequence(crossings: &[Crossing], keep_self_loops: bool) -> Vec<NodeId> {
    let mut seq: Vec<NodeId> = crossings.iter().map(|c| c.node).collect();
    if !keep_self_loops {
        seq.dedup();
    }
    seq
}

/// Transition counts between consecutive entries of `seq`.
pub fn count_edges(seq: &[NodeId]) -> EdgeMap {
    let mut edges = EdgeMap::new();
    for w in seq.windows(2) {
        *edges.entry((w[0], w[1])).or_insert(0) += 1;
    }
    edges
}

/// Walks the trajectory through the rays and returns the node sequence and
/// the weighted edge multiset.
pub fn extract_edges(sproj: &[Point], nodes: &NodeSet, keep_self_loops: bool) -> (Vec<NodeId>, EdgeMap) {
    let seq = node_sequence(&trajectory_crossings(sproj, nodes), keep_self_loops);
    let edges = count_edges(&seq);
    (seq, edges)
}
