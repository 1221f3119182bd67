//! The pattern graph: nodes are density maxima of the shape trajectory's
//! crossings with a fan of rays, edges count transitions between the nodes
//! visited by consecutive crossings.

mod edges;
mod export;
pub mod geometry;
pub mod kde;
mod nodes;

pub use edges::{count_edges, extract_edges, node_sequence, trajectory_crossings, Crossing, EdgeMap};
pub use export::{to_dot, ExportEdge, ExportMeta, ExportNode, GraphExport, GRAPH_FORMAT_VERSION};
pub use geometry::{radius_intersections, RadiusSet};
pub use kde::{kde_local_maxima, scott_bandwidth, Bandwidth, DEFAULT_GRID_POINTS};
pub use nodes::{extract_nodes, map_point_to_node, radius_sets, NodeId, NodeSet, PatternNode};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::embedding::{build_embedding_with, ConvolutionParams, EmbeddingModel, PcaSolver, Point, ShapeEmbedding};
use crate::error::{Error, Result};
use crate::series::TimeSeries;

pub const DEFAULT_RAYS: usize = 50;

/// How `deg(N)` is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreeMode {
    /// Distinct incident edges, incoming and outgoing (`A->B` and `B->A`
    /// count twice, a self-loop once).
    #[default]
    DistinctEdges,
    /// Distinct neighbouring nodes, ignoring direction and self-loops.
    DistinctNeighbors,
}

impl std::str::FromStr for DegreeMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "edges" | "distinct_edges" => Ok(DegreeMode::DistinctEdges),
            "neighbors" | "distinct_neighbors" => Ok(DegreeMode::DistinctNeighbors),
            _ => Err(Error::InvalidParameter(format!(
                "degree mode must be `edges` or `neighbors`, got `{s}`"
            ))),
        }
    }
}

/// Everything that determines a built graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphConfig {
    pub l: usize,
    pub lambda: usize,
    pub r: usize,
    pub seed: u64,
    pub bandwidth: Bandwidth,
    pub keep_self_loops: bool,
    pub degree_mode: DegreeMode,
    pub kde_grid: usize,
    pub pca_solver: PcaSolver,
}

impl GraphConfig {
    /// Defaults: `lambda = floor(l/3)`, 50 rays, Scott bandwidth, seed 42.
    pub fn new(l: usize) -> Self {
        GraphConfig {
            l,
            lambda: (l / 3).max(1),
            r: DEFAULT_RAYS,
            seed: 42,
            bandwidth: Bandwidth::Scott,
            keep_self_loops: false,
            degree_mode: DegreeMode::DistinctEdges,
            kde_grid: DEFAULT_GRID_POINTS,
            pca_solver: PcaSolver::Auto,
        }
    }

    pub fn with_r(mut self, r: usize) -> Self {
        self.r = r;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_lambda(mut self, lambda: usize) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_bandwidth(mut self, bandwidth: Bandwidth) -> Self {
        self.bandwidth = bandwidth;
        self
    }

    pub fn conv_params(&self) -> Result<ConvolutionParams> {
        ConvolutionParams::new(self.l, self.lambda)
    }
}

/// Directed weighted graph of recurring shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternGraph {
    pub config: GraphConfig,
    pub embedding: EmbeddingModel,
    /// Training trajectory; empty for graphs loaded from disk.
    pub sproj: Vec<Point>,
    pub nodes: NodeSet,
    pub edges: EdgeMap,
    pub node_sequence: Vec<NodeId>,
    degrees: Vec<u32>,
}

/// A subset of a graph's edges and the nodes they touch.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Subgraph {
    pub nodes: BTreeSet<NodeId>,
    pub edges: BTreeMap<(NodeId, NodeId), u64>,
}

fn degrees_of(node_count: usize, edges: &EdgeMap, mode: DegreeMode) -> Vec<u32> {
    let mut deg = vec![0u32; node_count];
    match mode {
        DegreeMode::DistinctEdges => {
            for &(a, b) in edges.keys() {
                deg[a as usize] += 1;
                if a != b {
                    deg[b as usize] += 1;
                }
            }
        }
        DegreeMode::DistinctNeighbors => {
            let mut neigh: Vec<BTreeSet<NodeId>> = vec![BTreeSet::new(); node_count];
            for &(a, b) in edges.keys() {
                if a != b {
                    neigh[a as usize].insert(b);
                    neigh[b as usize].insert(a);
                }
            }
            for (d, n) in deg.iter_mut().zip(neigh) {
                *d = n.len() as u32;
            }
        }
    }
    deg
}

impl PatternGraph {
    /// Assembles a graph from its parts and derives the degree table.
    pub fn from_parts(
        config: GraphConfig,
        embedding: EmbeddingModel,
        sproj: Vec<Point>,
        nodes: NodeSet,
        edges: EdgeMap,
        node_sequence: Vec<NodeId>,
    ) -> Result<Self> {
        let n = nodes.len() as NodeId;
        if let Some(&(a, b)) = edges.keys().find(|(a, b)| *a >= n || *b >= n) {
            return Err(Error::InvalidParameter(format!("edge ({a}, {b}) references a missing node")));
        }
        if let Some(&id) = node_sequence.iter().find(|&&id| id >= n) {
            return Err(Error::InvalidParameter(format!("node sequence references missing node {id}")));
        }
        let degrees = degrees_of(nodes.len(), &edges, config.degree_mode);
        Ok(PatternGraph {
            config,
            embedding,
            sproj,
            nodes,
            edges,
            node_sequence,
            degrees,
        })
    }

    pub fn l(&self) -> usize {
        self.config.l
    }

    pub fn weight(&self, src: NodeId, dst: NodeId) -> u64 {
        self.edges.get(&(src, dst)).copied().unwrap_or(0)
    }

    pub fn degree(&self, id: NodeId) -> u32 {
        self.degrees[id as usize]
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    /// `w(src, dst) * (deg(src) - 1)`, zero for absent edges.
    pub fn step_value(&self, src: NodeId, dst: NodeId) -> u64 {
        self.weight(src, dst) * u64::from(self.degree(src).saturating_sub(1))
    }

    pub fn total_weight(&self) -> u64 {
        self.edges.values().sum()
    }

    /// Same graph with every edge weight multiplied by `c`.
    pub fn scaled_weights(&self, c: u64) -> PatternGraph {
        let mut g = self.clone();
        g.edges.values_mut().for_each(|w| *w *= c);
        g
    }
}

/// Builds the pattern graph of `series` with default settings for `l`.
pub fn build_graph(series: &TimeSeries, l: usize, r: usize, seed: u64) -> Result<PatternGraph> {
    build_graph_with(series, &GraphConfig::new(l).with_r(r).with_seed(seed))
}

pub fn build_graph_with(series: &TimeSeries, config: &GraphConfig) -> Result<PatternGraph> {
    let params = config.conv_params()?;
    let ShapeEmbedding { model, sproj } = build_embedding_with(series, params, config.seed, config.pca_solver)?;
    let nodes = extract_nodes(&sproj, config.r, config.bandwidth, config.kde_grid)?;
    let (seq, edges) = extract_edges(&sproj, &nodes, config.keep_self_loops);
    PatternGraph::from_parts(*config, model, sproj, nodes, edges, seq)
}

/// Splits the edges into the theta-normality subgraph (edges with
/// `w * (deg(src) - 1) >= theta`) and its complement.
pub fn theta_subgraphs(g: &PatternGraph, theta: u64) -> (Subgraph, Subgraph) {
    let mut normal = Subgraph::default();
    let mut anomalous = Subgraph::default();
    for (&(a, b), &w) in &g.edges {
        let target = if g.step_value(a, b) >= theta {
            &mut normal
        } else {
            &mut anomalous
        };
        target.edges.insert((a, b), w);
        target.nodes.insert(a);
        target.nodes.insert(b);
    }
    (normal, anomalous)
}
