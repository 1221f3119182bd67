//! DOT and JSON views of a pattern graph, plus the on-disk graph file.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{EdgeMap, GraphConfig, NodeId, NodeSet, PatternGraph};
use crate::embedding::EmbeddingModel;
use crate::error::{Error, Result};

pub const GRAPH_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportNode {
    pub id: NodeId,
    pub psi_index: usize,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportEdge {
    pub src: NodeId,
    pub dst: NodeId,
    pub weight: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportMeta {
    pub l: usize,
    pub lambda: usize,
    pub r: usize,
    pub seed: u64,
}

/// `{nodes: [...], edges: [...], meta: {...}}`, sorted by id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphExport {
    pub nodes: Vec<ExportNode>,
    pub edges: Vec<ExportEdge>,
    pub meta: ExportMeta,
}

/// Full graph file: the export view plus what scoring needs.
#[derive(Serialize, Deserialize)]
struct GraphFile {
    version: u32,
    #[serde(flatten)]
    graph: GraphExport,
    config: GraphConfig,
    bandwidths: Vec<Option<f64>>,
    node_sequence: Vec<NodeId>,
    embedding: EmbeddingModel,
}

impl PatternGraph {
    pub fn export(&self) -> GraphExport {
        GraphExport {
            nodes: self
                .nodes
                .nodes()
                .iter()
                .map(|n| ExportNode {
                    id: n.id,
                    psi_index: n.psi_index,
                    radius: n.radius,
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|(&(src, dst), &weight)| ExportEdge { src, dst, weight })
                .collect(),
            meta: ExportMeta {
                l: self.config.l,
                lambda: self.config.lambda,
                r: self.config.r,
                seed: self.config.seed,
            },
        }
    }

    pub fn export_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.export())?)
    }

    /// Serializes the graph with its embedding model.
    pub fn to_json(&self) -> Result<String> {
        let file = GraphFile {
            version: GRAPH_FORMAT_VERSION,
            graph: self.export(),
            config: self.config,
            bandwidths: self.nodes.bandwidths().to_vec(),
            node_sequence: self.node_sequence.clone(),
            embedding: self.embedding.clone(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(s: &str) -> Result<PatternGraph> {
        let file: GraphFile = serde_json::from_str(s)?;
        if file.version != GRAPH_FORMAT_VERSION {
            return Err(Error::Version {
                found: file.version,
                expected: GRAPH_FORMAT_VERSION,
            });
        }
        file.embedding.check_version()?;
        let positions: Vec<(usize, f64)> = file.graph.nodes.iter().map(|n| (n.psi_index, n.radius)).collect();
        let nodes = NodeSet::from_parts(file.config.r, positions, file.bandwidths)?;
        for (k, n) in file.graph.nodes.iter().enumerate() {
            if n.id as usize != k || nodes.nodes()[k].radius != n.radius {
                return Err(Error::Serde(format!("node {} out of canonical order", n.id)));
            }
        }
        let edges: EdgeMap = file
            .graph
            .edges
            .iter()
            .map(|e| ((e.src, e.dst), e.weight))
            .collect();
        PatternGraph::from_parts(file.config, file.embedding, Vec::new(), nodes, edges, file.node_sequence)
    }
}

/// Graphviz rendering; pen width grows with the log of the edge weight.
pub fn to_dot(g: &PatternGraph) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph series2graph {{");
    let _ = writeln!(out, "  node [shape=circle];");
    for n in g.nodes.nodes() {
        let _ = writeln!(out, "  n{} [label=\"psi{}_r{:.4}\"];", n.id, n.psi_index, n.radius);
    }
    for (&(src, dst), &w) in &g.edges {
        let pen = 1.0 + (w as f64).ln();
        let _ = writeln!(out, "  n{src} -> n{dst} [weight={w}, penwidth={pen:.3}];");
    }
    let _ = writeln!(out, "}}");
    out
}
