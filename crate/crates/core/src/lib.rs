//! Series2Graph: graph-based subsequence anomaly detection.
//!
//! A series is embedded into a 2-D shape plane, the plane is cut by a fan of
//! rays whose density peaks become graph nodes, and the transitions of the
//! series between nodes become weighted edges. Subsequences that follow rare
//! edges score low normality.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod datagen;
pub mod discord;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod graph;
pub mod io;
pub mod scoring;
pub mod series;

pub use datagen::{generate_srw, SrwMetadata, SrwSpec};
pub use discord::{nn_profile, top_discords, Discords, NnProfile};
pub use embedding::{build_embedding, embed_query, ConvolutionParams, EmbeddingModel, ShapeEmbedding};
pub use error::{Error, Result};
pub use eval::{sweep, top_k_accuracy, EvalReport, SweepSpec};
pub use graph::{
    build_graph, build_graph_with, theta_subgraphs, to_dot, Bandwidth, DegreeMode, GraphConfig, NodeId, PatternGraph,
};
pub use scoring::{
    moving_average, normality_profile, path_normality, rank_anomalies, time2path, NodePath, NormalityProfile,
    Ranking,
};
pub use series::{AnnotationSet, SubseqRef, TimeSeries};
