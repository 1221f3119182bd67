use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{top_k_accuracy, EvalReport};
use crate::datagen::{generate_srw, SrwSpec};
use crate::error::{Error, Result};
use crate::graph::{build_graph_with, Bandwidth, GraphConfig, DEFAULT_RAYS};
use crate::io::{load_annotations, load_series};
use crate::scoring::{normality_profile, rank_anomalies};
use crate::series::{AnnotationSet, TimeSeries};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSpec {
    Srw(SrwSpec),
    Files { series: PathBuf, annotations: PathBuf },
}

impl DatasetSpec {
    /// Loads or generates the dataset; `noise_pct` overrides a generated
    /// dataset's noise level.
    pub fn materialize(&self, noise_pct: Option<f64>) -> Result<(String, TimeSeries, AnnotationSet)> {
        match self {
            DatasetSpec::Srw(spec) => {
                let mut spec = spec.clone();
                if let Some(n) = noise_pct {
                    spec.noise_pct = n;
                }
                let (t, a) = generate_srw(&spec)?;
                Ok((spec.label(), t, a))
            }
            DatasetSpec::Files { series, annotations } => {
                if noise_pct.is_some() {
                    return Err(Error::InvalidParameter("the noise axis needs a generated dataset".into()));
                }
                let t = load_series(series)?;
                let a = load_annotations(annotations)?.restricted_to(t.len());
                Ok((t.name().to_string(), t, a))
            }
        }
    }
}

/// A parameter grid. Empty axes fall back to a single default value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub dataset: DatasetSpec,
    pub l: Vec<usize>,
    /// Query lengths; empty means `lq = l`.
    #[serde(default)]
    pub lq: Vec<usize>,
    #[serde(default)]
    pub bandwidth: Vec<Bandwidth>,
    /// Fractions of the series the graph is built on.
    #[serde(default)]
    pub prefix: Vec<f64>,
    #[serde(default)]
    pub noise_pct: Vec<f64>,
    #[serde(default = "default_rays")]
    pub r: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Predictions per run; defaults to the number of annotations.
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default = "default_true")]
    pub smooth: bool,
}

fn default_rays() -> usize {
    DEFAULT_RAYS
}

fn default_seed() -> u64 {
    42
}

fn default_true() -> bool {
    true
}

impl SweepSpec {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Serde(e.to_string()))
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Reads a `.json` file as JSON and anything else as TOML.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if path.extension().is_some_and(|e| e == "json") {
            Self::from_json_str(&text)
        } else {
            Self::from_toml_str(&text)
        }
    }

    /// Cartesian product of the axes in `noise, l, lq, bandwidth, prefix`
    /// order.
    pub fn grid(&self) -> Vec<GridPoint> {
        let noise: Vec<Option<f64>> = if self.noise_pct.is_empty() {
            vec![None]
        } else {
            self.noise_pct.iter().copied().map(Some).collect()
        };
        let bandwidths = if self.bandwidth.is_empty() {
            vec![Bandwidth::Scott]
        } else {
            self.bandwidth.clone()
        };
        let prefixes = if self.prefix.is_empty() { vec![1.0] } else { self.prefix.clone() };
        let mut out = Vec::new();
        for &noise_pct in &noise {
            for &l in &self.l {
                let lqs = if self.lq.is_empty() { vec![l] } else { self.lq.clone() };
                for &lq in &lqs {
                    for &bandwidth in &bandwidths {
                        for &prefix in &prefixes {
                            out.push(GridPoint {
                                l,
                                lq,
                                bandwidth,
                                prefix,
                                noise_pct,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub l: usize,
    pub lq: usize,
    pub bandwidth: Bandwidth,
    pub prefix: f64,
    pub noise_pct: Option<f64>,
}

impl GridPoint {
    fn params(&self, r: usize, seed: u64) -> BTreeMap<String, serde_json::Value> {
        let mut p = BTreeMap::new();
        p.insert("l".into(), json!(self.l));
        p.insert("lq".into(), json!(self.lq));
        p.insert("bandwidth".into(), json!(self.bandwidth.to_string()));
        p.insert("prefix".into(), json!(self.prefix));
        p.insert("r".into(), json!(r));
        p.insert("seed".into(), json!(seed));
        if let Some(n) = self.noise_pct {
            p.insert("noise_pct".into(), json!(n));
        }
        p
    }
}

/// Builds the graph on the prefix, scores the whole series, ranks `k`
/// positions and evaluates them.
pub fn run_point(
    series: &TimeSeries,
    annotations: &AnnotationSet,
    point: &GridPoint,
    r: usize,
    seed: u64,
    k: usize,
    smooth: bool,
) -> Result<EvalReport> {
    if !(point.prefix > 0.0 && point.prefix <= 1.0) {
        return Err(Error::InvalidParameter(format!("prefix fraction must lie in (0, 1], got {}", point.prefix)));
    }
    let config = GraphConfig::new(point.l)
        .with_r(r)
        .with_seed(seed)
        .with_bandwidth(point.bandwidth);
    let started = Instant::now();
    let train_len = (series.len() as f64 * point.prefix).floor() as usize;
    let train = if train_len >= series.len() {
        series.clone()
    } else {
        series.prefix(train_len)?
    };
    let graph = build_graph_with(&train, &config)?;
    let profile = normality_profile(&graph, series, point.lq, smooth)?;
    let ranking = rank_anomalies(&profile, k)?;
    let elapsed = started.elapsed().as_secs_f64() * 1e3;
    let mut report = top_k_accuracy(&ranking.positions(), annotations, k, point.lq);
    report.wall_time_ms = elapsed;
    report.params = point.params(r, seed);
    report.params.insert("truncated".into(), json!(ranking.truncated));
    Ok(report.with_labels(series.name(), "series2graph"))
}

/// Runs every grid point in parallel; reports come back in grid order and a
/// failing point is reported rather than aborting the sweep.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<EvalReport>> {
    if spec.l.is_empty() {
        return Err(Error::InvalidParameter("sweep needs at least one value of l".into()));
    }
    let grid = spec.grid();
    let mut noises: Vec<Option<f64>> = grid.iter().map(|p| p.noise_pct).collect();
    noises.dedup();
    let datasets: Vec<(Option<f64>, String, TimeSeries, AnnotationSet)> = noises
        .into_par_iter()
        .map(|n| spec.dataset.materialize(n).map(|(name, t, a)| (n, name, t, a)))
        .collect::<Result<_>>()?;
    Ok(grid
        .par_iter()
        .map(|point| {
            let (_, name, t, a) = datasets
                .iter()
                .find(|d| d.0 == point.noise_pct)
                .expect("every noise level was materialized");
            let k = spec.k.unwrap_or(a.len()).max(1);
            run_point(t, a, point, spec.r, spec.seed, k, spec.smooth)
                .map(|rep| rep.with_labels(name, "series2graph"))
                .unwrap_or_else(|e| {
                    EvalReport::failed(name, "series2graph", k, point.params(spec.r, spec.seed), e.to_string())
                })
        })
        .collect())
}
