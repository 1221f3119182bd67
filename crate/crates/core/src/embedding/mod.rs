//! Shape embedding: every length-`l` subsequence becomes a point in a 2-D
//! plane where subsequences of similar shape land close together regardless
//! of their mean.
//!
//! The pipeline is a local convolution, a 3-component PCA, and a rotation
//! that sends the direction of constant subsequences onto the first axis.
//! The remaining two rotated coordinates `(r_y, r_z)` are kept.

mod convolution;
mod pca;
pub mod rotation;

pub use convolution::{rolling_convolution, ConvolutionParams};
pub use pca::{fit_pca3, fit_pca3_with, Pca3Model, PcaSolver, EXACT_MAX_WIDTH};
pub use rotation::Mat3;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;
use convolution::window_sums;
use pca::Hankel;

pub const EMBEDDING_FORMAT_VERSION: u32 = 1;

/// A point of the shape plane, `(r_y, r_z)`.
pub type Point = [f64; 2];

/// The fitted transform. Applying it never refits anything.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingModel {
    pub version: u32,
    pub params: ConvolutionParams,
    pub pca: Pca3Model,
    pub rotation: Mat3,
    /// Image of the constant direction in PCA coordinates.
    pub v_ref: [f64; 3],
    /// Level subtracted from every convolved entry before projecting. Any
    /// value gives the same `(r_y, r_z)`; the training mean keeps the
    /// arithmetic well scaled.
    pub offset: f64,
    /// Set when the constant direction has no image in the PCA subspace and
    /// the third component was dropped instead.
    pub reference_fallback: bool,
}

/// A fitted model together with the projected training trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeEmbedding {
    pub model: EmbeddingModel,
    pub sproj: Vec<Point>,
}

impl EmbeddingModel {
    pub fn l(&self) -> usize {
        self.params.l
    }

    fn project_sums(&self, sums: &[f64]) -> Vec<Point> {
        let width = self.params.width();
        if sums.len() < width {
            return Vec::new();
        }
        let rows = sums.len() + 1 - width;
        (0..rows)
            .into_par_iter()
            .map(|i| self.project_row(&sums[i..i + width]))
            .collect()
    }

    fn project_row(&self, row: &[f64]) -> Point {
        let mut p = [0.0; 3];
        for (pk, c) in p.iter_mut().zip(&self.pca.components) {
            *pk = row
                .iter()
                .zip(c)
                .map(|(v, w)| (v - self.offset) * w)
                .sum();
        }
        let q = rotation::apply(&self.rotation, p);
        [q[1], q[2]]
    }

    /// Embeds every length-`l` subsequence of `q` with the fitted transform.
    pub fn embed(&self, q: &[f64]) -> Result<Vec<Point>> {
        if q.len() < self.params.l {
            return Err(Error::InputTooShort {
                len: q.len(),
                required: self.params.l,
            });
        }
        Ok(self.project_sums(&window_sums(q, self.params.lambda)))
    }

    /// `v_ref` after rotation; only the first coordinate should be nonzero.
    pub fn rotated_reference(&self) -> [f64; 3] {
        rotation::apply(&self.rotation, self.v_ref)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: EmbeddingModel = serde_json::from_str(s)?;
        m.check_version()?;
        Ok(m)
    }

    pub(crate) fn check_version(&self) -> Result<()> {
        if self.version != EMBEDDING_FORMAT_VERSION {
            return Err(Error::Version {
                found: self.version,
                expected: EMBEDDING_FORMAT_VERSION,
            });
        }
        Ok(())
    }
}

/// Fits the shape embedding of `series` and projects its subsequences.
pub fn build_embedding(series: &TimeSeries, params: ConvolutionParams, seed: u64) -> Result<ShapeEmbedding> {
    build_embedding_with(series, params, seed, PcaSolver::Auto)
}

pub fn build_embedding_with(
    series: &TimeSeries,
    params: ConvolutionParams,
    seed: u64,
    solver: PcaSolver,
) -> Result<ShapeEmbedding> {
    let values = series.values();
    if values.len() < params.l {
        return Err(Error::InputTooShort {
            len: values.len(),
            required: params.l,
        });
    }
    let width = params.width();
    if width < 3 {
        return Err(Error::InvalidParameter(format!(
            "l - lambda must be at least 3, got {width}"
        )));
    }
    let (lo, hi) = series.min_max();
    if lo == hi {
        return Err(Error::ConstantSequence);
    }
    let sums = window_sums(values, params.lambda);
    let pca = pca::fit(&Hankel { sums: &sums, width }, seed, solver)?;

    // The constant vectors min*lambda*1 and max*lambda*1 differ by a
    // multiple of 1; the mean cancels in their difference.
    let span = (hi - lo) * params.lambda as f64;
    let v_ref = pca.apply_linear(&vec![span; width]);
    let input_norm = span * (width as f64).sqrt();
    let reference_fallback = rotation::norm(v_ref) <= 1e-9 * input_norm;
    let rotation = if reference_fallback {
        rotation::THIRD_TO_FIRST
    } else {
        rotation::align_to_first_axis(v_ref)
    };
    let offset = sums.iter().sum::<f64>() / sums.len() as f64;

    let model = EmbeddingModel {
        version: EMBEDDING_FORMAT_VERSION,
        params,
        pca,
        rotation,
        v_ref,
        offset,
        reference_fallback,
    };
    let sproj = model.project_sums(&sums);
    Ok(ShapeEmbedding { model, sproj })
}

/// Embeds a query with an already fitted embedding.
pub fn embed_query(emb: &ShapeEmbedding, q: &[f64]) -> Result<Vec<Point>> {
    emb.model.embed(q)
}
