use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Subsequence length `l` and local convolution window `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvolutionParams {
    pub l: usize,
    pub lambda: usize,
}

impl ConvolutionParams {
    pub fn new(l: usize, lambda: usize) -> Result<Self> {
        if lambda == 0 || lambda >= l {
            return Err(Error::InvalidParameter(format!(
                "convolution window must satisfy 1 <= lambda < l, got lambda={lambda}, l={l}"
            )));
        }
        Ok(ConvolutionParams { l, lambda })
    }

    /// `lambda = floor(l / 3)`, clamped to at least 1.
    pub fn with_default_lambda(l: usize) -> Result<Self> {
        Self::new(l, (l / 3).max(1))
    }

    /// Number of entries in one convolved subsequence.
    pub fn width(&self) -> usize {
        self.l - self.lambda
    }

    /// Number of full subsequences in a series of length `n`.
    pub fn rows(&self, n: usize) -> usize {
        n + 1 - self.l
    }
}

/// `out[k] = values[k] + ... + values[k + lambda]` for every `k` where the
/// window fits. Each sum is evaluated from scratch in index order, so the
/// value at a given absolute position does not depend on where the slice
/// starts.
pub(crate) fn window_sums(values: &[f64], lambda: usize) -> Vec<f64> {
    if values.len() <= lambda {
        return Vec::new();
    }
    values
        .windows(lambda + 1)
        .map(|w| w.iter().fold(0.0, |acc, v| acc + v))
        .collect()
}

/// Convolved embedding of every length-`l` subsequence of `series`.
///
/// Row `i` holds `width()` local sums of `lambda + 1` consecutive values,
/// all taken inside `T[i..i + l]`. Each row shares `width() - 1` entries with
/// the previous one, so only one new sum is computed per row.
pub fn rolling_convolution(series: &TimeSeries, params: ConvolutionParams) -> Result<DMatrix<f64>> {
    let values = series.values();
    if values.len() < params.l {
        return Err(Error::InputTooShort {
            len: values.len(),
            required: params.l,
        });
    }
    let sums = window_sums(values, params.lambda);
    let rows = params.rows(values.len());
    let width = params.width();
    Ok(DMatrix::from_fn(rows, width, |i, j| sums[i + j]))
}
