//! Data series, subsequence references, annotations and the z-normalized
//! distance.
//!
//! All ranges are half-open: a subsequence `(start, length)` covers
//! `start..start + length`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An ordered sequence of finite real values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    name: String,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::SeriesTooShort {
                len: values.len(),
                min: 2,
            });
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(TimeSeries {
            name: name.into(),
            values,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn subsequence(&self, r: SubseqRef) -> Result<&[f64]> {
        r.check(self.len())?;
        Ok(&self.values[r.start..r.end()])
    }

    /// Leading `len` values as a new series.
    pub fn prefix(&self, len: usize) -> Result<TimeSeries> {
        if len > self.len() {
            return Err(Error::InputTooShort {
                len: self.len(),
                required: len,
            });
        }
        TimeSeries::new(self.name.clone(), self.values[..len].to_vec())
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// A contiguous window `start..start + length` of some series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SubseqRef {
    pub start: usize,
    pub length: usize,
}

impl SubseqRef {
    pub fn new(start: usize, length: usize) -> Self {
        SubseqRef { start, length }
    }

    pub fn end(&self) -> usize {
        self.start + self.length
    }

    pub fn overlaps(&self, other: &SubseqRef) -> bool {
        self.start < other.end() && other.start < self.end()
    }

    fn check(&self, series_len: usize) -> Result<()> {
        if self.length == 0 || self.end() > series_len {
            return Err(Error::InvalidParameter(format!(
                "subsequence {}..{} out of bounds for series of length {series_len}",
                self.start,
                self.end()
            )));
        }
        Ok(())
    }
}

/// Known anomalous intervals, sorted and non-overlapping.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationSet {
    intervals: Vec<SubseqRef>,
}

impl AnnotationSet {
    /// Sorts the intervals and validates them against `series_len`.
    pub fn new(mut intervals: Vec<SubseqRef>, series_len: Option<usize>) -> Result<Self> {
        intervals.sort_by_key(|r| (r.start, r.length));
        for r in &intervals {
            if r.length == 0 {
                return Err(Error::InvalidAnnotation(format!(
                    "empty interval at {}",
                    r.start
                )));
            }
            if let Some(n) = series_len {
                if r.end() > n {
                    return Err(Error::InvalidAnnotation(format!(
                        "interval {}..{} exceeds series length {n}",
                        r.start,
                        r.end()
                    )));
                }
            }
        }
        for pair in intervals.windows(2) {
            if pair[0].overlaps(&pair[1]) {
                return Err(Error::InvalidAnnotation(format!(
                    "intervals {}..{} and {}..{} overlap",
                    pair[0].start,
                    pair[0].end(),
                    pair[1].start,
                    pair[1].end()
                )));
            }
        }
        Ok(AnnotationSet { intervals })
    }

    pub fn intervals(&self) -> &[SubseqRef] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Drops intervals that do not fit entirely inside `0..len`.
    pub fn restricted_to(&self, len: usize) -> AnnotationSet {
        AnnotationSet {
            intervals: self
                .intervals
                .iter()
                .copied()
                .filter(|r| r.end() <= len)
                .collect(),
        }
    }
}

/// Mean and population standard deviation.
pub fn mean_std(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Z-normalizes `x` (population standard deviation).
pub fn znormalize(x: &[f64]) -> Result<Vec<f64>> {
    if x.len() < 2 {
        return Err(Error::SeriesTooShort {
            len: x.len(),
            min: 2,
        });
    }
    let (mean, std) = mean_std(x);
    if !(std > 0.0) || std <= f64::EPSILON * mean.abs() {
        return Err(Error::ConstantSequence);
    }
    Ok(x.iter().map(|v| (v - mean) / std).collect())
}

/// Euclidean distance between two equal-length, already normalized vectors.
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Z-normalized Euclidean distance.
pub fn znorm_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    let za = znormalize(a)?;
    let zb = znormalize(b)?;
    Ok(euclidean(&za, &zb))
}

/// Two subsequences of length `l` starting at `i` and `a` are trivial
/// matches when they overlap by more than half their length.
pub fn is_trivial_match(i: usize, a: usize, l: usize) -> bool {
    2 * i.abs_diff(a) < l
}
