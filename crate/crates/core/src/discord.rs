//! Brute-force nearest-neighbour profiles and m-th discords.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scoring::masked_extremes;
use crate::series::{euclidean, is_trivial_match, znormalize, TimeSeries};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnProfile {
    /// m-th nearest non-trivial neighbour distance of every position.
    pub distances: Vec<f64>,
    pub l: usize,
    pub m: usize,
    /// Subsequence is constant; its distance is a placeholder and it is never
    /// ranked.
    pub constant: Vec<bool>,
    /// Fewer than `m` usable neighbours; the distance was replaced by the
    /// largest finite one.
    pub short_neighbourhood: Vec<bool>,
}

impl NnProfile {
    pub fn len(&self) -> usize {
        self.distances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distances.is_empty()
    }
}

/// m-th smallest z-normalized distance from every length-`l` subsequence to
/// the subsequences that are not trivial matches of it.
pub fn nn_profile(series: &TimeSeries, l: usize, m: usize) -> Result<NnProfile> {
    if l < 2 {
        return Err(Error::InvalidParameter(format!("subsequence length must be at least 2, got {l}")));
    }
    if m == 0 {
        return Err(Error::InvalidParameter("neighbour order m must be at least 1".into()));
    }
    if series.len() < 2 * l {
        return Err(Error::InputTooShort {
            len: series.len(),
            required: 2 * l,
        });
    }
    let x = series.values();
    let n = x.len() - l + 1;
    let normalized: Vec<Option<Vec<f64>>> = (0..n)
        .into_par_iter()
        .map(|i| znormalize(&x[i..i + l]).ok())
        .collect();

    let raw: Vec<Option<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let zi = normalized[i].as_ref()?;
            let mut d: Vec<f64> = (0..n)
                .filter(|&j| !is_trivial_match(i, j, l))
                .filter_map(|j| normalized[j].as_ref().map(|zj| euclidean(zi, zj)))
                .collect();
            if d.len() < m {
                return Some(f64::INFINITY);
            }
            let (_, mth, _) = d.select_nth_unstable_by(m - 1, f64::total_cmp);
            Some(*mth)
        })
        .collect();

    let max_finite = raw
        .iter()
        .flatten()
        .copied()
        .filter(|d| d.is_finite())
        .fold(0.0, f64::max);
    let constant = raw.iter().map(Option::is_none).collect();
    let short_neighbourhood = raw.iter().map(|d| d.is_some_and(f64::is_infinite)).collect();
    let distances = raw
        .into_iter()
        .map(|d| match d {
            Some(d) if d.is_finite() => d,
            Some(_) => max_finite,
            None => 0.0,
        })
        .collect();
    Ok(NnProfile {
        distances,
        l,
        m,
        constant,
        short_neighbourhood,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discords {
    pub positions: Vec<usize>,
    pub truncated: bool,
}

/// The `k` positions of largest distance, masking trivial matches of each
/// pick. Constant subsequences are skipped.
pub fn top_discords(profile: &NnProfile, k: usize) -> Result<Discords> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let scores: Vec<f64> = profile
        .distances
        .iter()
        .zip(&profile.constant)
        .map(|(&d, &c)| if c { f64::NEG_INFINITY } else { d })
        .collect();
    let usable = profile.constant.iter().filter(|c| !**c).count();
    let mut positions = masked_extremes(&scores, profile.l, k.min(usable), |a, b| a > b);
    positions.retain(|&p| !profile.constant[p]);
    Ok(Discords {
        truncated: positions.len() < k,
        positions,
    })
}
