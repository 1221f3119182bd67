//! Gaussian kernel density estimate over a radius set and its local maxima.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::mean_std;

pub const DEFAULT_GRID_POINTS: usize = 512;

/// How the kernel bandwidth is chosen for each radius set.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Bandwidth {
    /// `sigma * n^(-1/5)`.
    #[default]
    Scott,
    /// A fixed multiple of the radius set's standard deviation.
    SigmaRatio(f64),
}

impl Bandwidth {
    /// Bandwidth for `radii`; fails on fewer than two radii or zero spread.
    pub fn resolve(&self, radii: &[f64]) -> Result<f64> {
        match *self {
            Bandwidth::Scott => scott_bandwidth(radii),
            Bandwidth::SigmaRatio(ratio) => {
                let sigma = spread(radii)?;
                Ok(ratio * sigma)
            }
        }
    }
}

impl fmt::Display for Bandwidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bandwidth::Scott => f.write_str("scott"),
            Bandwidth::SigmaRatio(r) => write!(f, "{r}"),
        }
    }
}

impl FromStr for Bandwidth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("scott") {
            return Ok(Bandwidth::Scott);
        }
        match s.parse::<f64>() {
            Ok(r) if r > 0.0 && r.is_finite() => Ok(Bandwidth::SigmaRatio(r)),
            _ => Err(Error::InvalidParameter(format!(
                "bandwidth must be `scott` or a positive ratio, got `{s}`"
            ))),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum BandwidthRepr {
    Ratio(f64),
    Named(String),
}

impl Serialize for Bandwidth {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            Bandwidth::Scott => BandwidthRepr::Named("scott".into()).serialize(s),
            Bandwidth::SigmaRatio(r) => BandwidthRepr::Ratio(r).serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for Bandwidth {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match BandwidthRepr::deserialize(d)? {
            BandwidthRepr::Ratio(r) if r > 0.0 && r.is_finite() => Ok(Bandwidth::SigmaRatio(r)),
            BandwidthRepr::Ratio(r) => Err(serde::de::Error::custom(format!(
                "bandwidth ratio must be positive, got {r}"
            ))),
            BandwidthRepr::Named(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Spreads below this fraction of the largest radius are rounding noise.
const RELATIVE_SPREAD_FLOOR: f64 = 1e-9;

fn spread(radii: &[f64]) -> Result<f64> {
    if radii.len() < 2 {
        return Err(Error::DegenerateBandwidth {
            count: radii.len(),
            spread: 0.0,
        });
    }
    let (_, sigma) = mean_std(radii);
    let scale = radii.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    if !(sigma > RELATIVE_SPREAD_FLOOR * scale) {
        return Err(Error::DegenerateBandwidth {
            count: radii.len(),
            spread: sigma,
        });
    }
    Ok(sigma)
}

/// Scott's rule, `h = sigma * n^(-1/5)` with the population deviation.
pub fn scott_bandwidth(radii: &[f64]) -> Result<f64> {
    let sigma = spread(radii)?;
    Ok(scott_from(sigma, radii.len()))
}

pub(crate) fn scott_from(sigma: f64, n: usize) -> f64 {
    sigma * (n as f64).powf(-0.2)
}

/// Gaussian KDE `f_h(x)`.
pub fn kde(radii: &[f64], h: f64, x: f64) -> f64 {
    let norm = 1.0 / (radii.len() as f64 * h * (2.0 * PI).sqrt());
    norm * radii
        .iter()
        .map(|&xi| {
            let z = (x - xi) / h;
            (-0.5 * z * z).exp()
        })
        .sum::<f64>()
}

/// Local maxima of the KDE evaluated on `grid_points` evenly spaced points
/// over `[min - 3h, max + 3h]`, in increasing order.
///
/// A flat run of equal grid values higher than both neighbours counts as one
/// maximum at the run's centre. At least one location is always returned.
pub fn kde_local_maxima(radii: &[f64], h: f64, grid_points: usize) -> Vec<f64> {
    match radii.len() {
        0 => return Vec::new(),
        1 => return vec![radii[0]],
        _ => {}
    }
    let (lo, hi) = radii
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &r| (a.min(r), b.max(r)));
    let grid_points = grid_points.max(3);
    let start = lo - 3.0 * h;
    let step = (hi - lo + 6.0 * h) / (grid_points - 1) as f64;
    let xs: Vec<f64> = (0..grid_points).map(|i| start + i as f64 * step).collect();
    let fs: Vec<f64> = xs.iter().map(|&x| kde(radii, h, x)).collect();

    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < grid_points {
        if fs[i] > fs[i - 1] {
            let mut j = i;
            while j + 1 < grid_points && fs[j + 1] == fs[i] {
                j += 1;
            }
            if j + 1 < grid_points && fs[j + 1] < fs[i] {
                out.push(0.5 * (xs[i] + xs[j]));
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    if out.is_empty() {
        let best = fs
            .iter()
            .enumerate()
            .fold(0, |b, (k, &v)| if v > fs[b] { k } else { b });
        out.push(xs[best]);
    }
    out
}
