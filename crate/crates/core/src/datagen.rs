//! Synthetic sinusoid-over-random-walk (SRW) series with injected
//! higher-frequency anomalies.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::series::{AnnotationSet, SubseqRef, TimeSeries};

pub use crate::io::{load_annotations, load_series, write_annotations, write_series};

/// Points over which an anomaly is cross-faded with the base signal at each
/// end.
pub const BLEND_POINTS: usize = 5;

const STREAM_WALK: u64 = 1;
const STREAM_NOISE: u64 = 2;
const STREAM_PLACEMENT: u64 = 3;
const STREAM_PHASE: u64 = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SrwSpec {
    pub length: usize,
    pub num_anomalies: usize,
    /// Gaussian noise level, percent of `base_amplitude`.
    pub noise_pct: f64,
    pub anomaly_len: usize,
    pub seed: u64,
    pub base_period: f64,
    pub base_amplitude: f64,
    pub walk_step_std: f64,
    pub anomaly_freq_multiplier: f64,
}

impl Default for SrwSpec {
    fn default() -> Self {
        SrwSpec {
            length: 100_000,
            num_anomalies: 20,
            noise_pct: 0.0,
            anomaly_len: 200,
            seed: 42,
            base_period: 200.0,
            base_amplitude: 1.0,
            walk_step_std: 0.01,
            anomaly_freq_multiplier: 2.0,
        }
    }
}

impl SrwSpec {
    /// `SRW-[anomalies]-[noise%]-[anomaly length]`.
    pub fn label(&self) -> String {
        format!("SRW-[{}]-[{}%]-[{}]", self.num_anomalies, self.noise_pct, self.anomaly_len)
    }

    pub fn validate(&self) -> Result<()> {
        if self.length < 2 {
            return Err(Error::SeriesTooShort {
                len: self.length,
                min: 2,
            });
        }
        if !(0.0..=100.0).contains(&self.noise_pct) {
            return Err(Error::InvalidParameter(format!(
                "noise_pct must lie in [0, 100], got {}",
                self.noise_pct
            )));
        }
        if self.num_anomalies > 0 && self.anomaly_len == 0 {
            return Err(Error::InvalidParameter("anomaly_len must be positive".into()));
        }
        if 2 * self.num_anomalies * self.anomaly_len > self.length {
            return Err(Error::Placement(format!(
                "{} anomalies of length {} need num_anomalies * anomaly_len <= length / 2 = {}",
                self.num_anomalies,
                self.anomaly_len,
                self.length / 2
            )));
        }
        for (name, v) in [
            ("base_period", self.base_period),
            ("base_amplitude", self.base_amplitude),
            ("anomaly_freq_multiplier", self.anomaly_freq_multiplier),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.walk_step_std >= 0.0 && self.walk_step_std.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "walk_step_std must be non-negative, got {}",
                self.walk_step_std
            )));
        }
        Ok(())
    }
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Places `count` intervals of length `len` in `0..length`, any two at least
/// `len` apart, with the free space split at uniformly random cut points.
fn place(count: usize, len: usize, length: usize, rng: &mut impl Rng) -> Result<Vec<usize>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let required = (2 * count - 1) * len;
    let free = length.checked_sub(required).ok_or_else(|| {
        Error::Placement(format!(
            "{count} intervals of length {len} with gaps of {len} need {required} points, series has {length}"
        ))
    })?;
    let mut cuts: Vec<usize> = (0..count).map(|_| rng.random_range(0..=free)).collect();
    cuts.sort_unstable();
    Ok(cuts
        .iter()
        .enumerate()
        .map(|(k, &c)| c + k * 2 * len)
        .collect())
}

/// The parts an SRW series is summed from.
#[derive(Debug, Clone)]
pub(crate) struct SrwParts {
    pub walk: Vec<f64>,
    pub periodic: Vec<f64>,
    pub noise: Vec<f64>,
    pub annotations: AnnotationSet,
}

pub(crate) fn generate_parts(spec: &SrwSpec) -> Result<SrwParts> {
    spec.validate()?;
    let n = spec.length;
    let step = Normal::new(0.0, spec.walk_step_std).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut walk_rng = rng(spec.seed, STREAM_WALK);
    let mut level = 0.0;
    let walk: Vec<f64> = (0..n)
        .map(|_| {
            level += step.sample(&mut walk_rng);
            level
        })
        .collect();

    let amp = spec.base_amplitude;
    let mut periodic: Vec<f64> = (0..n)
        .map(|i| amp * (TAU * i as f64 / spec.base_period).sin())
        .collect();

    let starts = place(
        spec.num_anomalies,
        spec.anomaly_len,
        n,
        &mut rng(spec.seed, STREAM_PLACEMENT),
    )?;
    let mut phase_rng = rng(spec.seed, STREAM_PHASE);
    let freq = spec.anomaly_freq_multiplier / spec.base_period;
    let ramp = (BLEND_POINTS + 1) as f64;
    for &s in &starts {
        let phase = phase_rng.random_range(0.0..TAU);
        for i in s..s + spec.anomaly_len {
            let k = i - s;
            let w = 1.0f64
                .min((k + 1) as f64 / ramp)
                .min((spec.anomaly_len - k) as f64 / ramp);
            let anomaly = amp * (TAU * freq * k as f64 + phase).sin();
            periodic[i] = (1.0 - w) * periodic[i] + w * anomaly;
        }
    }

    let sigma = spec.noise_pct / 100.0 * amp;
    let noise = if sigma > 0.0 {
        let dist = Normal::new(0.0, sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let mut noise_rng = rng(spec.seed, STREAM_NOISE);
        (0..n).map(|_| dist.sample(&mut noise_rng)).collect()
    } else {
        vec![0.0; n]
    };

    let annotations = AnnotationSet::new(
        starts.iter().map(|&s| SubseqRef::new(s, spec.anomaly_len)).collect(),
        Some(n),
    )?;
    Ok(SrwParts {
        walk,
        periodic,
        noise,
        annotations,
    })
}

/// Generates an SRW series and the intervals of its injected anomalies.
pub fn generate_srw(spec: &SrwSpec) -> Result<(TimeSeries, AnnotationSet)> {
    let parts = generate_parts(spec)?;
    let values = parts
        .walk
        .iter()
        .zip(&parts.periodic)
        .zip(&parts.noise)
        .map(|((w, p), e)| w + p + e)
        .collect();
    Ok((TimeSeries::new(spec.label(), values)?, parts.annotations))
}

/// Provenance record written next to generated files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrwMetadata {
    pub label: String,
    pub spec: SrwSpec,
    pub seed: u64,
    pub series_sha256: String,
    pub num_points: usize,
}

impl SrwMetadata {
    pub fn new(spec: &SrwSpec, series: &TimeSeries) -> Self {
        SrwMetadata {
            label: spec.label(),
            spec: spec.clone(),
            seed: spec.seed,
            series_sha256: series_sha256(series),
            num_points: series.len(),
        }
    }
}

/// SHA-256 of the series in its text file format.
pub fn series_sha256(series: &TimeSeries) -> String {
    let text = crate::io::series_to_string(series);
    hex::encode(Sha256::digest(text.as_bytes()))
}
