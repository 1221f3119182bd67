//! Shared inputs for the criterion benches.

use series2graph::{generate_srw, AnnotationSet, SrwSpec, TimeSeries};

/// SRW series with one anomaly of length 200 per 5000 points and 5% noise.
pub fn srw(length: usize) -> (TimeSeries, AnnotationSet) {
    let spec = SrwSpec {
        length,
        num_anomalies: (length / 5000).max(1),
        noise_pct: 5.0,
        seed: 1,
        ..SrwSpec::default()
    };
    generate_srw(&spec).expect("valid bench spec")
}
