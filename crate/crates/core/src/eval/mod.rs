//! Top-k accuracy and parameter sweeps.

mod sweep;

pub use sweep::{run_point, sweep, DatasetSpec, GridPoint, SweepSpec};

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::series::{AnnotationSet, SubseqRef};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub position: usize,
    /// Index of the annotation this prediction was credited to.
    pub matched: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub dataset: String,
    pub method: String,
    pub k: usize,
    pub hits: usize,
    pub accuracy: f64,
    pub predictions: Vec<Prediction>,
    pub wall_time_ms: f64,
    pub params: BTreeMap<String, serde_json::Value>,
    /// Set when the run failed; the other figures are then zero.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl EvalReport {
    pub fn failed(dataset: &str, method: &str, k: usize, params: BTreeMap<String, serde_json::Value>, error: String) -> Self {
        EvalReport {
            schema_version: REPORT_SCHEMA_VERSION,
            dataset: dataset.to_string(),
            method: method.to_string(),
            k,
            hits: 0,
            accuracy: 0.0,
            predictions: Vec::new(),
            wall_time_ms: 0.0,
            params,
            error: Some(error),
        }
    }

    pub fn with_labels(mut self, dataset: &str, method: &str) -> Self {
        self.dataset = dataset.to_string();
        self.method = method.to_string();
        self
    }
}

/// Scores the first `k` ranked positions: a prediction hits when
/// `[p, p + lq)` overlaps an annotation not already credited to an earlier
/// prediction. Accuracy is `hits / k`.
pub fn top_k_accuracy(predictions: &[usize], annotations: &AnnotationSet, k: usize, lq: usize) -> EvalReport {
    let mut used = vec![false; annotations.len()];
    let mut hits = 0;
    let preds = predictions
        .iter()
        .take(k)
        .map(|&position| {
            let window = SubseqRef::new(position, lq);
            let matched = annotations
                .intervals()
                .iter()
                .enumerate()
                .find(|(i, a)| !used[*i] && a.overlaps(&window))
                .map(|(i, _)| i);
            if let Some(i) = matched {
                used[i] = true;
                hits += 1;
            }
            Prediction { position, matched }
        })
        .collect();
    EvalReport {
        schema_version: REPORT_SCHEMA_VERSION,
        dataset: String::new(),
        method: String::new(),
        k,
        hits,
        accuracy: if k == 0 { 0.0 } else { hits as f64 / k as f64 },
        predictions: preds,
        wall_time_ms: 0.0,
        params: BTreeMap::new(),
        error: None,
    }
}

/// One JSON object per line.
pub fn reports_to_jsonl(reports: &[EvalReport]) -> Result<String> {
    let mut out = String::new();
    for r in reports {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn reports_from_jsonl(text: &str) -> Result<Vec<EvalReport>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| Ok(serde_json::from_str(l)?))
        .collect()
}

fn csv_field(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        serde_json::Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// One row per report: fixed columns followed by every parameter name seen.
pub fn summary_csv(reports: &[EvalReport]) -> String {
    let mut keys: Vec<&String> = reports.iter().flat_map(|r| r.params.keys()).collect();
    keys.sort();
    keys.dedup();
    let mut out = String::from("dataset,method,k,hits,accuracy,wall_time_ms");
    for k in &keys {
        let _ = write!(out, ",{k}");
    }
    out.push_str(",error\n");
    for r in reports {
        let _ = write!(
            out,
            "{},{},{},{},{},{}",
            r.dataset, r.method, r.k, r.hits, r.accuracy, r.wall_time_ms
        );
        for k in &keys {
            let _ = write!(out, ",{}", r.params.get(*k).map(csv_field).unwrap_or_default());
        }
        let err = r.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
        let _ = writeln!(out, ",{err}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ann(iv: &[(usize, usize)]) -> AnnotationSet {
        AnnotationSet::new(iv.iter().map(|&(s, l)| SubseqRef::new(s, l)).collect(), None).unwrap()
    }

    #[test]
    fn all_hits() {
        let a = ann(&[(100, 50), (400, 50), (900, 50)]);
        let r = top_k_accuracy(&[410, 90, 949], &a, 3, 20);
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.predictions[1].matched, Some(0));
    }

    #[test]
    fn three_of_five() {
        let a = ann(&[(100, 50), (400, 50), (900, 50)]);
        let r = top_k_accuracy(&[100, 2000, 400, 3000, 930], &a, 5, 20);
        assert_eq!(r.hits, 3);
        assert_eq!(r.accuracy, 0.6);
    }

    #[test]
    fn single_match_per_annotation() {
        let a = ann(&[(100, 50), (400, 50)]);
        let r = top_k_accuracy(&[100, 120], &a, 2, 20);
        assert_eq!(r.accuracy, 0.5);
        assert_eq!(r.predictions[1].matched, None);
    }

    #[test]
    fn window_overlap_is_half_open() {
        let a = ann(&[(100, 50)]);
        assert_eq!(top_k_accuracy(&[80], &a, 1, 20).hits, 0);
        assert_eq!(top_k_accuracy(&[81], &a, 1, 20).hits, 1);
        assert_eq!(top_k_accuracy(&[149], &a, 1, 20).hits, 1);
        assert_eq!(top_k_accuracy(&[150], &a, 1, 20).hits, 0);
    }

    #[test]
    fn jsonl_and_csv() {
        let a = ann(&[(100, 50)]);
        let mut r = top_k_accuracy(&[100], &a, 1, 20).with_labels("d", "s2g");
        r.params.insert("l".into(), 50.into());
        let f = EvalReport::failed("d", "s2g", 1, BTreeMap::new(), "bad, input".into());
        let text = reports_to_jsonl(&[r.clone(), f.clone()]).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(reports_from_jsonl(&text).unwrap(), vec![r.clone(), f]);
        let csv = summary_csv(&[r]);
        assert_eq!(csv, "dataset,method,k,hits,accuracy,wall_time_ms,l,error\nd,s2g,1,1,1,0,50,\n");
    }

    proptest! {
        #[test]
        fn accuracy_bounds_and_monotone_hits(
            preds in prop::collection::vec(0usize..5000, 1..30),
            starts in prop::collection::btree_set(0usize..50, 1..10),
        ) {
            let a = ann(&starts.iter().map(|s| (s * 100, 60)).collect::<Vec<_>>());
            let mut prev_hits = 0;
            for k in 1..=preds.len() {
                let r = top_k_accuracy(&preds, &a, k, 30);
                prop_assert!(r.hits <= k && r.hits <= a.len());
                prop_assert_eq!(r.accuracy, r.hits as f64 / k as f64);
                // hits of a prefix of the ranking never decrease as k grows
                prop_assert!(r.hits >= prev_hits);
                prev_hits = r.hits;
            }
        }
    }
}
