//! Text formats: one value per line for series, `start,length` per line for
//! annotations, CSV for profiles and rankings. Lines starting with `#` and
//! blank lines are ignored on input.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::discord::NnProfile;
use crate::error::{Error, Result};
use crate::scoring::{NormalityProfile, RankedAnomaly, Ranking};
use crate::series::{AnnotationSet, SubseqRef, TimeSeries};

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Non-comment lines with their 1-based line numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub fn parse_series(text: &str, name: &str) -> Result<TimeSeries> {
    let mut values = Vec::new();
    for (line, s) in data_lines(text) {
        let v: f64 = s
            .parse()
            .map_err(|_| Error::parse(name, line, format!("`{s}` is not a number")))?;
        if !v.is_finite() {
            return Err(Error::parse(name, line, format!("non-finite value `{s}`")));
        }
        values.push(v);
    }
    TimeSeries::new(name, values)
}

pub fn series_to_string(series: &TimeSeries) -> String {
    let mut out = String::with_capacity(series.len() * 20);
    for v in series.values() {
        let _ = writeln!(out, "{v}");
    }
    out
}

pub fn load_series(path: impl AsRef<Path>) -> Result<TimeSeries> {
    let path = path.as_ref();
    let series = parse_series(&read(path)?, &path.display().to_string())?;
    let name = path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    TimeSeries::new(name, series.into_values())
}

pub fn write_series(path: impl AsRef<Path>, series: &TimeSeries) -> Result<()> {
    write(path.as_ref(), &series_to_string(series))
}

pub fn parse_annotations(text: &str, name: &str, series_len: Option<usize>) -> Result<AnnotationSet> {
    let mut intervals = Vec::new();
    for (line, s) in data_lines(text) {
        let fields: Vec<&str> = s.split(',').map(str::trim).collect();
        let [start, length] = fields[..] else {
            return Err(Error::parse(name, line, "expected `start,length`"));
        };
        let num = |f: &str| {
            f.parse::<usize>()
                .map_err(|_| Error::parse(name, line, format!("`{f}` is not a non-negative integer")))
        };
        intervals.push(SubseqRef::new(num(start)?, num(length)?));
    }
    AnnotationSet::new(intervals, series_len)
}

pub fn annotations_to_string(ann: &AnnotationSet) -> String {
    let mut out = String::from("# start,length\n");
    for r in ann.intervals() {
        let _ = writeln!(out, "{},{}", r.start, r.length);
    }
    out
}

pub fn load_annotations(path: impl AsRef<Path>) -> Result<AnnotationSet> {
    let path = path.as_ref();
    parse_annotations(&read(path)?, &path.display().to_string(), None)
}

pub fn write_annotations(path: impl AsRef<Path>, ann: &AnnotationSet) -> Result<()> {
    write(path.as_ref(), &annotations_to_string(ann))
}

fn header_line(lq: usize, l: usize, smoothed: bool) -> String {
    format!("# lq={lq},l={l},smoothed={smoothed}\n")
}

/// Parses the `# key=value,...` first line.
fn parse_header(text: &str, name: &str) -> Result<(usize, usize, bool)> {
    let first = text.lines().next().unwrap_or("");
    let body = first
        .strip_prefix('#')
        .ok_or_else(|| Error::parse(name, 1, "missing `# lq=...,l=...` header"))?;
    let (mut lq, mut l, mut smoothed) = (None, None, false);
    for kv in body.trim().split(',') {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::parse(name, 1, format!("malformed header field `{kv}`")))?;
        let bad = || Error::parse(name, 1, format!("bad value for `{k}`"));
        match k.trim() {
            "lq" => lq = Some(v.trim().parse().map_err(|_| bad())?),
            "l" => l = Some(v.trim().parse().map_err(|_| bad())?),
            "smoothed" => smoothed = v.trim().parse().map_err(|_| bad())?,
            _ => {}
        }
    }
    match (lq, l) {
        (Some(lq), Some(l)) => Ok((lq, l, smoothed)),
        _ => Err(Error::parse(name, 1, "header must give lq and l")),
    }
}

fn csv_err(name: &str, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::parse(name, line, e.to_string())
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

fn csv_string(header: String, fill: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>) -> Result<String> {
    let mut w = csv::Writer::from_writer(header.into_bytes());
    fill(&mut w).map_err(|e| Error::Serde(e.to_string()))?;
    let bytes = w.into_inner().map_err(|e| Error::Serde(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Serde(e.to_string()))
}

/// `position,normality,anomaly_score` rows after a `# lq=..` header.
pub fn profile_to_csv(p: &NormalityProfile) -> Result<String> {
    csv_string(header_line(p.lq, p.l, p.smoothed), |w| {
        w.write_record(["position", "normality", "anomaly_score"])?;
        for (i, s) in p.scores.iter().enumerate() {
            w.write_record([i.to_string(), s.to_string(), (-s).to_string()])?;
        }
        Ok(())
    })
}

pub fn parse_profile(text: &str, name: &str) -> Result<NormalityProfile> {
    let (lq, l, smoothed) = parse_header(text, name)?;
    let mut scores = Vec::new();
    for (k, rec) in csv_reader(text).deserialize::<(usize, f64, f64)>().enumerate() {
        let (pos, s, _) = rec.map_err(|e| csv_err(name, e))?;
        if pos != k {
            return Err(Error::parse(name, k + 3, format!("expected position {k}, got {pos}")));
        }
        scores.push(s);
    }
    Ok(NormalityProfile {
        scores,
        lq,
        l,
        smoothed,
    })
}

/// `rank,position,score` rows, score being the anomaly score.
pub fn ranking_to_csv(r: &Ranking, l: usize) -> Result<String> {
    csv_string(header_line(r.lq, l, true), |w| {
        w.write_record(["rank", "position", "score"])?;
        for a in &r.anomalies {
            w.write_record([a.rank.to_string(), a.position.to_string(), a.anomaly_score().to_string()])?;
        }
        Ok(())
    })
}

pub fn parse_ranking(text: &str, name: &str) -> Result<Ranking> {
    let (lq, _, _) = parse_header(text, name)?;
    let anomalies = csv_reader(text)
        .deserialize::<(usize, usize, f64)>()
        .map(|rec| {
            rec.map(|(rank, position, score)| RankedAnomaly {
                rank,
                position,
                normality: -score,
            })
            .map_err(|e| csv_err(name, e))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Ranking {
        anomalies,
        lq,
        truncated: false,
    })
}

/// `position,nn_distance,constant,short_neighbourhood` rows after a
/// `# l=..,m=..` header.
pub fn nn_profile_to_csv(p: &NnProfile) -> Result<String> {
    csv_string(format!("# l={},m={}\n", p.l, p.m), |w| {
        w.write_record(["position", "nn_distance", "constant", "short_neighbourhood"])?;
        for i in 0..p.len() {
            w.write_record([
                i.to_string(),
                p.distances[i].to_string(),
                p.constant[i].to_string(),
                p.short_neighbourhood[i].to_string(),
            ])?;
        }
        Ok(())
    })
}

pub fn write_profile(path: impl AsRef<Path>, p: &NormalityProfile) -> Result<()> {
    write(path.as_ref(), &profile_to_csv(p)?)
}

pub fn load_profile(path: impl AsRef<Path>) -> Result<NormalityProfile> {
    let path = path.as_ref();
    parse_profile(&read(path)?, &path.display().to_string())
}

pub fn write_ranking(path: impl AsRef<Path>, r: &Ranking, l: usize) -> Result<()> {
    write(path.as_ref(), &ranking_to_csv(r, l)?)
}

pub fn load_ranking(path: impl AsRef<Path>) -> Result<Ranking> {
    let path = path.as_ref();
    parse_ranking(&read(path)?, &path.display().to_string())
}
