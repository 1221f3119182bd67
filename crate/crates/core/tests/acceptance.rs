//! Acceptance suite. Runs without the libtest harness so every criterion
//! prints exactly one PASS/FAIL line; the process fails if any criterion
//! does.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use series2graph::embedding::rotation::orthogonality_error;
use series2graph::eval::{reports_to_jsonl, DatasetSpec, EvalReport};
use series2graph::graph::{EdgeMap, NodeSet};
use series2graph::io::{nn_profile_to_csv, profile_to_csv, ranking_to_csv, series_to_string};
use series2graph::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn srw(length: usize, anomalies: usize, noise: f64, seed: u64) -> SrwSpec {
    SrwSpec {
        length,
        num_anomalies: anomalies,
        noise_pct: noise,
        anomaly_len: 200,
        seed,
        ..Default::default()
    }
}

fn sweep_spec(dataset: SrwSpec, l: Vec<usize>, lq: Vec<usize>) -> SweepSpec {
    SweepSpec {
        dataset: DatasetSpec::Srw(dataset),
        l,
        lq,
        bandwidth: Vec::new(),
        prefix: Vec::new(),
        noise_pct: Vec::new(),
        r: 50,
        seed: 42,
        k: None,
        smooth: true,
    }
}

fn accuracies(reports: &[EvalReport]) -> Result<Vec<f64>> {
    reports
        .iter()
        .map(|r| match &r.error {
            Some(e) => Err(Error::InvalidParameter(e.clone())),
            None => Ok(r.accuracy),
        })
        .collect()
}

fn single_thread<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .expect("thread pool")
        .install(f)
}

fn c1_synthetic_accuracy() -> Result<Outcome> {
    let (t, ann) = generate_srw(&srw(100_000, 20, 0.0, 1))?;
    let started = Instant::now();
    let ranking = single_thread(|| -> Result<Ranking> {
        let g = build_graph(&t, 50, 50, 42)?;
        let profile = normality_profile(&g, &t, 200, true)?;
        rank_anomalies(&profile, 20)
    })?;
    let secs = started.elapsed().as_secs_f64();
    let acc = top_k_accuracy(&ranking.positions(), &ann, 20, 200).accuracy;
    Ok(outcome(
        acc >= 0.90 && secs <= 300.0,
        format!("SRW-[20]-[0%]-[200], 100K points: top-20 accuracy {acc:.3} (>= 0.90), {secs:.1} s single-threaded"),
    ))
}

fn c2_noise_robustness() -> Result<Outcome> {
    let mut spec = sweep_spec(srw(100_000, 60, 0.0, 1), vec![50], vec![200]);
    spec.noise_pct = vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0];
    let acc = accuracies(&sweep(&spec)?)?;
    let (lo, hi) = acc.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    Ok(outcome(
        hi - lo <= 0.15 && lo >= 0.80,
        format!("SRW-[60]-[0..25%]-[200]: accuracies {acc:.3?}, spread {:.3} (<= 0.15), min {lo:.3} (>= 0.80)", hi - lo),
    ))
}

fn c3_length_robustness() -> Result<Outcome> {
    // query length grows with l as 3l/2
    let ls = [200, 300, 400];
    let mut reports = Vec::new();
    for l in ls {
        reports.extend(sweep(&sweep_spec(srw(100_000, 10, 0.0, 1), vec![l], vec![3 * l / 2]))?);
    }
    let acc = accuracies(&reports)?;
    let worst = acc.iter().map(|a| (a - acc[0]).abs()).fold(0.0, f64::max);
    Ok(outcome(
        worst <= 0.10,
        format!("SRW-[10]-[0%]-[200], l = {ls:?}, lq = 3l/2: accuracies {acc:.3?}, max deviation from l=200 {worst:.3} (<= 0.10)"),
    ))
}

fn c4_prefix_convergence() -> Result<Outcome> {
    let mut spec = sweep_spec(srw(100_000, 20, 0.0, 1), vec![50], vec![200]);
    spec.prefix = vec![0.4, 1.0];
    let acc = accuracies(&sweep(&spec)?)?;
    Ok(outcome(
        acc[0] >= 0.85 * acc[1],
        format!("SRW-[20]-[0%]-[200]: accuracy {:.3} on a 40% prefix vs {:.3} on the full series (>= 0.85x)", acc[0], acc[1]),
    ))
}

/// A graph over `n` nodes with the given edges; the embedding is borrowed
/// from `base` and never used.
fn small_graph(base: &PatternGraph, n: usize, edges: EdgeMap) -> Result<PatternGraph> {
    let positions = (0..n).map(|i| (i % 3, 1.0 + i as f64)).collect();
    let nodes = NodeSet::from_parts(3, positions, vec![None; 3])?;
    PatternGraph::from_parts(base.config, base.embedding.clone(), Vec::new(), nodes, edges, Vec::new())
}

/// Membership by definition: every step is an edge whose weight times the
/// number of distinct edges touching its source, minus one, reaches theta.
fn brute_force_member(edges: &EdgeMap, path: &[NodeId], theta: f64) -> bool {
    path.windows(2).all(|s| {
        let w = edges.get(&(s[0], s[1])).copied().unwrap_or(0);
        let deg = edges.keys().filter(|(a, b)| *a == s[0] || *b == s[0]).count() as f64;
        w > 0 && w as f64 * (deg - 1.0) >= theta
    })
}

fn c5_normality_bound() -> Result<Outcome> {
    let (t, _) = generate_srw(&srw(1000, 0, 0.0, 0))?;
    let base = build_graph(&t, 30, 10, 0)?;
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut graphs, mut checks, mut violations, mut below) = (0, 0, 0, 0);
    for _ in 0..1000 {
        let n = rng.random_range(2..=12usize);
        let mut edges = EdgeMap::new();
        for _ in 0..rng.random_range(1..=3 * n) {
            let (a, b) = (rng.random_range(0..n as NodeId), rng.random_range(0..n as NodeId));
            if a != b {
                edges.insert((a, b), rng.random_range(1..=10));
            }
        }
        let g = small_graph(&base, n, edges)?;
        graphs += 1;
        for _ in 0..20 {
            let lq = rng.random_range(1..=10usize);
            // half the paths follow existing edges, so members occur
            let mut path = vec![rng.random_range(0..n as NodeId)];
            while path.len() <= lq {
                let cur = *path.last().unwrap();
                let out: Vec<NodeId> = g.edges.keys().filter(|(a, _)| *a == cur).map(|&(_, b)| b).collect();
                let next = if !out.is_empty() && rng.random_bool(0.5) {
                    out[rng.random_range(0..out.len())]
                } else {
                    rng.random_range(0..n as NodeId)
                };
                path.push(next);
            }
            let score = path_normality(&g, &path, lq);
            for theta in [0.5, 1.0, 2.0, 5.0, 10.0, 20.0, rng.random_range(0.0..100.0)] {
                checks += 1;
                let member = brute_force_member(&g.edges, &path, theta);
                let some_low = path.windows(2).any(|s| (g.step_value(s[0], s[1]) as f64) < theta);
                if score < theta {
                    below += 1;
                    if !some_low || member {
                        violations += 1;
                    }
                }
                if member && score < theta {
                    violations += 1;
                }
            }
        }
    }
    let secs = started.elapsed().as_secs_f64();
    Ok(outcome(
        violations == 0 && secs <= 10.0 && graphs >= 1000,
        format!("{graphs} graphs, {checks} checks ({below} below theta): {violations} violations, {secs:.2} s (<= 10 s)"),
    ))
}

fn c6_numerical_invariants() -> Result<Outcome> {
    let mut worst_orth = 0.0f64;
    let mut conservation_ok = true;
    let mut builds = 0;
    let mut check = |g: &PatternGraph| {
        builds += 1;
        worst_orth = worst_orth.max(orthogonality_error(&g.embedding.rotation));
        conservation_ok &= g.total_weight() + 1 == g.node_sequence.len() as u64;
    };

    let (clean, _) = generate_srw(&srw(20_000, 0, 0.0, 3))?;
    let g = build_graph(&clean, 50, 50, 42)?;
    check(&g);
    let variance: f64 = g.embedding.pca.explained_variance_ratio.iter().sum();

    let shifted = TimeSeries::new("shifted", clean.values().iter().map(|v| v + 1234.5).collect())?;
    let gs = build_graph(&shifted, 50, 50, 42)?;
    check(&gs);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let dist = |p: [f64; 2], q: [f64; 2]| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
    let mut shift_err = 0.0f64;
    for _ in 0..20_000 {
        let (i, j) = (rng.random_range(0..g.sproj.len()), rng.random_range(0..g.sproj.len()));
        shift_err = shift_err.max((dist(g.sproj[i], g.sproj[j]) - dist(gs.sproj[i], gs.sproj[j])).abs());
    }

    for (anomalies, noise, seed, l) in [(20, 0.0, 1, 50), (10, 10.0, 2, 100), (5, 25.0, 3, 200), (30, 5.0, 4, 75)] {
        let (t, _) = generate_srw(&srw(40_000, anomalies, noise, seed))?;
        check(&build_graph(&t, l, 50, seed)?);
    }
    Ok(outcome(
        worst_orth <= 1e-9 && variance >= 0.95 && shift_err <= 1e-6 && conservation_ok,
        format!(
            "{builds} builds: max |R^T R - I| {worst_orth:.1e} (<= 1e-9), top-3 variance {variance:.4} (>= 0.95), \
             shift distance error {shift_err:.1e} (<= 1e-6), weight conservation {conservation_ok}"
        ),
    ))
}

/// Reference NN profile: every pair, z-normalizing both sides each time.
fn naive_nn(x: &[f64], l: usize, m: usize) -> Vec<f64> {
    let norm = |w: &[f64]| -> Option<Vec<f64>> {
        let n = w.len() as f64;
        let mean = w.iter().sum::<f64>() / n;
        let sd = (w.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
        (sd > 0.0 && sd > f64::EPSILON * mean.abs()).then(|| w.iter().map(|v| (v - mean) / sd).collect())
    };
    let n = x.len() - l + 1;
    (0..n)
        .map(|i| {
            let mut d = Vec::new();
            for j in 0..n {
                if 2 * i.abs_diff(j) < l {
                    continue;
                }
                let (Some(a), Some(b)) = (norm(&x[i..i + l]), norm(&x[j..j + l])) else {
                    continue;
                };
                d.push(a.iter().zip(&b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt());
            }
            d.sort_by(f64::total_cmp);
            d[m - 1]
        })
        .collect()
}

/// Sinusoid with a faint walk and noise, one anomaly at `a` and an exact
/// copy of the surrounding `[a - 200, a + 400)` stretch (noise included) at `b`.
fn twin_series(n: usize, a: usize, b: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.05).expect("valid");
    let step = Normal::new(0.0, 0.002).expect("valid");
    let mut e: Vec<f64> = (0..n).map(|_| noise.sample(&mut rng)).collect();
    for k in 0..600 {
        e[b + k - 200] = e[a + k - 200];
    }
    let mut walk = 0.0;
    (0..n)
        .map(|i| {
            walk += step.sample(&mut rng);
            let base = (TAU * i as f64 / 200.0).sin();
            let v = [a, b]
                .iter()
                .find(|&&s| (s..s + 200).contains(&i))
                .map_or(base, |&s| {
                    let k = i - s;
                    let w = 1f64.min((k + 1) as f64 / 6.0).min((200 - k) as f64 / 6.0);
                    (1.0 - w) * base + w * (TAU * 2.0 * k as f64 / 200.0 + 1.0).sin()
                });
            walk + v + e[i]
        })
        .collect()
}

fn c7_oracle_equivalence() -> Result<Outcome> {
    let started = Instant::now();
    let mismatches: usize = (0..50u64)
        .into_par_iter()
        .map(|s| -> Result<usize> {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + s);
            let n = rng.random_range(200..=2000usize);
            let l = rng.random_range(4..=48usize);
            let m = rng.random_range(1..=3usize);
            let mut level = 0.0;
            let x: Vec<f64> = (0..n)
                .map(|i| {
                    level += rng.random_range(-0.1..0.1);
                    level + (i as f64 * 0.07).sin() + rng.random_range(-0.2..0.2)
                })
                .collect();
            let fast = nn_profile(&TimeSeries::new("r", x.clone())?, l, m)?;
            let slow = naive_nn(&x, l, m);
            Ok(fast.distances.iter().zip(&slow).filter(|(a, b)| a.to_bits() != b.to_bits()).count())
        })
        .sum::<Result<usize>>()?;

    let mut twin_ok = 0;
    let cases = [(750, 2750, 1u64), (1000, 3000, 2), (400, 2400, 3)];
    let mut notes = Vec::new();
    for (a, b, seed) in cases {
        let t = TimeSeries::new("twin", twin_series(4000, a, b, seed))?;
        let ann = AnnotationSet::new(vec![SubseqRef::new(a, 200), SubseqRef::new(b, 200)], Some(t.len()))?;
        let first = top_discords(&nn_profile(&t, 200, 1)?, 2)?.positions;
        let second = top_discords(&nn_profile(&t, 200, 2)?, 2)?.positions;
        let g = build_graph(&t, 50, 50, 42)?;
        let s2g = rank_anomalies(&normality_profile(&g, &t, 200, true)?, 2)?.positions();
        let hits = |p: &[usize], lq| top_k_accuracy(p, &ann, 2, lq).hits;
        let (h1, h2, hs) = (hits(&first, 200), hits(&second, 200), hits(&s2g, 200));
        if h1 < 2 && h2 == 2 && hs == 2 {
            twin_ok += 1;
        }
        notes.push(format!("{h1}/{h2}/{hs}"));
    }
    let secs = started.elapsed().as_secs_f64();
    Ok(outcome(
        mismatches == 0 && twin_ok == cases.len(),
        format!(
            "50 random series: {mismatches} bitwise mismatches; twin anomalies, copies found by \
             1st discord/2nd discord/Series2Graph: {} ({secs:.1} s)",
            notes.join(", ")
        ),
    ))
}

/// Every artifact of the pipeline, serialized.
fn pipeline_bytes() -> Result<Vec<String>> {
    let spec = srw(20_000, 8, 5.0, 9);
    let (t, ann) = generate_srw(&spec)?;
    let g = build_graph(&t, 50, 50, 42)?;
    let profile = normality_profile(&g, &t, 200, true)?;
    let ranking = rank_anomalies(&profile, 8)?;
    let report = top_k_accuracy(&ranking.positions(), &ann, 8, 200);
    let short = TimeSeries::new("short", t.values()[..1500].to_vec())?;
    let nn = nn_profile(&short, 100, 1)?;
    let mut sw = sweep_spec(srw(10_000, 4, 0.0, 2), vec![40, 60], vec![150]);
    sw.prefix = vec![0.5, 1.0];
    let mut reports = sweep(&sw)?;
    reports.iter_mut().for_each(|r| r.wall_time_ms = 0.0);
    Ok(vec![
        series_to_string(&t),
        serde_json::to_string(&SrwMetadata::new(&spec, &t))?,
        g.to_json()?,
        to_dot(&g),
        profile_to_csv(&profile)?,
        ranking_to_csv(&ranking, 50)?,
        serde_json::to_string(&report)?,
        nn_profile_to_csv(&nn)?,
        reports_to_jsonl(&reports)?,
    ])
}

fn c8_determinism() -> Result<Outcome> {
    let mut runs = BTreeMap::new();
    for threads in [1, 2, 4, 8] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("thread pool");
        runs.insert(threads, pool.install(pipeline_bytes)?);
    }
    let reference = &runs[&1];
    let differing: Vec<String> = runs
        .iter()
        .filter(|(_, r)| *r != reference)
        .map(|(t, _)| t.to_string())
        .collect();
    let repeat = pipeline_bytes()? == *reference;
    Ok(outcome(
        differing.is_empty() && repeat,
        format!(
            "{} artifacts byte-identical across 1/2/4/8 threads: {}, across repeated runs: {repeat}",
            reference.len(),
            differing.is_empty()
        ),
    ))
}

fn main() {
    type Criterion = fn() -> Result<Outcome>;
    let criteria: [(&str, Criterion); 8] = [
        ("synthetic accuracy", c1_synthetic_accuracy),
        ("noise robustness", c2_noise_robustness),
        ("length robustness", c3_length_robustness),
        ("prefix convergence", c4_prefix_convergence),
        ("normality lower bound", c5_normality_bound),
        ("numerical invariants", c6_numerical_invariants),
        ("oracle equivalence", c7_oracle_equivalence),
        ("determinism", c8_determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let result = run().unwrap_or_else(|e| outcome(false, format!("error: {e}")));
        let tag = if result.pass { "PASS" } else { "FAIL" };
        if !result.pass {
            failed += 1;
        }
        println!("{tag} criterion {} ({name}): {}", i + 1, result.detail);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
