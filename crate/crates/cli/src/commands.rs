use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::Serialize;

use series2graph::datagen::SrwMetadata;
use series2graph::eval::{reports_to_jsonl, summary_csv};
use series2graph::graph::DEFAULT_RAYS;
use series2graph::io;
use series2graph::{
    build_graph_with, generate_srw, nn_profile, normality_profile, rank_anomalies, sweep as run_sweep, to_dot,
    top_discords, top_k_accuracy, Bandwidth, DegreeMode, GraphConfig, PatternGraph, SrwSpec, SweepSpec,
};

const DEFAULT_SEED: &str = "42";

/// Prints the effective settings of a run to stderr.
fn echo<T: Serialize>(command: &str, resolved: &T) -> Result<()> {
    eprintln!("{command}: {}", serde_json::to_string(resolved)?);
    Ok(())
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("{}: cannot write", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(stdout.flush()?)
        }
    }
}

fn read_graph(path: &Path) -> Result<PatternGraph> {
    let text = fs::read_to_string(path).with_context(|| format!("{}: cannot read graph", path.display()))?;
    PatternGraph::from_json(&text).with_context(|| format!("{}: invalid graph file", path.display()))
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 100_000)]
    length: usize,
    #[arg(long, default_value_t = 20)]
    anomalies: usize,
    /// Noise standard deviation, percent of the base amplitude.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 200)]
    anomaly_len: usize,
    #[arg(long, env = "S2G_SEED", default_value = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 200.0)]
    base_period: f64,
    #[arg(long, default_value_t = 1.0)]
    base_amplitude: f64,
    #[arg(long, default_value_t = 0.01)]
    walk_step_std: f64,
    #[arg(long, default_value_t = 2.0)]
    anomaly_freq_multiplier: f64,
    /// Output prefix: writes PREFIX.series, PREFIX.anomalies and
    /// PREFIX.meta.json.
    #[arg(long, default_value = "srw")]
    out: PathBuf,
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn generate(a: GenerateArgs) -> Result<()> {
    echo("generate", &a)?;
    let spec = SrwSpec {
        length: a.length,
        num_anomalies: a.anomalies,
        noise_pct: a.noise,
        anomaly_len: a.anomaly_len,
        seed: a.seed,
        base_period: a.base_period,
        base_amplitude: a.base_amplitude,
        walk_step_std: a.walk_step_std,
        anomaly_freq_multiplier: a.anomaly_freq_multiplier,
    };
    let (series, annotations) = generate_srw(&spec)?;
    io::write_series(with_suffix(&a.out, ".series"), &series)?;
    io::write_annotations(with_suffix(&a.out, ".anomalies"), &annotations)?;
    let meta = serde_json::to_string_pretty(&SrwMetadata::new(&spec, &series))?;
    emit(Some(&with_suffix(&a.out, ".meta.json")), &(meta + "\n"))
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum DegreeArg {
    Edges,
    Neighbors,
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct BuildArgs {
    /// Series file, one value per line.
    #[arg(long)]
    input: PathBuf,
    /// Subsequence length.
    #[arg(long)]
    l: usize,
    /// Convolution window (default l/3).
    #[arg(long)]
    lambda: Option<usize>,
    /// Number of rays.
    #[arg(long, default_value_t = DEFAULT_RAYS)]
    r: usize,
    /// `scott` or a multiple of each radius set's standard deviation.
    #[arg(long, default_value = "scott")]
    #[serde(serialize_with = "as_display")]
    bandwidth: Bandwidth,
    #[arg(long, env = "S2G_SEED", default_value = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, value_enum, default_value = "edges")]
    degree_mode: DegreeArg,
    #[arg(long)]
    keep_self_loops: bool,
    /// Build on this fraction of the series only.
    #[arg(long, default_value_t = 1.0)]
    prefix: f64,
    /// Graph file to write.
    #[arg(long)]
    out: PathBuf,
}

fn as_display<T: std::fmt::Display, S: serde::Serializer>(v: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

pub fn build(mut a: BuildArgs) -> Result<()> {
    let lambda = *a.lambda.get_or_insert((a.l / 3).max(1));
    echo("build", &a)?;
    let series = io::load_series(&a.input)?;
    if !(a.prefix > 0.0 && a.prefix <= 1.0) {
        bail!("--prefix must lie in (0, 1], got {}", a.prefix);
    }
    let train_len = ((series.len() as f64 * a.prefix).floor() as usize).min(series.len());
    let train = if train_len < series.len() {
        series.prefix(train_len)?
    } else {
        series
    };
    if train.len() < a.l {
        bail!("series shorter than l ({} < {})", train.len(), a.l);
    }
    let mut config = GraphConfig::new(a.l)
        .with_lambda(lambda)
        .with_r(a.r)
        .with_seed(a.seed)
        .with_bandwidth(a.bandwidth);
    config.keep_self_loops = a.keep_self_loops;
    config.degree_mode = match a.degree_mode {
        DegreeArg::Edges => DegreeMode::DistinctEdges,
        DegreeArg::Neighbors => DegreeMode::DistinctNeighbors,
    };
    let g = build_graph_with(&train, &config)?;
    eprintln!(
        "build: {} nodes, {} edges, {} transitions",
        g.nodes.len(),
        g.edges.len(),
        g.total_weight()
    );
    emit(Some(&a.out), &g.to_json()?)
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct ScoreArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    input: PathBuf,
    /// Query length (default: the graph's l).
    #[arg(long)]
    lq: Option<usize>,
    /// Skip the moving-average filter.
    #[arg(long)]
    no_smooth: bool,
    /// Profile CSV (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn score(mut a: ScoreArgs) -> Result<()> {
    let g = read_graph(&a.graph)?;
    let lq = *a.lq.get_or_insert(g.l());
    echo("score", &a)?;
    if lq == g.l() {
        eprintln!("warning: lq equals l, so every window is a single point and scores 0; pass a larger --lq");
    }
    let series = io::load_series(&a.input)?;
    let profile = normality_profile(&g, &series, lq, !a.no_smooth)?;
    emit(a.out.as_deref(), &io::profile_to_csv(&profile)?)
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct RankArgs {
    #[arg(long)]
    profile: PathBuf,
    #[arg(long)]
    k: usize,
    /// Ranking CSV (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn rank(a: RankArgs) -> Result<()> {
    echo("rank", &a)?;
    let profile = io::load_profile(&a.profile)?;
    let ranking = rank_anomalies(&profile, a.k)?;
    if ranking.truncated {
        eprintln!("warning: only {} of {} positions survive masking", ranking.anomalies.len(), a.k);
    }
    emit(a.out.as_deref(), &io::ranking_to_csv(&ranking, profile.l)?)
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct EvalArgs {
    #[arg(long)]
    ranking: PathBuf,
    #[arg(long)]
    annotations: PathBuf,
    /// Predictions to score (default: every ranked position).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value = "")]
    dataset: String,
    #[arg(long, default_value = "series2graph")]
    method: String,
    /// Report JSON (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn eval(mut a: EvalArgs) -> Result<()> {
    let ranking = io::load_ranking(&a.ranking)?;
    let k = *a.k.get_or_insert(ranking.anomalies.len());
    echo("eval", &a)?;
    let annotations = io::load_annotations(&a.annotations)?;
    let report = top_k_accuracy(&ranking.positions(), &annotations, k, ranking.lq).with_labels(&a.dataset, &a.method);
    eprintln!("eval: {} of {} hit, accuracy {}", report.hits, report.k, report.accuracy);
    emit(a.out.as_deref(), &(serde_json::to_string_pretty(&report)? + "\n"))
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct SweepArgs {
    /// Sweep description, TOML or JSON (`.json`).
    #[arg(long)]
    spec: PathBuf,
    /// JSON-lines reports (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Summary CSV, one row per grid point.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Report wall time as 0 so reruns are byte-identical.
    #[arg(long)]
    no_timing: bool,
}

pub fn sweep(a: SweepArgs) -> Result<()> {
    let spec = SweepSpec::load(&a.spec)?;
    echo("sweep", &a)?;
    echo("sweep spec", &spec)?;
    let mut reports = run_sweep(&spec)?;
    if a.no_timing {
        reports.iter_mut().for_each(|r| r.wall_time_ms = 0.0);
    }
    let failed = reports.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        eprintln!("warning: {failed} of {} grid points failed", reports.len());
    }
    if let Some(p) = &a.summary {
        emit(Some(p), &summary_csv(&reports))?;
    }
    emit(a.out.as_deref(), &reports_to_jsonl(&reports)?)
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum GraphFormat {
    Dot,
    Json,
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct ExportArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, value_enum, default_value = "dot")]
    format: GraphFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn export_graph(a: ExportArgs) -> Result<()> {
    echo("export-graph", &a)?;
    let g = read_graph(&a.graph)?;
    let text = match a.format {
        GraphFormat::Dot => to_dot(&g),
        GraphFormat::Json => g.export_json()? + "\n",
    };
    emit(a.out.as_deref(), &text)
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct DiscordArgs {
    #[arg(long)]
    input: PathBuf,
    /// Subsequence length.
    #[arg(long)]
    l: usize,
    /// Neighbour order: the m-th nearest neighbour distance is used.
    #[arg(long, default_value_t = 1)]
    m: usize,
    /// Also rank the top k discords into --ranking-out.
    #[arg(long)]
    k: Option<usize>,
    /// Distance profile CSV (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Discord ranking CSV, `rank,position,score`.
    #[arg(long, requires = "k")]
    ranking_out: Option<PathBuf>,
}

pub fn discord(a: DiscordArgs) -> Result<()> {
    echo("discord", &a)?;
    let series = io::load_series(&a.input)?;
    let profile = nn_profile(&series, a.l, a.m)?;
    if let Some(k) = a.k {
        let d = top_discords(&profile, k)?;
        if d.truncated {
            eprintln!("warning: only {} of {k} discords survive masking", d.positions.len());
        }
        let mut text = format!("# lq={},l={},m={}\nrank,position,score\n", a.l, a.l, a.m);
        for (i, &p) in d.positions.iter().enumerate() {
            text.push_str(&format!("{},{},{}\n", i + 1, p, profile.distances[p]));
        }
        match &a.ranking_out {
            Some(p) => emit(Some(p), &text)?,
            None => eprint!("{text}"),
        }
    }
    emit(a.out.as_deref(), &io::nn_profile_to_csv(&profile)?)
}
